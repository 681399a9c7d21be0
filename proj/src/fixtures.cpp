#include "hydrocla/fixtures.hpp"

#include <array>
#include <utility>

#include "hydrocla/errors.hpp"

namespace hydrocla {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kFixtureFiles[];
extern const std::size_t kFixtureFileCount;
}  // namespace detail

namespace {

struct FixtureSpec {
  std::string_view name;
  std::string_view network;
  std::string_view measurements;
};

constexpr std::array<FixtureSpec, 7> kFixtures{{
    {"net34", "net34.net", "net34.meas"},
    {"net34_observed", "net34_observed.net", "net34.meas"},
    {"net34_case2", "net34_observed.net", "net34_case2.meas"},
    {"net34_case3", "net34_observed.net", "net34_case3.meas"},
    {"net65", "net65.net", "net65.meas"},
    {"net65_case2", "net65.net", "net65_case2.meas"},
    {"net65_case3", "net65.net", "net65_case3.meas"},
}};

}  // namespace

std::vector<std::string> fixture_names() {
  std::vector<std::string> out;
  for (const auto& f : kFixtures) out.emplace_back(f.name);
  return out;
}

std::string_view fixture_text(std::string_view file) {
  for (std::size_t i = 0; i < detail::kFixtureFileCount; ++i) {
    if (detail::kFixtureFiles[i].first == file) return detail::kFixtureFiles[i].second;
  }
  throw Error("no bundled fixture file " + std::string(file));
}

Fixture load_fixture(std::string_view name) {
  for (const auto& f : kFixtures) {
    if (f.name != name) continue;
    Fixture out;
    out.network = parse_network(fixture_text(f.network));
    out.measurements = parse_measurements(fixture_text(f.measurements), out.network);
    return out;
  }
  throw Error("unknown fixture " + std::string(name));
}

}  // namespace hydrocla
