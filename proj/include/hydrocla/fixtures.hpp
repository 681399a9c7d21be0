#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hydrocla/network.hpp"

namespace hydrocla {

/// A bundled benchmark case: network plus measurement set.
struct Fixture {
  Network network;
  MeasurementSet measurements;
};

/// Names accepted by load_fixture, in a fixed order:
///   net34, net34_observed, net34_case2, net34_case3, net65, net65_case2, net65_case3.
/// The net34 meter cases use the observed network.
std::vector<std::string> fixture_names();

/// Throws Error for an unknown name.
Fixture load_fixture(std::string_view name);

/// Raw text of a bundled file such as "net34.net". Throws Error if absent.
std::string_view fixture_text(std::string_view file);

}  // namespace hydrocla
