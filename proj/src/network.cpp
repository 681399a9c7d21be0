#include "hydrocla/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

#include "hydrocla/errors.hpp"

namespace hydrocla {

const char* to_string(PumpCurve curve) {
  return curve == PumpCurve::quadratic ? "quadratic" : "power";
}

Network::Network(std::vector<Node> nodes, std::vector<Pipe> pipes, std::vector<Pump> pumps,
                 std::vector<FixedHeadNode> fixed_heads, PumpCurve pump_curve)
    : nodes_(std::move(nodes)),
      pipes_(std::move(pipes)),
      pumps_(std::move(pumps)),
      fixed_heads_(std::move(fixed_heads)),
      pump_curve_(pump_curve) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) node_index_.emplace(nodes_[i].id, i);
}

std::optional<std::size_t> Network::find_node(std::string_view id) const {
  auto it = node_index_.find(std::string(id));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Network::LinkMatch> Network::find_link(std::string_view from,
                                                     std::string_view to) const {
  auto match = [&](const std::string& f, const std::string& t) -> int {
    if (f == from && t == to) return 1;
    if (f == to && t == from) return -1;
    return 0;
  };
  for (std::size_t i = 0; i < pipes_.size(); ++i) {
    if (int o = match(pipes_[i].from, pipes_[i].to)) return LinkMatch{i, o};
  }
  for (std::size_t i = 0; i < pumps_.size(); ++i) {
    if (int o = match(pumps_[i].from, pumps_[i].to)) return LinkMatch{pipes_.size() + i, o};
  }
  return std::nullopt;
}

LinkRef Network::link(std::size_t link_index) const {
  if (link_index < pipes_.size()) {
    const Pipe& p = pipes_[link_index];
    return {LinkKind::pipe, link_index, *find_node(p.from), *find_node(p.to)};
  }
  const std::size_t k = link_index - pipes_.size();
  const Pump& p = pumps_.at(k);
  return {LinkKind::pump, k, *find_node(p.from), *find_node(p.to)};
}

std::string Network::link_label(std::size_t link_index) const {
  if (link_index < pipes_.size()) {
    return "pipe " + pipes_[link_index].from + "-" + pipes_[link_index].to;
  }
  const Pump& p = pumps_.at(link_index - pipes_.size());
  return "pump " + p.from + "-" + p.to;
}

std::vector<std::size_t> Network::fixed_head_nodes() const {
  std::vector<std::size_t> out;
  out.reserve(fixed_heads_.size());
  for (const auto& f : fixed_heads_) out.push_back(*find_node(f.id));
  return out;
}

std::vector<double> Network::fixed_head_values() const {
  std::vector<double> out;
  out.reserve(fixed_heads_.size());
  for (const auto& f : fixed_heads_) out.push_back(f.head);
  return out;
}

std::optional<std::size_t> Network::fixed_head_slot(std::size_t node_index) const {
  for (std::size_t k = 0; k < fixed_heads_.size(); ++k) {
    if (fixed_heads_[k].id == nodes_.at(node_index).id) return k;
  }
  return std::nullopt;
}

std::vector<double> Network::demands() const {
  std::vector<double> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.demand);
  return out;
}

Network Network::with_demands(const std::vector<double>& demands) const {
  if (demands.size() != nodes_.size()) throw Error("with_demands: size mismatch");
  Network copy = *this;
  for (std::size_t i = 0; i < nodes_.size(); ++i) copy.nodes_[i].demand = demands[i];
  return copy;
}

Network Network::with_fixed_heads(const std::vector<double>& heads) const {
  if (heads.size() != fixed_heads_.size()) throw Error("with_fixed_heads: size mismatch");
  Network copy = *this;
  for (std::size_t i = 0; i < fixed_heads_.size(); ++i) copy.fixed_heads_[i].head = heads[i];
  return copy;
}

bool Network::operator==(const Network& o) const {
  auto node_eq = [](const Node& a, const Node& b) { return a.id == b.id && a.demand == b.demand; };
  auto fh_eq = [](const FixedHeadNode& a, const FixedHeadNode& b) {
    return a.id == b.id && a.head == b.head;
  };
  auto pipe_eq = [](const Pipe& a, const Pipe& b) {
    return a.from == b.from && a.to == b.to && a.length == b.length &&
           a.diameter == b.diameter && a.chw == b.chw;
  };
  auto pump_eq = [](const Pump& a, const Pump& b) {
    return a.from == b.from && a.to == b.to && a.a == b.a && a.b == b.b && a.c == b.c;
  };
  return pump_curve_ == o.pump_curve_ &&
         std::equal(nodes_.begin(), nodes_.end(), o.nodes_.begin(), o.nodes_.end(), node_eq) &&
         std::equal(pipes_.begin(), pipes_.end(), o.pipes_.begin(), o.pipes_.end(), pipe_eq) &&
         std::equal(pumps_.begin(), pumps_.end(), o.pumps_.begin(), o.pumps_.end(), pump_eq) &&
         std::equal(fixed_heads_.begin(), fixed_heads_.end(), o.fixed_heads_.begin(),
                    o.fixed_heads_.end(), fh_eq);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Edge {
  std::string from;
  std::string to;
  std::string label;
};

std::vector<Edge> edges_of(const Network& net) {
  std::vector<Edge> edges;
  for (const auto& p : net.pipes()) edges.push_back({p.from, p.to, "pipe " + p.from + "-" + p.to});
  for (const auto& p : net.pumps()) edges.push_back({p.from, p.to, "pump " + p.from + "-" + p.to});
  return edges;
}

void check_connectivity(const Network& net, std::vector<std::string>& out) {
  const std::size_t n = net.node_count();
  if (n == 0) return;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges_of(net)) {
    auto a = net.find_node(e.from);
    auto b = net.find_node(e.to);
    if (a && b) parent[find(*a)] = find(*b);
  }
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < n; ++i) components[find(i)].push_back(i);
  if (components.size() <= 1) return;

  // Keep the largest component (first in node order on ties); report the rest.
  auto largest = components.begin();
  for (auto it = components.begin(); it != components.end(); ++it) {
    if (it->second.size() > largest->second.size() ||
        (it->second.size() == largest->second.size() &&
         it->second.front() < largest->second.front())) {
      largest = it;
    }
  }
  std::vector<std::size_t> stray;
  for (auto it = components.begin(); it != components.end(); ++it) {
    if (it != largest) stray.insert(stray.end(), it->second.begin(), it->second.end());
  }
  std::sort(stray.begin(), stray.end());
  std::string msg = "network is not connected; nodes unreachable from the main component:";
  for (std::size_t i : stray) msg += " " + net.nodes()[i].id;
  out.push_back(std::move(msg));
}

}  // namespace

std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& n : net.nodes()) {
    if (!seen.insert(n.id).second) out.push_back("duplicate node id " + n.id);
    if (!std::isfinite(n.demand)) out.push_back("node " + n.id + " has a non-finite demand");
  }
  if (net.node_count() == 0) out.push_back("network has no nodes");

  if (net.fixed_heads().empty()) out.push_back("network has no fixed-head node");
  std::set<std::string> fixed_seen;
  for (const auto& f : net.fixed_heads()) {
    if (!net.find_node(f.id)) out.push_back("fixed head references unknown node " + f.id);
    if (!fixed_seen.insert(f.id).second) out.push_back("duplicate fixed head at node " + f.id);
    if (!std::isfinite(f.head)) out.push_back("fixed head at node " + f.id + " is not finite");
  }

  auto check_ends = [&](const std::string& label, const std::string& from, const std::string& to) {
    if (!net.find_node(from)) out.push_back(label + " references unknown node " + from);
    if (!net.find_node(to)) out.push_back(label + " references unknown node " + to);
    if (from == to) out.push_back(label + " connects a node to itself");
  };
  for (const auto& p : net.pipes()) {
    const std::string label = "pipe " + p.from + "-" + p.to;
    check_ends(label, p.from, p.to);
    if (!(p.length > 0.0) || !std::isfinite(p.length)) out.push_back(label + " has non-positive length");
    if (!(p.diameter > 0.0) || !std::isfinite(p.diameter)) out.push_back(label + " has non-positive diameter");
    if (!(p.chw > 0.0) || !std::isfinite(p.chw)) out.push_back(label + " has non-positive roughness coefficient");
  }
  for (const auto& p : net.pumps()) {
    const std::string label = "pump " + p.from + "-" + p.to;
    check_ends(label, p.from, p.to);
    if (!(p.a > 0.0) || !std::isfinite(p.a)) out.push_back(label + " has non-positive shutoff head");
    if (!(p.b >= 0.0) || !std::isfinite(p.b)) out.push_back(label + " has a negative curve coefficient");
    if (!(p.c > 0.0) || !std::isfinite(p.c)) out.push_back(label + " has a non-positive curve exponent");
  }
  check_connectivity(net, out);
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string_view> fields;
};

/// Splits into non-empty, comment-stripped lines of whitespace-separated fields.
std::vector<Line> tokenize(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string_view raw = text.substr(pos, end - pos);
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      std::size_t j = i;
      while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
      if (j > i) line.fields.push_back(raw.substr(i, j - i));
      i = j;
    }
    if (!line.fields.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    pos = end + 1;
  }
  return lines;
}

double to_number(std::string_view field, std::size_t line) {
  std::string s(field);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError(line, "expected a number, got '" + s + "'");
  }
  return v;
}

void expect_fields(const Line& line, std::size_t count, std::string_view section) {
  if (line.fields.size() != count) {
    throw ParseError(line.number, "section " + std::string(section) + " expects " +
                                      std::to_string(count) + " fields, got " +
                                      std::to_string(line.fields.size()));
  }
}

std::optional<std::string_view> section_name(const Line& line) {
  if (line.fields.size() == 1 && line.fields[0].size() >= 2 && line.fields[0].front() == '[' &&
      line.fields[0].back() == ']') {
    return line.fields[0].substr(1, line.fields[0].size() - 2);
  }
  return std::nullopt;
}

/// Shortest decimal that parses back to the same double.
std::string format_real(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// l/s text for a m^3/s value such that parsing it and dividing by 1000 gives
/// the same double back.
std::string format_lps(double m3s) {
  double lps = m3s * kLitresPerCubicMetre;
  for (int step = 0; step < 8; ++step) {
    for (double candidate : {lps, std::nextafter(lps, -INFINITY), std::nextafter(lps, INFINITY)}) {
      std::string s = format_real(candidate);
      if (std::strtod(s.c_str(), nullptr) / kLitresPerCubicMetre == m3s) return s;
    }
    lps = std::nextafter(lps, m3s >= 0 ? INFINITY : -INFINITY);
  }
  return format_real(m3s * kLitresPerCubicMetre);
}

}  // namespace

Network parse_network(std::string_view text) {
  std::vector<Node> nodes;
  std::vector<Pipe> pipes;
  std::vector<Pump> pumps;
  std::vector<FixedHeadNode> fixed;
  PumpCurve curve = PumpCurve::power;
  std::string section;
  for (const Line& line : tokenize(text)) {
    if (auto name = section_name(line)) {
      section = std::string(*name);
      if (section != "NODES" && section != "FIXED_HEADS" && section != "PIPES" &&
          section != "PUMPS" && section != "OPTIONS") {
        throw ParseError(line.number, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto& f = line.fields;
    if (section.empty()) throw ParseError(line.number, "data before the first section header");
    if (section == "NODES") {
      expect_fields(line, 2, section);
      const double lps = to_number(f[1], line.number);
      if (lps < 0.0) throw ParseError(line.number, "negative demand at node " + std::string(f[0]));
      nodes.push_back({std::string(f[0]), lps / kLitresPerCubicMetre});
    } else if (section == "FIXED_HEADS") {
      expect_fields(line, 2, section);
      fixed.push_back({std::string(f[0]), to_number(f[1], line.number)});
    } else if (section == "PIPES") {
      expect_fields(line, 5, section);
      pipes.push_back({std::string(f[0]), std::string(f[1]), to_number(f[2], line.number),
                       to_number(f[3], line.number), to_number(f[4], line.number)});
    } else if (section == "OPTIONS") {
      expect_fields(line, 2, section);
      if (f[0] != "pump_curve") {
        throw ParseError(line.number, "unknown option " + std::string(f[0]));
      }
      if (f[1] == "power") {
        curve = PumpCurve::power;
      } else if (f[1] == "quadratic") {
        curve = PumpCurve::quadratic;
      } else {
        throw ParseError(line.number, "pump_curve must be power or quadratic");
      }
    } else {
      expect_fields(line, 5, section);
      pumps.push_back({std::string(f[0]), std::string(f[1]), to_number(f[2], line.number),
                       to_number(f[3], line.number), to_number(f[4], line.number)});
    }
  }
  Network net(std::move(nodes), std::move(pipes), std::move(pumps), std::move(fixed), curve);
  if (auto violations = validate(net); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return net;
}

std::string serialize_network(const Network& net) {
  std::ostringstream os;
  if (net.pump_curve() != PumpCurve::power) {
    os << "[OPTIONS]\npump_curve " << to_string(net.pump_curve()) << "\n\n";
  }
  os << "[NODES]\n";
  for (const auto& n : net.nodes()) os << n.id << ' ' << format_lps(n.demand) << '\n';
  os << "\n[FIXED_HEADS]\n";
  for (const auto& f : net.fixed_heads()) os << f.id << ' ' << format_real(f.head) << '\n';
  os << "\n[PIPES]\n";
  for (const auto& p : net.pipes()) {
    os << p.from << ' ' << p.to << ' ' << format_real(p.length) << ' ' << format_real(p.diameter)
       << ' ' << format_real(p.chw) << '\n';
  }
  if (!net.pumps().empty()) {
    os << "\n[PUMPS]\n";
    for (const auto& p : net.pumps()) {
      os << p.from << ' ' << p.to << ' ' << format_real(p.a) << ' ' << format_real(p.b) << ' '
         << format_real(p.c) << '\n';
    }
  }
  return os.str();
}

std::vector<double> parse_demands(std::string_view text, const Network& net) {
  std::vector<double> demands = net.demands();
  for (const Line& line : tokenize(text)) {
    if (auto name = section_name(line)) {
      if (*name != "DEMANDS" && *name != "NODES") {
        throw ParseError(line.number, "unknown section [" + std::string(*name) + "]");
      }
      continue;
    }
    expect_fields(line, 2, "DEMANDS");
    auto idx = net.find_node(line.fields[0]);
    if (!idx) throw ParseError(line.number, "unknown node " + std::string(line.fields[0]));
    const double lps = to_number(line.fields[1], line.number);
    if (lps < 0.0) throw ParseError(line.number, "negative demand");
    demands[*idx] = lps / kLitresPerCubicMetre;
  }
  return demands;
}

// ---------------------------------------------------------------------------
// Measurement sets

double MeasurementSet::demand_bound(const std::string& node_id) const {
  auto it = demand_bounds.find(node_id);
  return it == demand_bounds.end() ? default_demand_bound : it->second;
}

double MeasurementSet::fixed_head_bound(const std::string& node_id) const {
  auto it = fixed_head_bounds.find(node_id);
  return it == fixed_head_bounds.end() ? default_fixed_head_bound : it->second;
}

std::vector<std::string> validate(const MeasurementSet& meas, const Network& net) {
  std::vector<std::string> out;
  auto non_negative = [&](double v, const std::string& what) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(what + " must be a finite value >= 0");
  };
  non_negative(meas.default_demand_bound, "default demand bound");
  non_negative(meas.default_fixed_head_bound, "default fixed-head bound");
  for (const auto& [id, v] : meas.demand_bounds) {
    if (!net.find_node(id)) out.push_back("demand bound references unknown node " + id);
    non_negative(v, "demand bound at node " + id);
  }
  for (const auto& [id, v] : meas.fixed_head_bounds) {
    auto idx = net.find_node(id);
    if (!idx || !net.fixed_head_slot(*idx)) {
      out.push_back("fixed-head bound references node " + id + " which is not a fixed head");
    }
    non_negative(v, "fixed-head bound at node " + id);
  }
  for (const auto& m : meas.head_meters) {
    if (!net.find_node(m.node)) out.push_back("head meter references unknown node " + m.node);
    non_negative(m.rel_precision, "head meter precision at node " + m.node);
  }
  for (const auto& m : meas.flow_meters) {
    if (!net.find_link(m.from, m.to)) {
      out.push_back("flow meter references unknown link " + m.from + "-" + m.to);
    }
    non_negative(m.rel_precision, "flow meter precision on " + m.from + "-" + m.to);
  }
  return out;
}

MeasurementSet parse_measurements(std::string_view text, const Network& net) {
  MeasurementSet meas;
  std::string section;
  for (const Line& line : tokenize(text)) {
    if (auto name = section_name(line)) {
      section = std::string(*name);
      if (section != "DEMAND_BOUNDS" && section != "FIXED_HEAD_BOUNDS" &&
          section != "HEAD_METERS" && section != "FLOW_METERS") {
        throw ParseError(line.number, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto& f = line.fields;
    if (section.empty()) throw ParseError(line.number, "data before the first section header");
    if (section == "DEMAND_BOUNDS" || section == "FIXED_HEAD_BOUNDS") {
      expect_fields(line, 2, section);
      const double v = to_number(f[1], line.number);
      const bool demand = section == "DEMAND_BOUNDS";
      if (f[0] == "default") {
        (demand ? meas.default_demand_bound : meas.default_fixed_head_bound) = v;
      } else {
        (demand ? meas.demand_bounds : meas.fixed_head_bounds)[std::string(f[0])] = v;
      }
    } else if (section == "HEAD_METERS") {
      expect_fields(line, 3, section);
      meas.head_meters.push_back(
          {std::string(f[0]), to_number(f[1], line.number), to_number(f[2], line.number)});
    } else {
      expect_fields(line, 4, section);
      meas.flow_meters.push_back({std::string(f[0]), std::string(f[1]),
                                  to_number(f[2], line.number) / kLitresPerCubicMetre,
                                  to_number(f[3], line.number)});
    }
  }
  if (auto violations = validate(meas, net); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return meas;
}

std::string serialize_measurements(const MeasurementSet& meas) {
  std::ostringstream os;
  os << "[DEMAND_BOUNDS]\ndefault " << format_real(meas.default_demand_bound) << '\n';
  for (const auto& [id, v] : meas.demand_bounds) os << id << ' ' << format_real(v) << '\n';
  os << "\n[FIXED_HEAD_BOUNDS]\ndefault " << format_real(meas.default_fixed_head_bound) << '\n';
  for (const auto& [id, v] : meas.fixed_head_bounds) os << id << ' ' << format_real(v) << '\n';
  if (!meas.head_meters.empty()) {
    os << "\n[HEAD_METERS]\n";
    for (const auto& m : meas.head_meters) {
      os << m.node << ' ' << format_real(m.value) << ' ' << format_real(m.rel_precision) << '\n';
    }
  }
  if (!meas.flow_meters.empty()) {
    os << "\n[FLOW_METERS]\n";
    for (const auto& m : meas.flow_meters) {
      os << m.from << ' ' << m.to << ' ' << format_lps(m.value) << ' '
         << format_real(m.rel_precision) << '\n';
    }
  }
  return os.str();
}

}  // namespace hydrocla
