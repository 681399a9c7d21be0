#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hydrocla {

/// Litres per second per cubic metre per second. Files use l/s, the library SI.
inline constexpr double kLitresPerCubicMetre = 1000.0;

struct Node {
  std::string id;
  double demand = 0.0;  ///< m^3/s
};

struct FixedHeadNode {
  std::string id;
  double head = 0.0;  ///< m, may be negative
};

struct Pipe {
  std::string from;
  std::string to;
  double length = 0.0;    ///< m
  double diameter = 0.0;  ///< m
  double chw = 0.0;       ///< Hazen-Williams roughness
};

/// Head gain h = a - b * Q^c with Q in l/s, acting from `from` to `to`.
struct Pump {
  std::string from;
  std::string to;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

enum class LinkKind { pipe, pump };

/// How the three pump coefficients form the head gain (Q in l/s):
///   power:     h = A - B Q^C
///   quadratic: h = A - C Q^2  (B unused)
enum class PumpCurve { power, quadratic };

const char* to_string(PumpCurve curve);

/// A link resolved to node indices. Pipes come first, then pumps, both in file
/// order; this combined index is the "link index" used everywhere else.
struct LinkRef {
  LinkKind kind;
  std::size_t index;  ///< into pipes() or pumps()
  std::size_t from;   ///< node index
  std::size_t to;     ///< node index
};

/// Physical network description. Immutable once built; the constructor does
/// not validate, use validate() or parse_network() for that.
class Network {
 public:
  Network() = default;
  Network(std::vector<Node> nodes, std::vector<Pipe> pipes, std::vector<Pump> pumps,
          std::vector<FixedHeadNode> fixed_heads, PumpCurve pump_curve = PumpCurve::power);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Pipe>& pipes() const noexcept { return pipes_; }
  const std::vector<Pump>& pumps() const noexcept { return pumps_; }
  const std::vector<FixedHeadNode>& fixed_heads() const noexcept { return fixed_heads_; }
  PumpCurve pump_curve() const noexcept { return pump_curve_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t link_count() const noexcept { return pipes_.size() + pumps_.size(); }
  std::size_t fixed_head_count() const noexcept { return fixed_heads_.size(); }

  std::optional<std::size_t> find_node(std::string_view id) const;

  /// Link index plus orientation (+1 when stored from->to, -1 when reversed).
  struct LinkMatch {
    std::size_t link;
    int orientation;
  };
  std::optional<LinkMatch> find_link(std::string_view from, std::string_view to) const;

  /// Requires a valid network (all endpoints resolvable).
  LinkRef link(std::size_t link_index) const;
  std::string link_label(std::size_t link_index) const;

  /// Node indices of the fixed-head nodes, in file order.
  std::vector<std::size_t> fixed_head_nodes() const;
  std::vector<double> fixed_head_values() const;
  std::optional<std::size_t> fixed_head_slot(std::size_t node_index) const;

  /// Demands in m^3/s, node order.
  std::vector<double> demands() const;

  /// Copy with the nodal demands (m^3/s) and/or fixed-head values replaced.
  Network with_demands(const std::vector<double>& demands) const;
  Network with_fixed_heads(const std::vector<double>& heads) const;

  bool operator==(const Network& other) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Pipe> pipes_;
  std::vector<Pump> pumps_;
  std::vector<FixedHeadNode> fixed_heads_;
  PumpCurve pump_curve_ = PumpCurve::power;
  std::unordered_map<std::string, std::size_t> node_index_;
};

/// Returns every violated invariant; empty iff the network is valid.
std::vector<std::string> validate(const Network& net);

/// Parses the sectioned network text format and validates the result.
/// Throws ParseError (with line number) or ValidationError.
Network parse_network(std::string_view text);

/// Writes the text format; parse_network(serialize_network(n)) == n.
std::string serialize_network(const Network& net);

/// Reads a demand override file: `id demand_lps` per line (optionally under a
/// `[DEMANDS]` header). Returns node-ordered demands in m^3/s, starting from
/// the network's own demands.
std::vector<double> parse_demands(std::string_view text, const Network& net);

struct HeadMeter {
  std::string node;
  double value = 0.0;          ///< m
  double rel_precision = 0.0;  ///< fraction; 0 = exact
};

struct FlowMeter {
  std::string from;
  std::string to;
  double value = 0.0;          ///< m^3/s, positive from -> to
  double rel_precision = 0.0;  ///< fraction; 0 = exact
};

/// Error bounds of the pseudo-measurements plus optional real meters.
struct MeasurementSet {
  double default_demand_bound = 0.20;  ///< relative half-width
  std::map<std::string, double> demand_bounds;
  double default_fixed_head_bound = 0.01;  ///< absolute half-width, m
  std::map<std::string, double> fixed_head_bounds;
  std::vector<HeadMeter> head_meters;
  std::vector<FlowMeter> flow_meters;

  double demand_bound(const std::string& node_id) const;
  double fixed_head_bound(const std::string& node_id) const;
};

std::vector<std::string> validate(const MeasurementSet& meas, const Network& net);

/// Parses the measurement text format; validates against `net`.
MeasurementSet parse_measurements(std::string_view text, const Network& net);

std::string serialize_measurements(const MeasurementSet& meas);

}  // namespace hydrocla
