#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hydrocla/estimator.hpp"
#include "hydrocla/network.hpp"
#include "hydrocla/numerics.hpp"
#include "hydrocla/simulator.hpp"

namespace hydrocla {

enum class MeasurementKind { demand, fixed_head, head_meter, flow_meter };

const char* to_string(MeasurementKind kind);

/// Measurement vector z with symmetric unknown-but-bounded errors.
/// Layout: n demands (m^3/s, node order), f fixed heads (m, file order),
/// head meters (m), flow meters (m^3/s), meters in MeasurementSet order.
struct BoundedMeasurementVector {
  DenseVector values;
  DenseVector half_widths;
  std::vector<MeasurementKind> kinds;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return kinds.size(); }
  DenseVector lower() const { return values - half_widths; }
  DenseVector upper() const { return values + half_widths; }
};

/// z as read from the network and measurement files. Relative bounds become
/// absolute half-widths against these values.
BoundedMeasurementVector measurement_vector(const Network& net, const MeasurementSet& meas);

/// Same layout with new values; relative half-widths are recomputed against them.
BoundedMeasurementVector rebound(const Network& net, const MeasurementSet& meas,
                                 const DenseVector& values);

/// Runs the estimator with every entry of z substituted into the network
/// (demands, fixed heads) and the measurement set (meter readings).
EstimateResult estimate_at(const Network& net, const MeasurementSet& meas,
                           const DenseVector& z, const SolverOptions& opts = {});

/// One row per state variable: heads then boundary flows, e.g. "H 13", "Q 30".
std::vector<std::string> state_labels(const Network& net);

struct ClaOptions {
  SolverOptions solver;
  /// ESM worker threads; columns are written by index so the result does not
  /// depend on this.
  unsigned threads = 1;
  /// ESM central differences (two runs per column) instead of upper-bound ones.
  bool two_sided = false;
  /// When set, incremented once per estimator run.
  std::atomic<std::size_t>* run_counter = nullptr;
};

struct SensitivityMatrix {
  DenseMatrix entries;  ///< state variables x measurements
  HydraulicState base_state;
  DenseVector base_vector;  ///< state_vector(base_state)
  std::size_t estimator_runs = 0;
};

/// Experimental sensitivity matrix: column j is the state change per unit
/// change of z_j, with z_j moved by its half-width. Zero-width columns stay
/// zero and cost no run. Throws NotConverged naming the column.
SensitivityMatrix build_esm(const Network& net, const MeasurementSet& meas,
                            const BoundedMeasurementVector& z, const ClaOptions& opts = {});

enum class ClaMethod { esm, em_upper, em_lower };

const char* to_string(ClaMethod method);

struct ConfidenceLimits {
  DenseVector values;  ///< heads in m, boundary flows in l/s
  ClaMethod method = ClaMethod::esm;
};

/// Worst case of s * delta over the box |delta_j| <= half_width_j.
ConfidenceLimits cla_from_esm(const SensitivityMatrix& s, const DenseVector& half_widths);

struct PerturbationReport {
  std::size_t trials = 0;
  std::size_t skipped = 0;  ///< trials whose estimate did not converge
  DenseVector max_difference;  ///< per state variable, over trials
  double max_head_difference = 0.0;  ///< m
  double max_flow_difference = 0.0;  ///< l/s
};

/// Uniform draw in [-1, 1) from a counter-based generator; the same
/// (seed, counter) always gives the same value.
double counter_uniform(std::uint64_t seed, std::uint64_t counter);

/// Compares the estimator response to random in-box perturbations with the
/// linear ESM prediction for the same perturbation.
PerturbationReport random_perturbation_check(const Network& net, const MeasurementSet& meas,
                                             const BoundedMeasurementVector& z,
                                             const SensitivityMatrix& s, std::size_t trials,
                                             std::uint64_t seed, const ClaOptions& opts = {});

enum class BoundChoice { upper, lower, both };

struct TTestResult {
  double t = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
  double mean_difference = 0.0;
};

/// Paired two-sided Student's t-test on a - b.
TTestResult paired_t_test(const DenseVector& a, const DenseVector& b);

struct EmResult {
  HydraulicState base_state;
  DenseVector base_vector;
  BoundedMeasurementVector estimated_z;  ///< z-hat
  std::optional<ConfidenceLimits> upper;
  std::optional<ConfidenceLimits> lower;
  std::optional<TTestResult> t_test;  ///< only for BoundChoice::both
  std::size_t estimator_runs = 0;
};

/// Error maximisation: estimate on z, rebuild z-hat from that estimate, push
/// every entry of z-hat to one bound, estimate again and take |x1 - x-hat|.
EmResult em_confidence_limits(const Network& net, const MeasurementSet& meas,
                              const BoundedMeasurementVector& z, BoundChoice bound,
                              const ClaOptions& opts = {});

struct PlacementDelta {
  DenseVector delta;  ///< with_meter - baseline
  std::vector<std::size_t> increased;  ///< rows whose CL grew by more than the tolerance
};

PlacementDelta meter_placement_report(const ConfidenceLimits& baseline,
                                      const ConfidenceLimits& with_meter,
                                      double tolerance = 1e-9);

}  // namespace hydrocla
