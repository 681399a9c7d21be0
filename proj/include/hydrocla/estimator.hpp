#pragma once

#include <string>
#include <vector>

#include "hydrocla/network.hpp"
#include "hydrocla/numerics.hpp"
#include "hydrocla/simulator.hpp"
#include "hydrocla/topology.hpp"

namespace hydrocla {

/// Weight given to a meter with zero relative precision.
inline constexpr double kExactMeterWeight = 1e8;

/// Loop closure tolerance (m) for the loop solves inside the estimator; the
/// smaller of this and SolverOptions::tol_loop_residual is used.
inline constexpr double kEstimatorLoopTolerance = 1e-10;

struct EstimatorState {
  DenseVector delta_q;  ///< loop corrective flows, m^3/s
  DenseVector delta_d;  ///< demand variations, m^3/s, node order
  bool converged = false;
  int iterations = 0;  ///< Gauss-Newton iterations
  double objective = 0.0;  ///< weighted sum of squares at the solution
  std::vector<double> objective_history;  ///< at the start and after each accepted step
};

struct EstimateResult {
  HydraulicState state;
  DenseVector adjusted_demands;  ///< d_f, m^3/s, node order
  std::vector<std::string> clamped_nodes;
  bool second_pass_used = false;
  EstimatorState estimator;
  int loop_iterations = 0;  ///< Newton iterations summed over every loop solve
};

/// Predicted meter readings for a state: head meters (m) then flow meters
/// (m^3/s, positive in the meter's from -> to direction).
DenseVector predict_meters(const Network& net, const MeasurementSet& meas,
                           const HydraulicState& state);

/// Least-squares estimate with loop corrective flows and demand variations as
/// the unknowns. The loop energy equations are met exactly at every iterate;
/// the demand variations minimise
///   sum (w_d dd)^2 + sum (w_m (predicted - observed))^2
/// with w_d = 1/(bound * observed demand) and w_m = 1/(precision * |reading|).
/// Nodes whose demand bound is zero (and the root) keep dd = 0.
/// Negative adjusted demands are clamped to zero and the network is simulated
/// once more with the clamped demands.
/// Throws NotConverged, SingularMatrix or RankDeficient.
EstimateResult estimate(const Network& net, const MeasurementSet& meas,
                        const DenseVector& observed_demands, const SolverOptions& opts = {});

/// Uses the network's own demands as the observations.
EstimateResult estimate(const Network& net, const MeasurementSet& meas,
                        const SolverOptions& opts = {});

/// Boundary inflows (l/s, fixed-head file order). For a non-root fixed-head
/// node this is its pseudo-loop corrective flow; the root closes the global
/// mass balance against the adjusted demands.
DenseVector extract_boundary_flows(const Network& net, const TreeDecomposition& dec,
                                   const EstimatorState& est, const DenseVector& adjusted_demands);

struct AdjustedDemands {
  DenseVector adjusted;  ///< same units as the inputs
  std::vector<std::size_t> clamped;  ///< node indices
};

/// max(observed - delta_d, 0), reporting where the clamp was active.
AdjustedDemands adjust_demands(const DenseVector& observed, const DenseVector& delta_d);

}  // namespace hydrocla
