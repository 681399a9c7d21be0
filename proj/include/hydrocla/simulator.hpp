#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hydrocla/hydraulics.hpp"
#include "hydrocla/network.hpp"
#include "hydrocla/numerics.hpp"
#include "hydrocla/topology.hpp"

namespace hydrocla {

struct SolverOptions {
  double tol_loop_residual = 1e-6;  ///< m, infinity norm
  int max_iters = 100;
  int max_halvings = 10;
  double flow_epsilon = kDefaultFlowEpsilon;
  /// Estimator only: Gauss-Newton stops once the demand step is below this, m^3/s.
  double tol_step = 1e-11;
  LinearSolveOptions linear;
  /// Root fixed-head node id; empty means the first fixed head in the file.
  std::string root;
};

/// Throws Error when an option is out of range.
void validate(const SolverOptions& opts);

/// Pipe flows, nodal heads and fixed-head boundary flows.
struct HydraulicState {
  DenseVector flows;           ///< m^3/s, link order
  DenseVector heads;           ///< m, node order
  DenseVector boundary_flows;  ///< m^3/s into the network, fixed-head file order
};

/// State vector used by the confidence-limit analysis: n heads in m followed
/// by f boundary flows in l/s.
DenseVector state_vector(const HydraulicState& state);

struct SimulationResult {
  HydraulicState state;
  DenseVector loop_flows;  ///< corrective flows, loop order
  int iterations = 0;
  double residual = 0.0;  ///< final loop residual, infinity norm
  std::vector<double> residual_history;
};

/// Damped Newton on the loop corrective flows for fixed tree flows
/// (decomposition order) and loop targets, starting from `loop_flows`.
struct LoopSolution {
  DenseVector loop_flows;
  DenseVector flows;  ///< network link order
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};
LoopSolution solve_loop_flows(const TreeDecomposition& dec, const LinkHydraulics& hyd,
                              const DenseVector& tree_flows, const DenseVector& targets,
                              DenseVector loop_flows, const SolverOptions& opts);

/// Decomposition honouring opts.root.
TreeDecomposition decompose(const Network& net, const SolverOptions& opts);

/// Damped Newton on the loop corrective flows. `demands` are m^3/s, node order.
/// Throws NotConverged or SingularMatrix.
SimulationResult simulate_detailed(const Network& net, const TreeDecomposition& dec,
                                   const DenseVector& demands, const SolverOptions& opts = {});

HydraulicState simulate(const Network& net, const DenseVector& demands,
                        const SolverOptions& opts = {});

/// Simulates with the network's own demands.
HydraulicState simulate(const Network& net, const SolverOptions& opts = {});

/// Root head propagated down the tree. Non-root fixed-head nodes receive the
/// propagated value, not their fixed value.
DenseVector heads_from_flows(const Network& net, const TreeDecomposition& dec,
                             const LinkHydraulics& hyd, const DenseVector& flows,
                             const DenseVector& fixed_heads);

/// Boundary inflow at each fixed-head node: demand minus net pipe inflow.
DenseVector boundary_flows_from(const Network& net, const DenseVector& flows,
                                const DenseVector& demands);

/// Heads, then fixed heads overwritten with their exact values.
HydraulicState assemble_state(const Network& net, const TreeDecomposition& dec,
                              const LinkHydraulics& hyd, const DenseVector& flows,
                              const DenseVector& demands, const DenseVector& fixed_heads);

DenseVector to_dense(const std::vector<double>& v);

}  // namespace hydrocla
