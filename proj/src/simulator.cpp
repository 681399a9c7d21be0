#include "hydrocla/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "hydrocla/errors.hpp"

namespace hydrocla {

void validate(const SolverOptions& opts) {
  if (!(opts.tol_loop_residual > 0.0)) throw Error("tolerance must be positive");
  if (opts.max_iters < 1) throw Error("max_iters must be at least 1");
  if (opts.max_halvings < 0) throw Error("max_halvings must be nonnegative");
  if (!(opts.flow_epsilon > 0.0)) throw Error("flow epsilon must be positive");
}

DenseVector to_dense(const std::vector<double>& v) {
  return Eigen::Map<const DenseVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

DenseVector state_vector(const HydraulicState& state) {
  DenseVector x(state.heads.size() + state.boundary_flows.size());
  x << state.heads, state.boundary_flows * kLitresPerCubicMetre;
  return x;
}

TreeDecomposition decompose(const Network& net, const SolverOptions& opts) {
  if (opts.root.empty()) return build_spanning_tree(net);
  const auto root = net.find_node(opts.root);
  if (!root) throw RootNotFixedHead("unknown root node " + opts.root);
  return build_spanning_tree(net, *root);
}

DenseVector heads_from_flows(const Network& net, const TreeDecomposition& dec,
                             const LinkHydraulics& hyd, const DenseVector& flows,
                             const DenseVector& fixed_heads) {
  const double h_root = fixed_heads(static_cast<Eigen::Index>(*net.fixed_head_slot(dec.root)));
  const DenseVector h = dec.to_decomposition_links(hyd.head_changes(flows));
  return DenseVector::Constant(static_cast<Eigen::Index>(dec.node_count), h_root) -
         dec.root_paths * h;
}

DenseVector boundary_flows_from(const Network& net, const DenseVector& flows,
                                const DenseVector& demands) {
  DenseVector inflow = DenseVector::Zero(static_cast<Eigen::Index>(net.node_count()));
  for (std::size_t e = 0; e < net.link_count(); ++e) {
    const LinkRef l = net.link(e);
    inflow(static_cast<Eigen::Index>(l.to)) += flows(static_cast<Eigen::Index>(e));
    inflow(static_cast<Eigen::Index>(l.from)) -= flows(static_cast<Eigen::Index>(e));
  }
  const auto nodes = net.fixed_head_nodes();
  DenseVector b(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    const auto v = static_cast<Eigen::Index>(nodes[s]);
    b(static_cast<Eigen::Index>(s)) = demands(v) - inflow(v);
  }
  return b;
}

HydraulicState assemble_state(const Network& net, const TreeDecomposition& dec,
                              const LinkHydraulics& hyd, const DenseVector& flows,
                              const DenseVector& demands, const DenseVector& fixed_heads) {
  HydraulicState state;
  state.flows = flows;
  state.heads = heads_from_flows(net, dec, hyd, flows, fixed_heads);
  const auto nodes = net.fixed_head_nodes();
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    state.heads(static_cast<Eigen::Index>(nodes[s])) = fixed_heads(static_cast<Eigen::Index>(s));
  }
  state.boundary_flows = boundary_flows_from(net, flows, demands);
  return state;
}

LoopSolution solve_loop_flows(const TreeDecomposition& dec, const LinkHydraulics& hyd,
                              const DenseVector& tree_flows, const DenseVector& targets,
                              DenseVector loop_flows, const SolverOptions& opts) {
  const DenseMatrix& m = dec.loop_incidence;
  auto flows_of = [&](const DenseVector& dq) {
    return dec.to_network_links(tree_flows + m.transpose() * dq);
  };
  auto residual_of = [&](const DenseVector& flows) {
    return DenseVector(m * dec.to_decomposition_links(hyd.head_changes(flows)) - targets);
  };

  LoopSolution out;
  DenseVector dq = std::move(loop_flows);
  DenseVector flows = flows_of(dq);
  DenseVector res = residual_of(flows);
  double norm = res.size() ? res.lpNorm<Eigen::Infinity>() : 0.0;
  out.residual_history.push_back(norm);

  // Near-zero pump and chord flows give near-zero derivatives and huge Newton
  // steps; no single loop flow is allowed to move more than the total flow.
  const double max_step =
      std::max(tree_flows.size() ? tree_flows.cwiseAbs().maxCoeff() : 0.0, 1e-3);

  // Halves `step` until the residual norm drops; commits the first success.
  auto try_step = [&](DenseVector step) {
    if (const double big = step.lpNorm<Eigen::Infinity>(); big > max_step) step *= max_step / big;
    double lambda = 1.0;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      DenseVector cand = dq - lambda * step;
      DenseVector cand_flows = flows_of(cand);
      DenseVector cand_res = residual_of(cand_flows);
      if (cand_res.norm() < res.norm()) {
        dq = std::move(cand);
        flows = std::move(cand_flows);
        res = std::move(cand_res);
        return true;
      }
    }
    return false;
  };

  int iter = 0;
  while (norm > opts.tol_loop_residual) {
    if (iter >= opts.max_iters) throw NotConverged(iter, norm, "loop simulation");
    const DenseMatrix jac = loop_jacobian(dec, hyd, flows);
    bool accepted = try_step(solve_dense_linear(jac, res, opts.linear));
    // Zero-flow chords leave J nearly singular and the Newton step can point
    // along its null direction. J is SPD, so (J + mu I)^-1 r is still a
    // descent direction for |r|; raise mu until it bites.
    const double scale = jac.diagonal().mean();
    for (double mu = 1e-6 * scale; !accepted && mu <= 1e6 * scale; mu *= 10.0) {
      const DenseMatrix damped = jac + mu * DenseMatrix::Identity(jac.rows(), jac.cols());
      accepted = try_step(solve_dense_linear(damped, res, opts.linear));
    }
    ++iter;
    if (!accepted) throw NotConverged(iter, norm, "loop simulation stalled");
    norm = res.lpNorm<Eigen::Infinity>();
    out.residual_history.push_back(norm);
  }
  out.loop_flows = std::move(dq);
  out.flows = std::move(flows);
  out.iterations = iter;
  out.residual = norm;
  return out;
}

SimulationResult simulate_detailed(const Network& net, const TreeDecomposition& dec,
                                   const DenseVector& demands, const SolverOptions& opts) {
  validate(opts);
  if (demands.size() != static_cast<Eigen::Index>(net.node_count())) {
    throw Error("demand vector has " + std::to_string(demands.size()) + " entries, expected " +
                std::to_string(net.node_count()));
  }
  const LinkHydraulics hyd(net, opts.flow_epsilon);
  const DenseVector fixed = to_dense(net.fixed_head_values());
  const DenseVector qi = initial_tree_flows(dec, dec.nonroot_in_decomposition(demands));
  LoopSolution sol =
      solve_loop_flows(dec, hyd, qi, loop_head_targets(net, dec, fixed),
                       DenseVector::Zero(static_cast<Eigen::Index>(dec.loop_count())), opts);

  SimulationResult out;
  out.state = assemble_state(net, dec, hyd, sol.flows, demands, fixed);
  out.loop_flows = std::move(sol.loop_flows);
  out.iterations = sol.iterations;
  out.residual = sol.residual;
  out.residual_history = std::move(sol.residual_history);
  return out;
}

HydraulicState simulate(const Network& net, const DenseVector& demands,
                        const SolverOptions& opts) {
  return simulate_detailed(net, decompose(net, opts), demands, opts).state;
}

HydraulicState simulate(const Network& net, const SolverOptions& opts) {
  return simulate(net, to_dense(net.demands()), opts);
}

}  // namespace hydrocla
