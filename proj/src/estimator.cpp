#include "hydrocla/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "hydrocla/errors.hpp"
#include "hydrocla/hydraulics.hpp"

namespace hydrocla {

namespace {

struct MeterRow {
  bool head = true;
  std::size_t index = 0;  // node index for head meters, link index for flow meters
  int orientation = 1;
  double observed = 0.0;
  double weight = 0.0;
  bool exact = false;
};

double meter_weight(double rel_precision, double value) {
  const double sigma = rel_precision * std::abs(value);
  return sigma > 0.0 ? 1.0 / sigma : kExactMeterWeight;
}

std::vector<MeterRow> meter_rows(const Network& net, const MeasurementSet& meas) {
  std::vector<MeterRow> rows;
  for (const auto& m : meas.head_meters) {
    auto v = net.find_node(m.node);
    if (!v) throw ValidationError({"head meter at unknown node " + m.node});
    rows.push_back({true, *v, 1, m.value, meter_weight(m.rel_precision, m.value),
                    m.rel_precision == 0.0});
  }
  for (const auto& m : meas.flow_meters) {
    auto l = net.find_link(m.from, m.to);
    if (!l) throw ValidationError({"flow meter on unknown link " + m.from + "-" + m.to});
    rows.push_back({false, l->link, l->orientation, m.value,
                    meter_weight(m.rel_precision, m.value), m.rel_precision == 0.0});
  }
  return rows;
}

}  // namespace

DenseVector predict_meters(const Network& net, const MeasurementSet& meas,
                           const HydraulicState& state) {
  const auto rows = meter_rows(net, meas);
  DenseVector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto idx = static_cast<Eigen::Index>(r.index);
    out(static_cast<Eigen::Index>(i)) = r.head ? state.heads(idx) : r.orientation * state.flows(idx);
  }
  return out;
}

AdjustedDemands adjust_demands(const DenseVector& observed, const DenseVector& delta_d) {
  if (observed.size() != delta_d.size()) throw Error("adjust_demands: size mismatch");
  AdjustedDemands out;
  out.adjusted = observed - delta_d;
  for (Eigen::Index i = 0; i < out.adjusted.size(); ++i) {
    if (out.adjusted(i) < 0.0) {
      out.adjusted(i) = 0.0;
      out.clamped.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

DenseVector extract_boundary_flows(const Network& net, const TreeDecomposition& dec,
                                   const EstimatorState& est, const DenseVector& adjusted_demands) {
  const std::size_t f = net.fixed_head_count();
  DenseVector b = DenseVector::Zero(static_cast<Eigen::Index>(f));
  const std::size_t root_slot = *net.fixed_head_slot(dec.root);
  double others = 0.0;
  for (std::size_t k = 0; k < dec.pseudo_loops.size(); ++k) {
    const std::size_t slot = dec.pseudo_loops[k];
    const double inflow =
        est.delta_q(static_cast<Eigen::Index>(dec.physical_loop_count() + k));
    b(static_cast<Eigen::Index>(slot)) = inflow;
    others += inflow;
  }
  b(static_cast<Eigen::Index>(root_slot)) = adjusted_demands.sum() - others;
  return b * kLitresPerCubicMetre;
}

EstimateResult estimate(const Network& net, const MeasurementSet& meas,
                        const DenseVector& observed_demands, const SolverOptions& opts) {
  validate(opts);
  const std::size_t n = net.node_count();
  if (observed_demands.size() != static_cast<Eigen::Index>(n)) {
    throw Error("observed demand vector has " + std::to_string(observed_demands.size()) +
                " entries, expected " + std::to_string(n));
  }
  if ((observed_demands.array() < 0.0).any()) throw Error("observed demands must be nonnegative");

  const TreeDecomposition dec = decompose(net, opts);
  // Exact meters carry weights near 1e8, so loop closure noise at the
  // simulator's tolerance would swamp the objective. Newton converges
  // quadratically, so the tighter inner tolerance costs an iteration or two.
  SolverOptions inner = opts;
  inner.tol_loop_residual = std::min(opts.tol_loop_residual, kEstimatorLoopTolerance);
  const LinkHydraulics hyd(net, opts.flow_epsilon);
  const DenseVector fixed = to_dense(net.fixed_head_values());
  const DenseVector targets = loop_head_targets(net, dec, fixed);
  const DenseMatrix& m = dec.loop_incidence;
  const double h_root = fixed(static_cast<Eigen::Index>(*net.fixed_head_slot(dec.root)));

  // Demand variations are free only where the demand carries uncertainty.
  std::vector<std::size_t> free_nodes;
  std::vector<double> w_d;
  for (std::size_t v = 0; v < n; ++v) {
    if (v == dec.root) continue;
    const double hw = meas.demand_bound(net.nodes()[v].id) * observed_demands(static_cast<Eigen::Index>(v));
    if (hw > 0.0) {
      free_nodes.push_back(v);
      w_d.push_back(1.0 / hw);
    }
  }
  const auto k = static_cast<Eigen::Index>(free_nodes.size());
  const DenseMatrix a_star = a_star_matrix(dec);
  DenseMatrix a_free(a_star.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a_free.col(j) = a_star.col(static_cast<Eigen::Index>(dec.node_position[free_nodes[j]]));
  }
  const DenseVector wd = to_dense(w_d);

  const auto meters = meter_rows(net, meas);
  const auto nm = static_cast<Eigen::Index>(meters.size());
  DenseVector wm(nm), obs(nm);
  for (Eigen::Index i = 0; i < nm; ++i) {
    wm(i) = meters[i].weight;
    obs(i) = meters[i].observed;
  }

  const DenseVector qi = initial_tree_flows(dec, dec.nonroot_in_decomposition(observed_demands));
  auto predict = [&](const DenseVector& flows) {
    DenseVector out(nm);
    DenseVector h;
    for (Eigen::Index i = 0; i < nm; ++i) {
      const auto& r = meters[i];
      if (r.head) {
        if (h.size() == 0) h = dec.to_decomposition_links(hyd.head_changes(flows));
        out(i) = h_root - dec.root_paths.row(static_cast<Eigen::Index>(r.index)).dot(h);
      } else {
        out(i) = r.orientation * flows(static_cast<Eigen::Index>(r.index));
      }
    }
    return out;
  };
  auto objective = [&](const DenseVector& dd, const DenseVector& pred) {
    return wd.cwiseProduct(dd).squaredNorm() + wm.cwiseProduct(pred - obs).squaredNorm();
  };

  EstimateResult result;
  DenseVector dd = DenseVector::Zero(k);
  LoopSolution sol = solve_loop_flows(dec, hyd, qi, targets,
                                      DenseVector::Zero(static_cast<Eigen::Index>(dec.loop_count())),
                                      inner);
  result.loop_iterations += sol.iterations;
  DenseVector pred = predict(sol.flows);
  double phi = objective(dd, pred);
  std::vector<double> history{phi};

  int iter = 0;
  bool converged = false;
  while (!converged) {
    if (iter >= opts.max_iters) throw NotConverged(iter, phi, "state estimation");
    ++iter;

    // Sensitivity of the decomposition-order flows to the free demand
    // variations with the loop equations held: dQ = (M^T J^-1 M A - I) A_F.
    const DenseVector a = dec.to_decomposition_links(hyd.derivatives(sol.flows));
    DenseMatrix sens = -a_free;
    if (m.rows() > 0 && k > 0) {
      const DenseMatrix j = m * a.asDiagonal() * m.transpose();
      const DenseMatrix rhs = m * a.asDiagonal() * a_free;
      sens += m.transpose() * solve_dense_linear(j, rhs, opts.linear);
    }
    DenseMatrix g = DenseMatrix::Zero(nm, a.size());
    for (Eigen::Index i = 0; i < nm; ++i) {
      const auto& r = meters[i];
      if (r.head) {
        g.row(i) = -dec.root_paths.row(static_cast<Eigen::Index>(r.index)).cwiseProduct(a.transpose());
      } else {
        g(i, static_cast<Eigen::Index>(dec.link_position[r.index])) = r.orientation;
      }
    }

    DenseMatrix lhs(k + nm, k);
    lhs << DenseMatrix(wd.asDiagonal()), wm.asDiagonal() * (g * sens);
    DenseVector rhs(k + nm);
    rhs << -wd.cwiseProduct(dd), -wm.cwiseProduct(pred - obs);
    const DenseVector step = k > 0 ? solve_linear_least_squares(lhs, rhs, opts.linear) : DenseVector();

    const double step_norm = step.size() ? step.lpNorm<Eigen::Infinity>() : 0.0;
    // Decrease promised by the linear model; once it is at rounding level the
    // remaining step only chases noise.
    const double promised = step.size() ? phi - (lhs * step - rhs).squaredNorm() : 0.0;
    if (step_norm <= opts.tol_step || promised <= 1e-12 * (1.0 + phi)) {
      converged = true;
      break;
    }

    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const DenseVector cand = dd + lambda * step;
      LoopSolution cand_sol;
      try {
        cand_sol = solve_loop_flows(dec, hyd, qi - a_free * cand, targets, sol.loop_flows, inner);
      } catch (const NotConverged&) {
        continue;
      }
      result.loop_iterations += cand_sol.iterations;
      const DenseVector cand_pred = predict(cand_sol.flows);
      const double cand_phi = objective(cand, cand_pred);
      if (cand_phi <= phi) {
        const double gain = phi - cand_phi;
        dd = cand;
        sol = std::move(cand_sol);
        pred = cand_pred;
        phi = cand_phi;
        history.push_back(phi);
        accepted = true;
        if (lambda * step_norm <= opts.tol_step || gain <= 1e-15 * phi) converged = true;
        break;
      }
    }
    if (!accepted) {
      // A step that promises almost nothing may fail on objective noise alone.
      if (promised <= 1e-8 * (1.0 + phi)) {
        converged = true;
      } else {
        throw NotConverged(iter, phi, "state estimation line search failed");
      }
    }
  }

  EstimatorState& est = result.estimator;
  est.delta_q = sol.loop_flows;
  est.delta_d = DenseVector::Zero(static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < k; ++j) est.delta_d(static_cast<Eigen::Index>(free_nodes[j])) = dd(j);
  est.converged = true;
  est.iterations = iter;
  est.objective = phi;
  est.objective_history = std::move(history);

  AdjustedDemands adj = adjust_demands(observed_demands, est.delta_d);
  result.adjusted_demands = adj.adjusted;
  for (std::size_t v : adj.clamped) result.clamped_nodes.push_back(net.nodes()[v].id);

  if (!adj.clamped.empty()) {
    // Second pass: the clamped demands no longer match the corrected tree
    // flows, so the network is simulated afresh. Runs once only.
    SimulationResult second = simulate_detailed(net, dec, adj.adjusted, opts);
    result.loop_iterations += second.iterations;
    result.state = std::move(second.state);
    result.second_pass_used = true;
  } else {
    result.state = assemble_state(net, dec, hyd, sol.flows, adj.adjusted, fixed);
    // Exact head meters are reported at their reading, as fixed heads are.
    for (const auto& r : meters) {
      if (r.head && r.exact) result.state.heads(static_cast<Eigen::Index>(r.index)) = r.observed;
    }
  }
  return result;
}

EstimateResult estimate(const Network& net, const MeasurementSet& meas, const SolverOptions& opts) {
  return estimate(net, meas, to_dense(net.demands()), opts);
}

}  // namespace hydrocla
