#include "hydrocla/cla.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "hydrocla/errors.hpp"

namespace hydrocla {

const char* to_string(MeasurementKind kind) {
  switch (kind) {
    case MeasurementKind::demand: return "demand";
    case MeasurementKind::fixed_head: return "fixed_head";
    case MeasurementKind::head_meter: return "head_meter";
    case MeasurementKind::flow_meter: return "flow_meter";
  }
  return "unknown";
}

const char* to_string(ClaMethod method) {
  switch (method) {
    case ClaMethod::esm: return "esm";
    case ClaMethod::em_upper: return "em_upper";
    case ClaMethod::em_lower: return "em_lower";
  }
  return "unknown";
}

namespace {

std::size_t measurement_count(const Network& net, const MeasurementSet& meas) {
  return net.node_count() + net.fixed_head_count() + meas.head_meters.size() +
         meas.flow_meters.size();
}

}  // namespace

BoundedMeasurementVector rebound(const Network& net, const MeasurementSet& meas,
                                 const DenseVector& values) {
  const std::size_t m = measurement_count(net, meas);
  if (values.size() != static_cast<Eigen::Index>(m)) {
    throw Error("measurement vector has " + std::to_string(values.size()) + " entries, expected " +
                std::to_string(m));
  }
  BoundedMeasurementVector z;
  z.values = values;
  z.half_widths.resize(static_cast<Eigen::Index>(m));
  z.kinds.reserve(m);
  z.labels.reserve(m);
  Eigen::Index j = 0;
  for (const auto& node : net.nodes()) {
    z.half_widths(j) = meas.demand_bound(node.id) * std::abs(values(j));
    z.kinds.push_back(MeasurementKind::demand);
    z.labels.push_back("demand " + node.id);
    ++j;
  }
  for (const auto& fh : net.fixed_heads()) {
    z.half_widths(j) = meas.fixed_head_bound(fh.id);
    z.kinds.push_back(MeasurementKind::fixed_head);
    z.labels.push_back("fixed_head " + fh.id);
    ++j;
  }
  for (const auto& hm : meas.head_meters) {
    z.half_widths(j) = hm.rel_precision * std::abs(values(j));
    z.kinds.push_back(MeasurementKind::head_meter);
    z.labels.push_back("head_meter " + hm.node);
    ++j;
  }
  for (const auto& fm : meas.flow_meters) {
    z.half_widths(j) = fm.rel_precision * std::abs(values(j));
    z.kinds.push_back(MeasurementKind::flow_meter);
    z.labels.push_back("flow_meter " + fm.from + "-" + fm.to);
    ++j;
  }
  return z;
}

BoundedMeasurementVector measurement_vector(const Network& net, const MeasurementSet& meas) {
  DenseVector values(static_cast<Eigen::Index>(measurement_count(net, meas)));
  Eigen::Index j = 0;
  for (const auto& node : net.nodes()) values(j++) = node.demand;
  for (const auto& fh : net.fixed_heads()) values(j++) = fh.head;
  for (const auto& hm : meas.head_meters) values(j++) = hm.value;
  for (const auto& fm : meas.flow_meters) values(j++) = fm.value;
  return rebound(net, meas, values);
}

EstimateResult estimate_at(const Network& net, const MeasurementSet& meas, const DenseVector& z,
                           const SolverOptions& opts) {
  const std::size_t n = net.node_count();
  const std::size_t f = net.fixed_head_count();
  if (z.size() != static_cast<Eigen::Index>(measurement_count(net, meas))) {
    throw Error("measurement vector size does not match the network and meters");
  }
  const DenseVector demands = z.head(static_cast<Eigen::Index>(n));
  const DenseVector heads = z.segment(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  const Network perturbed = net.with_fixed_heads(std::vector<double>(heads.data(), heads.data() + f));
  MeasurementSet m = meas;
  auto j = static_cast<Eigen::Index>(n + f);
  for (auto& hm : m.head_meters) hm.value = z(j++);
  for (auto& fm : m.flow_meters) fm.value = z(j++);
  // Demands below zero are not meaningful observations; the lower bound of a
  // demand never goes below zero anyway since bounds are relative.
  return estimate(perturbed, m, demands.cwiseMax(0.0), opts);
}

std::vector<std::string> state_labels(const Network& net) {
  std::vector<std::string> out;
  out.reserve(net.node_count() + net.fixed_head_count());
  for (const auto& node : net.nodes()) out.push_back("H " + node.id);
  for (const auto& fh : net.fixed_heads()) out.push_back("Q " + fh.id);
  return out;
}

namespace {

DenseVector run_estimate(const Network& net, const MeasurementSet& meas, const DenseVector& z,
                         const ClaOptions& opts, HydraulicState* state = nullptr) {
  if (opts.run_counter) opts.run_counter->fetch_add(1, std::memory_order_relaxed);
  EstimateResult r = estimate_at(net, meas, z, opts.solver);
  DenseVector x = state_vector(r.state);
  if (state) *state = std::move(r.state);
  return x;
}

}  // namespace

SensitivityMatrix build_esm(const Network& net, const MeasurementSet& meas,
                            const BoundedMeasurementVector& z, const ClaOptions& opts) {
  if (opts.threads == 0) throw Error("ESM needs at least one thread");
  SensitivityMatrix s;
  s.base_vector = run_estimate(net, meas, z.values, opts, &s.base_state);
  s.estimator_runs = 1;

  std::vector<Eigen::Index> columns;
  for (Eigen::Index j = 0; j < z.half_widths.size(); ++j) {
    if (z.half_widths(j) > 0.0) columns.push_back(j);
  }
  s.entries = DenseMatrix::Zero(s.base_vector.size(), z.half_widths.size());

  std::mutex error_mutex;
  std::exception_ptr first_error;
  Eigen::Index first_error_column = -1;
  auto column = [&](Eigen::Index j) {
    try {
      const double hw = z.half_widths(j);
      DenseVector up = z.values;
      up(j) += hw;
      if (opts.two_sided) {
        DenseVector down = z.values;
        down(j) -= hw;
        s.entries.col(j) = (run_estimate(net, meas, up, opts) - run_estimate(net, meas, down, opts)) /
                           (2.0 * hw);
      } else {
        s.entries.col(j) = (run_estimate(net, meas, up, opts) - s.base_vector) / hw;
      }
    } catch (const NotConverged& e) {
      std::lock_guard lock(error_mutex);
      if (first_error_column < 0 || j < first_error_column) {
        first_error_column = j;
        first_error = std::make_exception_ptr(NotConverged(
            e.iterations(), e.residual(), "ESM column " + std::to_string(j) + " (" +
                                              z.labels[static_cast<std::size_t>(j)] + ")"));
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (first_error_column < 0 || j < first_error_column) {
        first_error_column = j;
        first_error = std::current_exception();
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(opts.threads, columns.size());
  if (workers <= 1) {
    for (Eigen::Index j : columns) column(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < columns.size(); i = next.fetch_add(1)) {
          column(columns[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  s.estimator_runs += columns.size() * (opts.two_sided ? 2 : 1);
  return s;
}

ConfidenceLimits cla_from_esm(const SensitivityMatrix& s, const DenseVector& half_widths) {
  if (s.entries.cols() != half_widths.size()) {
    throw Error("cla_from_esm: half-width count does not match the ESM columns");
  }
  return {s.entries.cwiseAbs() * half_widths.cwiseAbs(), ClaMethod::esm};
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
  // SplitMix64 finaliser applied to the seed-offset counter.
  std::uint64_t x = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;
}

PerturbationReport random_perturbation_check(const Network& net, const MeasurementSet& meas,
                                             const BoundedMeasurementVector& z,
                                             const SensitivityMatrix& s, std::size_t trials,
                                             std::uint64_t seed, const ClaOptions& opts) {
  const auto m = static_cast<Eigen::Index>(z.size());
  if (s.entries.cols() != m) throw Error("perturbation check: ESM does not match z");
  PerturbationReport report;
  report.trials = trials;
  report.max_difference = DenseVector::Zero(s.base_vector.size());
  for (std::size_t t = 0; t < trials; ++t) {
    DenseVector delta(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      delta(j) = z.half_widths(j) *
                 counter_uniform(seed, static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(m) +
                                           static_cast<std::uint64_t>(j));
    }
    DenseVector dx1;
    try {
      dx1 = run_estimate(net, meas, z.values + delta, opts) - s.base_vector;
    } catch (const NotConverged&) {
      ++report.skipped;
      continue;
    }
    const DenseVector dx2 = s.entries * delta;
    report.max_difference = report.max_difference.cwiseMax((dx1 - dx2).cwiseAbs());
  }
  const auto n = static_cast<Eigen::Index>(net.node_count());
  report.max_head_difference = n ? report.max_difference.head(n).maxCoeff() : 0.0;
  const Eigen::Index f = report.max_difference.size() - n;
  report.max_flow_difference = f ? report.max_difference.tail(f).maxCoeff() : 0.0;
  return report;
}

EmResult em_confidence_limits(const Network& net, const MeasurementSet& meas,
                              const BoundedMeasurementVector& z, BoundChoice bound,
                              const ClaOptions& opts) {
  EmResult out;
  if (opts.run_counter) opts.run_counter->fetch_add(1, std::memory_order_relaxed);
  const EstimateResult base = estimate_at(net, meas, z.values, opts.solver);
  out.base_state = base.state;
  out.base_vector = state_vector(base.state);
  out.estimator_runs = 1;

  // z-hat: adjusted demands, fixed heads as estimated, meters re-predicted.
  const std::size_t n = net.node_count();
  const std::size_t f = net.fixed_head_count();
  DenseVector zhat(z.values.size());
  zhat.head(static_cast<Eigen::Index>(n)) = base.adjusted_demands;
  const auto fixed_nodes = net.fixed_head_nodes();
  for (std::size_t s = 0; s < f; ++s) {
    zhat(static_cast<Eigen::Index>(n + s)) = base.state.heads(static_cast<Eigen::Index>(fixed_nodes[s]));
  }
  const DenseVector meters = predict_meters(net, meas, base.state);
  zhat.tail(meters.size()) = meters;
  out.estimated_z = rebound(net, meas, zhat);

  auto shifted = [&](double sign, ClaMethod method) {
    const DenseVector z1 = out.estimated_z.values + sign * out.estimated_z.half_widths;
    const DenseVector x1 = run_estimate(net, meas, z1, opts);
    ++out.estimator_runs;
    return ConfidenceLimits{(x1 - out.base_vector).cwiseAbs(), method};
  };
  if (bound != BoundChoice::lower) out.upper = shifted(1.0, ClaMethod::em_upper);
  if (bound != BoundChoice::upper) out.lower = shifted(-1.0, ClaMethod::em_lower);
  if (bound == BoundChoice::both) out.t_test = paired_t_test(out.upper->values, out.lower->values);
  return out;
}

PlacementDelta meter_placement_report(const ConfidenceLimits& baseline,
                                      const ConfidenceLimits& with_meter, double tolerance) {
  if (baseline.values.size() != with_meter.values.size()) {
    throw Error("meter_placement_report: confidence limit sizes differ");
  }
  PlacementDelta out;
  out.delta = with_meter.values - baseline.values;
  for (Eigen::Index i = 0; i < out.delta.size(); ++i) {
    if (out.delta(i) > tolerance) out.increased.push_back(static_cast<std::size_t>(i));
  }
  return out;
}

}  // namespace hydrocla
