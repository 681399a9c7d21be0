#include "hydrocla/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hydrocla/cla.hpp"
#include "hydrocla/errors.hpp"
#include "hydrocla/estimator.hpp"
#include "hydrocla/report.hpp"
#include "hydrocla/simulator.hpp"
#include "hydrocla/topology.hpp"

namespace hydrocla {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonArgs {
  bool json = false;
  bool csv = false;
  bool timings = false;
  double tol = 1e-6;
  int max_iters = 100;
  std::string root;

  ReportFormat format() const {
    return json ? ReportFormat::json : csv ? ReportFormat::csv : ReportFormat::table;
  }
  SolverOptions solver() const {
    SolverOptions o;
    o.tol_loop_residual = tol;
    o.max_iters = max_iters;
    o.root = root;
    return o;
  }
};

void add_common(CLI::App* cmd, CommonArgs& c) {
  auto* json = cmd->add_flag("--json", c.json, "machine-readable JSON report");
  auto* csv = cmd->add_flag("--csv", c.csv, "flat CSV report");
  json->excludes(csv);
  cmd->add_flag("--timings", c.timings, "include wall-clock timings (breaks byte-identity)");
  cmd->add_option("--tol", c.tol, "loop closure tolerance, m")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", c.max_iters, "Newton iteration limit")->check(CLI::PositiveNumber);
  cmd->add_option("--root", c.root, "spanning-tree root (a fixed-head node id)");
}

class Stopwatch {
 public:
  explicit Stopwatch(RunReport& r) : report_(r), start_(std::chrono::steady_clock::now()) {}
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    report_.timings.emplace_back(stage, std::chrono::duration<double>(now - start_).count());
    start_ = now;
  }

 private:
  RunReport& report_;
  std::chrono::steady_clock::time_point start_;
};

ReportTable state_table(const Network& net, const std::string& name,
                        std::vector<std::string> value_columns,
                        const std::vector<const DenseVector*>& columns) {
  ReportTable t;
  t.name = name;
  t.key_columns = {"kind", "node", "unit"};
  t.value_columns = std::move(value_columns);
  const std::size_t n = net.node_count();
  for (std::size_t i = 0; i < n + net.fixed_head_count(); ++i) {
    ReportTable::Row row;
    if (i < n) {
      row.keys = {"head", net.nodes()[i].id, "m"};
    } else {
      row.keys = {"inflow", net.fixed_heads()[i - n].id, "l/s"};
    }
    for (const DenseVector* c : columns) row.values.push_back((*c)(static_cast<Eigen::Index>(i)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("HYDROCLA_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(std::string("HYDROCLA_SEED is not an unsigned integer: ") + env);
  }
  return 1;
}

void add_perturbation(RunReport& report, const PerturbationReport& p, std::uint64_t seed) {
  report.diagnostics.emplace_back("trials", static_cast<std::int64_t>(p.trials));
  report.diagnostics.emplace_back("seed", std::to_string(seed));
  report.diagnostics.emplace_back("skipped_trials", static_cast<std::int64_t>(p.skipped));
  report.diagnostics.emplace_back("max_head_difference_m", p.max_head_difference);
  report.diagnostics.emplace_back("max_inflow_difference_lps", p.max_flow_difference);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Loop-flow simulation, state estimation and confidence-limit analysis", "hydrocla"};
  app.require_subcommand(1);
  app.fallthrough(false);
  app.failure_message(CLI::FailureMessage::help);

  CommonArgs common;
  std::string network_path, meas_path, demands_path;
  bool flows = false;
  unsigned threads = 1;
  bool two_sided = false;
  std::size_t trials = 0;
  std::optional<std::uint64_t> seed;
  std::string bound = "upper";

  auto* sim = app.add_subcommand("simulate", "steady-state loop-flow simulation");
  sim->add_option("network", network_path, "network file")->required();
  sim->add_option("--demands", demands_path, "demand override file (id demand_lps)");
  sim->add_flag("--flows", flows, "also list link flows");
  add_common(sim, common);

  auto* est = app.add_subcommand("estimate", "least-squares loop-flow state estimation");
  est->add_option("network", network_path, "network file")->required();
  est->add_option("measurements", meas_path, "measurement file")->required();
  est->add_option("--demands", demands_path, "observed demand override file");
  add_common(est, common);

  auto* cla = app.add_subcommand("cla", "confidence-limit analysis");
  cla->require_subcommand(1);
  auto* esm = cla->add_subcommand("esm", "experimental sensitivity matrix");
  esm->add_option("network", network_path, "network file")->required();
  esm->add_option("measurements", meas_path, "measurement file")->required();
  esm->add_option("--threads", threads, "worker threads for the ESM columns")->check(CLI::PositiveNumber);
  esm->add_flag("--two-sided", two_sided, "central differences (two runs per column)");
  esm->add_option("--trials", trials, "also run this many random perturbation trials");
  esm->add_option("--seed", seed, "perturbation seed (default $HYDROCLA_SEED, else 1)");
  add_common(esm, common);
  auto* em = cla->add_subcommand("em", "error maximisation");
  em->add_option("network", network_path, "network file")->required();
  em->add_option("measurements", meas_path, "measurement file")->required();
  em->add_option("--bound", bound, "bound to push the measurements to")
      ->check(CLI::IsMember({"upper", "lower", "both"}));
  add_common(em, common);

  auto* pert = app.add_subcommand("perturb-check", "ESM against random in-box perturbations");
  pert->add_option("network", network_path, "network file")->required();
  pert->add_option("measurements", meas_path, "measurement file")->required();
  std::size_t pert_trials = 50;
  pert->add_option("--trials", pert_trials, "number of trials")->check(CLI::PositiveNumber);
  pert->add_option("--seed", seed, "seed (default $HYDROCLA_SEED, else 1)");
  pert->add_option("--threads", threads, "worker threads for the ESM columns")->check(CLI::PositiveNumber);
  pert->add_flag("--two-sided", two_sided, "central-difference ESM");
  add_common(pert, common);

  auto* topo = app.add_subcommand("dump-topology", "list spanning tree, chords and loops");
  topo->add_option("network", network_path, "network file")->required();
  topo->add_option("--root", common.root, "spanning-tree root (a fixed-head node id)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  RunReport report;
  report.command = "hydrocla " + join(args, " ");
  try {
    Stopwatch clock(report);
    const Network net = parse_network(read_file(network_path));
    const SolverOptions opts = common.solver();
    validate(opts);
    const TreeDecomposition dec = decompose(net, opts);
    report.summarise(net, dec);
    clock.lap("load");

    if (*topo) {
      out << describe_topology(net, dec);
      return kExitOk;
    }

    if (*sim) {
      DenseVector demands = to_dense(net.demands());
      if (!demands_path.empty()) demands = to_dense(parse_demands(read_file(demands_path), net));
      const SimulationResult r = simulate_detailed(net, dec, demands, opts);
      clock.lap("simulate");
      report.diagnostics.emplace_back("iterations", static_cast<std::int64_t>(r.iterations));
      report.diagnostics.emplace_back("loop_residual_m", r.residual);
      const DenseVector x = state_vector(r.state);
      report.tables.push_back(state_table(net, "state", {"value"}, {&x}));
      if (flows) {
        ReportTable t;
        t.name = "flows";
        t.key_columns = {"link", "kind"};
        t.value_columns = {"flow_lps"};
        for (std::size_t e = 0; e < net.link_count(); ++e) {
          t.rows.push_back({{net.link_label(e), net.link(e).kind == LinkKind::pipe ? "pipe" : "pump"},
                            {r.state.flows(static_cast<Eigen::Index>(e)) * kLitresPerCubicMetre}});
        }
        report.tables.push_back(std::move(t));
      }
    } else {
      const MeasurementSet meas = parse_measurements(read_file(meas_path), net);
      clock.lap("measurements");

      if (*est) {
        DenseVector observed = to_dense(net.demands());
        if (!demands_path.empty()) observed = to_dense(parse_demands(read_file(demands_path), net));
        const EstimateResult r = estimate(net, meas, observed, opts);
        clock.lap("estimate");
        report.diagnostics.emplace_back("iterations", static_cast<std::int64_t>(r.estimator.iterations));
        report.diagnostics.emplace_back("loop_iterations", static_cast<std::int64_t>(r.loop_iterations));
        report.diagnostics.emplace_back("objective", r.estimator.objective);
        report.diagnostics.emplace_back("second_pass", std::string(r.second_pass_used ? "yes" : "no"));
        report.diagnostics.emplace_back("clamped_nodes",
                                        r.clamped_nodes.empty() ? std::string("none") : join(r.clamped_nodes, ","));
        const DenseVector x = state_vector(r.state);
        report.tables.push_back(state_table(net, "state", {"value"}, {&x}));
        ReportTable t;
        t.name = "demands";
        t.key_columns = {"node"};
        t.value_columns = {"observed_lps", "delta_d_lps", "adjusted_lps"};
        for (std::size_t v = 0; v < net.node_count(); ++v) {
          const auto i = static_cast<Eigen::Index>(v);
          t.rows.push_back({{net.nodes()[v].id},
                            {observed(i) * kLitresPerCubicMetre,
                             r.estimator.delta_d(i) * kLitresPerCubicMetre,
                             r.adjusted_demands(i) * kLitresPerCubicMetre}});
        }
        report.tables.push_back(std::move(t));
      } else {
        ClaOptions copts;
        copts.solver = opts;
        copts.threads = threads;
        copts.two_sided = two_sided;
        const BoundedMeasurementVector z = measurement_vector(net, meas);
        report.diagnostics.emplace_back("measurements", static_cast<std::int64_t>(z.size()));

        if (*em) {
          const BoundChoice choice = bound == "lower" ? BoundChoice::lower
                                     : bound == "both" ? BoundChoice::both
                                                       : BoundChoice::upper;
          const EmResult r = em_confidence_limits(net, meas, z, choice, copts);
          clock.lap("em");
          report.diagnostics.emplace_back("method", std::string("em"));
          report.diagnostics.emplace_back("bound", bound);
          report.diagnostics.emplace_back("estimator_runs", static_cast<std::int64_t>(r.estimator_runs));
          std::vector<std::string> names{"estimate"};
          std::vector<const DenseVector*> cols{&r.base_vector};
          if (r.upper) names.push_back("cl_upper"), cols.push_back(&r.upper->values);
          if (r.lower) names.push_back("cl_lower"), cols.push_back(&r.lower->values);
          if (r.t_test) {
            report.diagnostics.emplace_back("t_statistic", r.t_test->t);
            report.diagnostics.emplace_back("t_degrees_of_freedom",
                                            static_cast<std::int64_t>(r.t_test->degrees_of_freedom));
            report.diagnostics.emplace_back("t_p_value", r.t_test->p_value);
          }
          report.tables.push_back(state_table(net, "confidence_limits", names, cols));
        } else {
          const SensitivityMatrix s = build_esm(net, meas, z, copts);
          clock.lap("esm");
          report.diagnostics.emplace_back("method", std::string(two_sided ? "esm_two_sided" : "esm"));
          report.diagnostics.emplace_back("estimator_runs", static_cast<std::int64_t>(s.estimator_runs));
          const std::size_t runs = *pert ? pert_trials : trials;
          if (*esm) {
            const ConfidenceLimits cl = cla_from_esm(s, z.half_widths);
            report.tables.push_back(
                state_table(net, "confidence_limits", {"estimate", "cl"}, {&s.base_vector, &cl.values}));
          }
          if (runs > 0) {
            const std::uint64_t used_seed = resolve_seed(seed);
            const PerturbationReport p = random_perturbation_check(net, meas, z, s, runs, used_seed, copts);
            clock.lap("perturbation");
            add_perturbation(report, p, used_seed);
            if (*pert) {
              report.tables.push_back(
                  state_table(net, "perturbation", {"max_difference"}, {&p.max_difference}));
            }
          }
        }
      }
    }
    out << render(report, common.format(), common.timings);
    return kExitOk;
  } catch (const NotConverged& e) {
    err << "hydrocla: " << e.what() << "\n";
    return kExitSolverError;
  } catch (const SingularMatrix& e) {
    err << "hydrocla: " << e.what() << "\n";
    return kExitSolverError;
  } catch (const RankDeficient& e) {
    err << "hydrocla: " << e.what() << "\n";
    return kExitSolverError;
  } catch (const std::exception& e) {
    err << "hydrocla: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace hydrocla
