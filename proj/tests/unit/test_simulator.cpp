#include <doctest.h>

#include <random>

#include "hydrocla/errors.hpp"
#include "hydrocla/fixtures.hpp"
#include "hydrocla/simulator.hpp"
#include "oracles.hpp"

using namespace hydrocla;

namespace {

SolverOptions tight() {
  SolverOptions o;
  o.tol_loop_residual = 1e-10;
  return o;
}

void check_against_oracle(const Network& net, const HydraulicState& s, double tol) {
  const auto oracle_sol = oracle::nodal_heads_newton(net, net.demands());
  REQUIRE(oracle_sol.max_imbalance < 1e-10);
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    CHECK(std::abs(s.heads(static_cast<Eigen::Index>(v)) - oracle_sol.heads[v]) <= tol);
  }
  for (std::size_t e = 0; e < net.pipes().size(); ++e) {
    CHECK(std::abs(s.flows(static_cast<Eigen::Index>(e)) - oracle_sol.flows[e]) <= 1e-7);
  }
}

void check_mass_balance(const Network& net, const HydraulicState& s, const DenseVector& demands) {
  const DenseMatrix inc = node_link_incidence(net);
  const DenseVector inflow = inc * s.flows;
  for (std::size_t v = 0; v < net.node_count(); ++v) {
    const auto vi = static_cast<Eigen::Index>(v);
    double boundary = 0.0;
    if (auto slot = net.fixed_head_slot(v)) boundary = s.boundary_flows(static_cast<Eigen::Index>(*slot));
    CHECK(std::abs(inflow(vi) + boundary - demands(vi)) <= 1e-12);
  }
  CHECK(std::abs(s.boundary_flows.sum() - demands.sum()) <= 1e-12);
}

}  // namespace

TEST_CASE("hydrostatic network has zero flow") {
  const Network net({{"R", 0.0}, {"a", 0.0}, {"b", 0.0}},
                    {{"R", "a", 100, 0.2, 100}, {"a", "b", 100, 0.2, 100}, {"b", "R", 100, 0.2, 100}}, {},
                    {{"R", 25.0}});
  const HydraulicState s = simulate(net);
  CHECK(s.flows.cwiseAbs().maxCoeff() <= 1e-12);
  for (Eigen::Index v = 0; v < 3; ++v) CHECK(s.heads(v) == doctest::Approx(25.0));
  CHECK(s.boundary_flows(0) == doctest::Approx(0.0));
}

TEST_CASE("triangle agrees with the nodal-heads oracle") {
  const Network net({{"A", 0.0}, {"B", 0.01}, {"C", 0.0055}},
                    {{"A", "B", 300, 0.2, 100}, {"B", "C", 200, 0.15, 100}, {"A", "C", 400, 0.2, 120}}, {},
                    {{"A", 40.0}});
  const SimulationResult r = simulate_detailed(net, build_spanning_tree(net), to_dense(net.demands()), tight());
  CHECK(r.residual <= 1e-10);
  CHECK(r.iterations > 0);
  check_against_oracle(net, r.state, 1e-8);
  check_mass_balance(net, r.state, to_dense(net.demands()));
}

TEST_CASE("random networks agree with the nodal-heads oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = oracle::random_network(rng);
    const HydraulicState s = simulate(net, tight());
    check_against_oracle(net, s, 1e-7);
    check_mass_balance(net, s, to_dense(net.demands()));
  }
}

TEST_CASE("fixed heads are reproduced and the root does not matter") {
  const Network net = load_fixture("net65").network;
  SolverOptions opts = tight();
  const HydraulicState base = simulate(net, opts);
  const auto fixed = net.fixed_head_values();
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    CHECK(base.heads(static_cast<Eigen::Index>(net.fixed_head_nodes()[k])) == fixed[k]);
  }
  check_mass_balance(net, base, to_dense(net.demands()));
  for (const auto& fh : net.fixed_heads()) {
    opts.root = fh.id;
    const HydraulicState other = simulate(net, opts);
    CHECK((other.heads - base.heads).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK((other.flows - base.flows).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK((other.boundary_flows - base.boundary_flows).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("net34 with pumps converges and balances") {
  const Network net = load_fixture("net34").network;
  const SimulationResult r = simulate_detailed(net, build_spanning_tree(net), to_dense(net.demands()), tight());
  CHECK(r.residual <= 1e-10);
  check_mass_balance(net, r.state, to_dense(net.demands()));
  const DenseVector z = state_vector(r.state);
  REQUIRE(z.size() == 34 + 8);
  CHECK(z(34) == r.state.boundary_flows(0) * 1000.0);
  // Residual history ends at the reported residual and drops overall.
  REQUIRE(!r.residual_history.empty());
  CHECK(r.residual_history.back() == r.residual);
  CHECK(r.residual_history.back() < r.residual_history.front());
}

TEST_CASE("the power-law reading of the net34 pump data has no operating point") {
  // Kept as an audit of the fixture transcription: under h = A - B Q^C the
  // pump between two fixed heads cannot close its pseudo-loop.
  const Network q = load_fixture("net34").network;
  const Network p(q.nodes(), q.pipes(), q.pumps(), q.fixed_heads(), PumpCurve::power);
  CHECK_THROWS_AS(simulate(p), NotConverged);
}

TEST_CASE("solver options are validated") {
  const Network net = load_fixture("net65").network;
  SolverOptions o;
  o.max_iters = 0;
  CHECK_THROWS_AS(simulate(net, o), Error);
  o = {};
  o.tol_loop_residual = 0.0;
  CHECK_THROWS_AS(simulate(net, o), Error);
  o = {};
  o.root = "not-a-node";
  CHECK_THROWS_AS(simulate(net, o), RootNotFixedHead);
  o = {};
  o.root = net.nodes()[1].id;
  CHECK_THROWS(simulate(net, o));
  CHECK_THROWS_AS(simulate(net, DenseVector::Zero(3)), Error);
  o = {};
  o.max_iters = 1;
  CHECK_THROWS_AS(simulate(net, o), NotConverged);
}
