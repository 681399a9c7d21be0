#include <doctest.h>

#include <cmath>
#include <functional>

#include "hydrocla/errors.hpp"
#include "hydrocla/estimator.hpp"
#include "hydrocla/fixtures.hpp"
#include "oracles.hpp"

using namespace hydrocla;

namespace {

Network triangle(double d_b, double d_c) {
  return Network({{"A", 0.0}, {"B", d_b}, {"C", d_c}},
                 {{"A", "B", 300, 0.2, 100}, {"B", "C", 200, 0.15, 100}, {"A", "C", 400, 0.2, 120}}, {},
                 {{"A", 40.0}});
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-13; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("without meters the estimate is the simulation") {
  for (const char* name : {"net34", "net34_observed", "net65"}) {
    CAPTURE(name);
    const Fixture f = load_fixture(name);
    const EstimateResult r = estimate(f.network, f.measurements);
    const HydraulicState s = simulate(f.network);
    CHECK(r.estimator.delta_d.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((r.state.heads - s.heads).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((r.state.boundary_flows - s.boundary_flows).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK(r.estimator.converged);
    CHECK(r.clamped_nodes.empty());
    CHECK_FALSE(r.second_pass_used);
  }
}

TEST_CASE("constrained least squares matches a grid-search oracle") {
  // True demands 10 and 5.5 l/s, observed 50 % high, one exact head meter set
  // to the true head at B. The oracle searches the one-parameter family of
  // demand variations that reproduce the meter and minimises the weighted sum.
  const double true_b = 0.010, true_c = 0.0055;
  const Network truth = triangle(true_b, true_c);
  const double h_b = oracle::nodal_heads_newton(truth, truth.demands()).heads[1];
  const double obs_b = 1.5 * true_b, obs_c = 1.5 * true_c;
  const Network observed = triangle(obs_b, obs_c);

  MeasurementSet meas;
  meas.default_demand_bound = 0.2;
  meas.head_meters.push_back({"B", h_b, 0.0});

  const EstimateResult r = estimate(observed, meas);
  CHECK(r.estimator.converged);

  auto head_b = [&](double db, double dc) {
    return oracle::nodal_heads_newton(observed, {0.0, obs_b - db, obs_c - dc}).heads[1];
  };
  auto dc_for = [&](double db) {
    return bisect([&](double dc) { return head_b(db, dc) - h_b; }, -0.02, obs_c);
  };
  auto objective = [&](double db) {
    const double dc = dc_for(db);
    return std::pow(db / (0.2 * obs_b), 2) + std::pow(dc / (0.2 * obs_c), 2);
  };
  const double db = golden_min(objective, -0.005, 0.012);
  const double dc = dc_for(db);

  CHECK(std::abs(r.estimator.delta_d(1) - db) <= 2e-7);
  CHECK(std::abs(r.estimator.delta_d(2) - dc) <= 2e-7);
  CHECK(r.estimator.delta_d(0) == 0.0);
  CHECK(r.state.heads(1) == doctest::Approx(h_b).epsilon(1e-9));
  // The true demands also satisfy the meter but cost more.
  CHECK(objective(db) <= objective(obs_b - true_b) + 1e-12);
}

TEST_CASE("exact meters are interpolated") {
  const Fixture f = load_fixture("net65_case3");
  const EstimateResult r = estimate(f.network, f.measurements);
  const DenseVector predicted = predict_meters(f.network, f.measurements, r.state);
  CHECK(predicted(0) == f.measurements.head_meters[0].value);
  for (std::size_t k = 0; k < f.measurements.flow_meters.size(); ++k) {
    const double reading = f.measurements.flow_meters[k].value;
    CHECK(std::abs(predicted(static_cast<Eigen::Index>(1 + k)) - reading) <= 1e-6 * std::abs(reading) + 1e-9);
  }
}

TEST_CASE("adjust_demands clamps at zero") {
  const DenseVector obs = (DenseVector(3) << 1.0, 2.0, 3.0).finished();
  const DenseVector dd = (DenseVector(3) << 0.5, 2.5, -1.0).finished();
  const AdjustedDemands a = adjust_demands(obs, dd);
  CHECK(a.adjusted(0) == 0.5);
  CHECK(a.adjusted(1) == 0.0);
  CHECK(a.adjusted(2) == 4.0);
  CHECK(a.clamped == std::vector<std::size_t>{1});
  CHECK_THROWS_AS(adjust_demands(obs, DenseVector::Zero(2)), Error);
}

TEST_CASE("estimates conserve mass and never increase the objective") {
  for (const char* name : {"net34_case2", "net34_case3", "net65_case3"}) {
    CAPTURE(name);
    const Fixture f = load_fixture(name);
    const EstimateResult r = estimate(f.network, f.measurements);
    CHECK(std::abs(r.state.boundary_flows.sum() - r.adjusted_demands.sum()) <= 1e-9);
    const auto& h = r.estimator.objective_history;
    REQUIRE(h.size() >= 1);
    for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
    CHECK(r.estimator.objective == doctest::Approx(h.back()));
    // Demand variations respect zero bounds and the root.
    const auto root = build_spanning_tree(f.network).root;
    CHECK(r.estimator.delta_d(static_cast<Eigen::Index>(root)) == 0.0);
    const DenseMatrix inc = node_link_incidence(f.network);
    const DenseVector inflow = inc * r.state.flows;
    for (std::size_t v = 0; v < f.network.node_count(); ++v) {
      if (f.network.fixed_head_slot(v)) continue;
      CHECK(std::abs(inflow(static_cast<Eigen::Index>(v)) - r.adjusted_demands(static_cast<Eigen::Index>(v))) <= 1e-9);
    }
  }
}

TEST_CASE("negative adjusted demands trigger a second pass") {
  // A head meter at C almost at reservoir level can only be met by injecting
  // water at C; the clamp then resimulates with C at zero demand.
  const Network net = triangle(0.010, 0.0055);
  MeasurementSet meas;
  meas.demand_bounds["B"] = 0.0;
  meas.head_meters.push_back({"C", 39.999, 0.0});
  const EstimateResult r = estimate(net, meas);
  REQUIRE(r.clamped_nodes == std::vector<std::string>{"C"});
  CHECK(r.second_pass_used);
  CHECK(r.adjusted_demands(2) == 0.0);
  CHECK(r.adjusted_demands(1) == 0.010);
  const HydraulicState s = simulate(net, r.adjusted_demands);
  CHECK((r.state.heads - s.heads).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("estimator input checks") {
  const Fixture f = load_fixture("net65");
  CHECK_THROWS_AS(estimate(f.network, f.measurements, DenseVector::Zero(3)), Error);
  DenseVector neg = to_dense(f.network.demands());
  neg(3) = -1.0;
  CHECK_THROWS_AS(estimate(f.network, f.measurements, neg), Error);
  MeasurementSet bad = f.measurements;
  bad.head_meters.push_back({"nowhere", 1.0, 0.0});
  CHECK_THROWS_AS(estimate(f.network, bad), ValidationError);
}
