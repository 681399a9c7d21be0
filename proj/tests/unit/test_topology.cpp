#include <doctest.h>

#include <random>

#include "hydrocla/errors.hpp"
#include "hydrocla/fixtures.hpp"
#include "hydrocla/topology.hpp"
#include "oracles.hpp"

using namespace hydrocla;

namespace {

DenseVector to_dense_demands(const Network& net) {
  const auto d = net.demands();
  return Eigen::Map<const DenseVector>(d.data(), static_cast<Eigen::Index>(d.size()));
}

// Node-link incidence restricted to non-root nodes, both axes in
// decomposition order.
DenseMatrix decomposition_incidence(const Network& net, const TreeDecomposition& dec) {
  const DenseMatrix full = node_link_incidence(net);
  const auto m = static_cast<Eigen::Index>(dec.node_count - 1);
  const auto p = static_cast<Eigen::Index>(dec.link_count);
  DenseMatrix out(m, p);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      out(i, k) = full(static_cast<Eigen::Index>(dec.node_order[i]), static_cast<Eigen::Index>(dec.link_order[k]));
    }
  }
  return out;
}

Eigen::Index rank_of(const DenseMatrix& a) {
  Eigen::FullPivLU<DenseMatrix> lu(a);
  return lu.rank();
}

void check_structure(const Network& net, const TreeDecomposition& dec) {
  const auto n = dec.node_count;
  const auto p = dec.link_count;
  const auto l = dec.loop_count();
  REQUIRE(dec.tree_link_count() == n - 1);
  REQUIRE(dec.physical_loop_count() == p - n + 1);
  REQUIRE(dec.pseudo_loops.size() == net.fixed_head_count() - 1);
  REQUIRE(dec.loop_incidence.rows() == static_cast<Eigen::Index>(l));
  REQUIRE(dec.loop_incidence.cols() == static_cast<Eigen::Index>(p));
  CHECK(dec.node_order.back() == dec.root);

  // T is upper triangular with a nonzero diagonal.
  const DenseMatrix& t = dec.t_matrix;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    CHECK(t(i, i) != 0.0);
    for (Eigen::Index j = 0; j < i; ++j) CHECK(t(i, j) == 0.0);
  }
  const DenseMatrix inc = decomposition_incidence(net, dec);
  CHECK((inc.leftCols(t.cols()) - t).cwiseAbs().maxCoeff() == 0.0);

  if (l > 0) {
    CHECK(rank_of(dec.loop_incidence) == static_cast<Eigen::Index>(l));
    // Physical loops are cycles: incidence annihilates them.
    for (std::size_t r = 0; r < dec.physical_loop_count(); ++r) {
      const DenseVector row = dec.loop_incidence.row(static_cast<Eigen::Index>(r)).transpose();
      CHECK((inc * row).cwiseAbs().maxCoeff() == 0.0);
      const auto chord_pos = static_cast<Eigen::Index>(dec.link_position[dec.chord_links[r]]);
      CHECK(row(chord_pos) == 1.0);
    }
  }
  // Pseudo-loops are paths: a positive flow enters at the fixed-head node and
  // leaves at the root.
  const DenseMatrix full = node_link_incidence(net);
  for (std::size_t k = 0; k < dec.pseudo_loops.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(dec.physical_loop_count() + k);
    const DenseVector by_link = dec.to_network_links(dec.loop_incidence.row(r).transpose());
    const DenseVector balance = full * by_link;
    const std::size_t j = *net.find_node(net.fixed_heads()[dec.pseudo_loops[k]].id);
    for (std::size_t v = 0; v < n; ++v) {
      const double expected = v == j ? -1.0 : (v == dec.root ? 1.0 : 0.0);
      CHECK(balance(static_cast<Eigen::Index>(v)) == expected);
    }
  }

  // A* inverts the tree part of the incidence.
  const DenseMatrix a_star = a_star_matrix(dec);
  REQUIRE(a_star.rows() == static_cast<Eigen::Index>(p));
  REQUIRE(a_star.cols() == static_cast<Eigen::Index>(n - 1));
  const DenseMatrix prod = inc * a_star;
  CHECK((prod - DenseMatrix::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <= 1e-12);
  if (a_star.rows() > a_star.cols()) {
    CHECK(a_star.bottomRows(a_star.rows() - a_star.cols()).cwiseAbs().maxCoeff() == 0.0);
  }

  // Initial tree flows satisfy mass balance at every non-root node.
  const DenseVector d = dec.nonroot_in_decomposition(to_dense_demands(net));
  const DenseVector q = initial_tree_flows(dec, d);
  CHECK((inc * q - d).cwiseAbs().maxCoeff() <= 1e-15);
  for (std::size_t c = dec.tree_link_count(); c < p; ++c) CHECK(q(static_cast<Eigen::Index>(c)) == 0.0);

  // Index maps are inverse permutations.
  for (std::size_t i = 0; i < n; ++i) CHECK(dec.node_position[dec.node_order[i]] == i);
  for (std::size_t k = 0; k < p; ++k) CHECK(dec.link_position[dec.link_order[k]] == k);
  DenseVector ramp(static_cast<Eigen::Index>(p));
  for (Eigen::Index k = 0; k < ramp.size(); ++k) ramp(k) = static_cast<double>(k);
  CHECK(dec.to_network_links(dec.to_decomposition_links(ramp)) == ramp);
}

}  // namespace

TEST_CASE("net34 rooted at node 30") {
  const Network net = load_fixture("net34").network;
  const auto root = net.find_node("30");
  REQUIRE(root);
  const TreeDecomposition dec = build_spanning_tree(net, *root);
  CHECK(dec.root == *root);
  CHECK(dec.physical_loop_count() == 14);
  CHECK(dec.pseudo_loops.size() == 7);
  CHECK(dec.loop_count() == 21);
  check_structure(net, dec);
  // First fixed head in the file is the default root.
  CHECK(build_spanning_tree(net).root == *root);
}

TEST_CASE("net65 structure under every admissible root") {
  const Network net = load_fixture("net65").network;
  for (std::size_t r : net.fixed_head_nodes()) {
    const TreeDecomposition dec = build_spanning_tree(net, r);
    CHECK(dec.loop_count() == 92 - 65 + 1 + 4);
    check_structure(net, dec);
  }
}

TEST_CASE("random networks satisfy the structural identities") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const Network net = oracle::random_network(rng);
    for (std::size_t r : net.fixed_head_nodes()) check_structure(net, build_spanning_tree(net, r));
  }
}

TEST_CASE("pure tree has no loops") {
  const Network net({{"R", 0.0}, {"a", 0.001}, {"b", 0.002}, {"c", 0.003}},
                    {{"R", "a", 100, 0.2, 100}, {"b", "a", 100, 0.2, 100}, {"a", "c", 100, 0.2, 100}}, {},
                    {{"R", 10.0}});
  const TreeDecomposition dec = build_spanning_tree(net, 0);
  CHECK(dec.loop_count() == 0);
  check_structure(net, dec);
  // Tree flows by hand: R-a carries everything, b-a is stored against the flow.
  const DenseVector q = dec.to_network_links(
      initial_tree_flows(dec, dec.nonroot_in_decomposition(to_dense_demands(net))));
  CHECK(q(0) == doctest::Approx(0.006));
  CHECK(q(1) == doctest::Approx(-0.002));
  CHECK(q(2) == doctest::Approx(0.003));
}

TEST_CASE("two-node network with two fixed heads has one pseudo-loop") {
  const Network net({{"R", 0.0}, {"S", 0.0}}, {{"R", "S", 100, 0.2, 100}}, {}, {{"R", 10.0}, {"S", 8.0}});
  const TreeDecomposition dec = build_spanning_tree(net, 0);
  CHECK(dec.physical_loop_count() == 0);
  CHECK(dec.loop_count() == 1);
  check_structure(net, dec);
}

TEST_CASE("small looped network with two fixed heads") {
  // Two physical loops plus one pseudo-loop.
  const Network net({{"1", 0.0}, {"2", 0.01}, {"3", 0.02}, {"4", 0.01}, {"5", 0.0}},
                    {{"1", "2", 300, 0.3, 100},
                     {"2", "3", 300, 0.2, 100},
                     {"3", "4", 300, 0.2, 100},
                     {"4", "5", 300, 0.3, 100},
                     {"2", "4", 400, 0.2, 100},
                     {"1", "3", 500, 0.25, 100}},
                    {}, {{"1", 50.0}, {"5", 48.0}});
  for (std::size_t r : net.fixed_head_nodes()) {
    const TreeDecomposition dec = build_spanning_tree(net, r);
    CHECK(dec.physical_loop_count() == 2);
    CHECK(dec.loop_count() == 3);
    check_structure(net, dec);
  }
  const std::string text = describe_topology(net, build_spanning_tree(net));
  CHECK(text.find("root 1") == 0);
  CHECK(text.find("pseudo-loop to fixed head 5") != std::string::npos);
}

TEST_CASE("decomposition errors") {
  const Network net({{"R", 0.0}, {"a", 0.0}, {"b", 0.0}}, {{"R", "a", 1, 0.1, 100}}, {}, {{"R", 1.0}});
  CHECK_THROWS_AS(build_spanning_tree(net, 0), NotConnected);
  const Network ok({{"R", 0.0}, {"a", 0.0}}, {{"R", "a", 1, 0.1, 100}}, {}, {{"R", 1.0}});
  CHECK_THROWS_AS(build_spanning_tree(ok, 1), RootNotFixedHead);
  CHECK_THROWS_AS(build_spanning_tree(ok, 7), RootNotFixedHead);
  const Network none({{"R", 0.0}, {"a", 0.0}}, {{"R", "a", 1, 0.1, 100}}, {}, {});
  CHECK_THROWS_AS(build_spanning_tree(none), RootNotFixedHead);
  const TreeDecomposition dec = build_spanning_tree(ok, 0);
  CHECK_THROWS_AS(initial_tree_flows(dec, DenseVector::Zero(3)), Error);
}
