#include "hydrocla/topology.hpp"

#include <algorithm>
#include <sstream>

#include "hydrocla/errors.hpp"

namespace hydrocla {

namespace {

constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);

struct Incidence {
  std::size_t link;
  std::size_t other;
};

}  // namespace

TreeDecomposition build_spanning_tree(const Network& net, std::size_t root) {
  const std::size_t n = net.node_count();
  const std::size_t p = net.link_count();
  if (root >= n) throw RootNotFixedHead("root index out of range");
  if (!net.fixed_head_slot(root)) {
    throw RootNotFixedHead("root node " + net.nodes()[root].id + " is not a fixed-head node");
  }

  std::vector<std::vector<Incidence>> adjacency(n);
  std::vector<LinkRef> links;
  links.reserve(p);
  for (std::size_t e = 0; e < p; ++e) {
    links.push_back(net.link(e));
    adjacency[links[e].from].push_back({e, links[e].to});
    adjacency[links[e].to].push_back({e, links[e].from});
  }

  TreeDecomposition dec;
  dec.root = root;
  dec.node_count = n;
  dec.link_count = p;
  dec.parent.assign(n, kUnvisited);
  dec.parent_link.assign(n, std::nullopt);
  dec.parent_link_sign.assign(n, 0);
  dec.depth.assign(n, 0);

  // Iterative DFS that reproduces the recursive preorder.
  std::vector<std::size_t> preorder;
  std::vector<bool> is_tree_link(p, false);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
  dec.parent[root] = root;
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    if (next == adjacency[u].size()) {
      stack.pop_back();
      continue;
    }
    const Incidence inc = adjacency[u][next++];
    const std::size_t w = inc.other;
    if (dec.parent[w] != kUnvisited) continue;
    dec.parent[w] = u;
    dec.parent_link[w] = inc.link;
    dec.parent_link_sign[w] = links[inc.link].from == u ? 1 : -1;
    dec.depth[w] = dec.depth[u] + 1;
    is_tree_link[inc.link] = true;
    preorder.push_back(w);
    stack.emplace_back(w, 0);
  }
  if (preorder.size() + 1 != n) {
    throw NotConnected("network is not connected: " + std::to_string(n - 1 - preorder.size()) +
                       " node(s) unreachable from root " + net.nodes()[root].id);
  }

  dec.node_order = preorder;
  dec.node_order.push_back(root);
  for (std::size_t v : preorder) dec.tree_links.push_back(*dec.parent_link[v]);
  for (std::size_t e = 0; e < p; ++e) {
    if (!is_tree_link[e]) dec.chord_links.push_back(e);
  }
  dec.link_order = dec.tree_links;
  dec.link_order.insert(dec.link_order.end(), dec.chord_links.begin(), dec.chord_links.end());

  dec.node_position.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) dec.node_position[dec.node_order[k]] = k;
  dec.link_position.assign(p, 0);
  for (std::size_t k = 0; k < p; ++k) dec.link_position[dec.link_order[k]] = k;

  const auto& fixed = net.fixed_heads();
  for (std::size_t s = 0; s < fixed.size(); ++s) {
    if (*net.find_node(fixed[s].id) != root) dec.pseudo_loops.push_back(s);
  }

  // Tree incidence, decomposition order.
  const std::size_t m = n - 1;
  dec.t_matrix = DenseMatrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const LinkRef& l = links[dec.tree_links[k]];
    for (std::size_t node : {l.from, l.to}) {
      if (node == root) continue;
      dec.t_matrix(static_cast<Eigen::Index>(dec.node_position[node]),
                   static_cast<Eigen::Index>(k)) = node == l.to ? 1.0 : -1.0;
    }
  }

  // Root-to-node paths, built down the preorder so parents come first.
  dec.root_paths = DenseMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t v : preorder) {
    const auto row = static_cast<Eigen::Index>(v);
    dec.root_paths.row(row) = dec.root_paths.row(static_cast<Eigen::Index>(dec.parent[v]));
    dec.root_paths(row, static_cast<Eigen::Index>(dec.link_position[*dec.parent_link[v]])) =
        dec.parent_link_sign[v];
  }

  // Loop incidence: chord u->v plus the tree path v -> root -> u; pseudo-loops
  // follow the tree from their fixed-head node to the root.
  const std::size_t l = dec.loop_count();
  dec.loop_incidence =
      DenseMatrix::Zero(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < dec.chord_links.size(); ++k) {
    const std::size_t e = dec.chord_links[k];
    const auto row = static_cast<Eigen::Index>(k);
    dec.loop_incidence.row(row) = dec.root_paths.row(static_cast<Eigen::Index>(links[e].from)) -
                                  dec.root_paths.row(static_cast<Eigen::Index>(links[e].to));
    dec.loop_incidence(row, static_cast<Eigen::Index>(dec.link_position[e])) = 1.0;
  }
  for (std::size_t k = 0; k < dec.pseudo_loops.size(); ++k) {
    const std::size_t node = *net.find_node(fixed[dec.pseudo_loops[k]].id);
    dec.loop_incidence.row(static_cast<Eigen::Index>(dec.chord_links.size() + k)) =
        -dec.root_paths.row(static_cast<Eigen::Index>(node));
  }
  return dec;
}

TreeDecomposition build_spanning_tree(const Network& net) {
  if (net.fixed_heads().empty()) throw RootNotFixedHead("network has no fixed-head node");
  auto root = net.find_node(net.fixed_heads().front().id);
  if (!root) throw RootNotFixedHead("fixed head references an unknown node");
  return build_spanning_tree(net, *root);
}

DenseVector TreeDecomposition::to_decomposition_links(const DenseVector& by_link) const {
  DenseVector out(static_cast<Eigen::Index>(link_count));
  for (std::size_t k = 0; k < link_count; ++k) {
    out(static_cast<Eigen::Index>(k)) = by_link(static_cast<Eigen::Index>(link_order[k]));
  }
  return out;
}

DenseVector TreeDecomposition::to_network_links(const DenseVector& by_position) const {
  DenseVector out(static_cast<Eigen::Index>(link_count));
  for (std::size_t k = 0; k < link_count; ++k) {
    out(static_cast<Eigen::Index>(link_order[k])) = by_position(static_cast<Eigen::Index>(k));
  }
  return out;
}

DenseVector TreeDecomposition::nonroot_in_decomposition(const DenseVector& by_node) const {
  DenseVector out(static_cast<Eigen::Index>(node_count - 1));
  for (std::size_t k = 0; k + 1 < node_count; ++k) {
    out(static_cast<Eigen::Index>(k)) = by_node(static_cast<Eigen::Index>(node_order[k]));
  }
  return out;
}

DenseVector initial_tree_flows(const TreeDecomposition& dec, const DenseVector& nonroot_demands) {
  const auto m = static_cast<Eigen::Index>(dec.node_count - 1);
  if (nonroot_demands.size() != m) throw Error("initial_tree_flows: demand vector size mismatch");
  DenseVector flows = DenseVector::Zero(static_cast<Eigen::Index>(dec.link_count));
  const DenseMatrix& t = dec.t_matrix;
  for (Eigen::Index k = m - 1; k >= 0; --k) {
    double rhs = nonroot_demands(k);
    for (Eigen::Index j = k + 1; j < m; ++j) rhs -= t(k, j) * flows(j);
    flows(k) = rhs / t(k, k);
  }
  return flows;
}

DenseMatrix a_star_matrix(const TreeDecomposition& dec) {
  const auto m = static_cast<Eigen::Index>(dec.node_count - 1);
  DenseMatrix a = DenseMatrix::Zero(static_cast<Eigen::Index>(dec.link_count), m);
  if (m == 0) return a;
  a.topRows(m) = dec.t_matrix.triangularView<Eigen::Upper>().solve(DenseMatrix::Identity(m, m));
  return a;
}

DenseMatrix node_link_incidence(const Network& net) {
  DenseMatrix a = DenseMatrix::Zero(static_cast<Eigen::Index>(net.node_count()),
                                    static_cast<Eigen::Index>(net.link_count()));
  for (std::size_t e = 0; e < net.link_count(); ++e) {
    const LinkRef l = net.link(e);
    a(static_cast<Eigen::Index>(l.to), static_cast<Eigen::Index>(e)) += 1.0;
    a(static_cast<Eigen::Index>(l.from), static_cast<Eigen::Index>(e)) -= 1.0;
  }
  return a;
}

std::string describe_topology(const Network& net, const TreeDecomposition& dec) {
  std::ostringstream os;
  const auto& nodes = net.nodes();
  os << "root " << nodes[dec.root].id << '\n';
  os << "nodes " << dec.node_count << "  links " << dec.link_count << "  tree links "
     << dec.tree_links.size() << "  chords " << dec.chord_links.size() << "  pseudo-loops "
     << dec.pseudo_loops.size() << "  loops " << dec.loop_count() << '\n';
  os << "node order:";
  for (std::size_t v : dec.node_order) os << ' ' << nodes[v].id;
  os << "\ntree links:\n";
  for (std::size_t k = 0; k < dec.tree_links.size(); ++k) {
    os << "  " << net.link_label(dec.tree_links[k]) << " -> node "
       << nodes[dec.node_order[k]].id << '\n';
  }
  os << "loops:\n";
  for (std::size_t r = 0; r < dec.loop_count(); ++r) {
    if (r < dec.chord_links.size()) {
      os << "  L" << r + 1 << " chord " << net.link_label(dec.chord_links[r]) << ':';
    } else {
      os << "  L" << r + 1 << " pseudo-loop to fixed head "
         << net.fixed_heads()[dec.pseudo_loops[r - dec.chord_links.size()]].id << ':';
    }
    for (std::size_t k = 0; k < dec.link_count; ++k) {
      const double s = dec.loop_incidence(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
      if (s != 0.0) os << ' ' << (s > 0 ? '+' : '-') << net.link_label(dec.link_order[k]);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hydrocla
