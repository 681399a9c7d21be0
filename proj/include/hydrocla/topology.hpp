#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hydrocla/network.hpp"
#include "hydrocla/numerics.hpp"

namespace hydrocla {

/// Spanning-tree decomposition of a network rooted at a fixed-head node.
///
/// Two index spaces are in play. "Network order" is file order (node index,
/// link index as in Network). "Decomposition order" renumbers nodes by DFS
/// discovery with the root last, and links as tree links (paired with the node
/// they lead to) followed by chords in file order. In decomposition order the
/// tree incidence matrix is upper triangular with a nonzero diagonal.
///
/// Loops are numbered physical loops first (one per chord, in chord order)
/// followed by pseudo-loops (one per non-root fixed-head node, file order).
/// A physical loop runs along its chord and returns through the tree. A
/// pseudo-loop runs from its fixed-head node up the tree to the root, so a
/// positive pseudo-loop flow enters the network at that fixed-head node.
struct TreeDecomposition {
  std::size_t root = 0;  ///< node index
  std::size_t node_count = 0;
  std::size_t link_count = 0;

  std::vector<std::size_t> node_order;  ///< decomposition position -> node index
  std::vector<std::size_t> link_order;  ///< decomposition position -> link index
  std::vector<std::size_t> node_position;  ///< node index -> decomposition position
  std::vector<std::size_t> link_position;  ///< link index -> decomposition position

  std::vector<std::size_t> tree_links;   ///< link indices, in decomposition order
  std::vector<std::size_t> chord_links;  ///< link indices, in decomposition order
  /// Fixed-head slot (index into Network::fixed_heads()) of each pseudo-loop.
  std::vector<std::size_t> pseudo_loops;

  /// Tree parent of each node (network order); root maps to itself.
  std::vector<std::size_t> parent;
  /// Link joining each node to its parent (network order); unset for root.
  std::vector<std::optional<std::size_t>> parent_link;
  /// +1 when parent_link is stored parent -> child, -1 otherwise.
  std::vector<int> parent_link_sign;
  std::vector<std::size_t> depth;

  /// (n-1)x(n-1) node-link incidence of the tree, decomposition order.
  /// Entry +1 when the link points into the node, -1 when it leaves it.
  DenseMatrix t_matrix;
  /// l x p loop incidence; columns in decomposition link order.
  DenseMatrix loop_incidence;
  /// Root-to-node path incidence for every node, p columns in decomposition
  /// link order: +1 when the path traverses the link in its stored direction.
  DenseMatrix root_paths;

  std::size_t physical_loop_count() const noexcept { return chord_links.size(); }
  std::size_t loop_count() const noexcept { return chord_links.size() + pseudo_loops.size(); }
  std::size_t tree_link_count() const noexcept { return tree_links.size(); }

  /// Network-order link vector -> decomposition order, and back.
  DenseVector to_decomposition_links(const DenseVector& by_link) const;
  DenseVector to_network_links(const DenseVector& by_position) const;
  /// Network-order node vector -> (n-1) non-root entries in decomposition order.
  DenseVector nonroot_in_decomposition(const DenseVector& by_node) const;
};

/// DFS from `root` visiting incident links in file order. Throws
/// NotConnected or RootNotFixedHead.
TreeDecomposition build_spanning_tree(const Network& net, std::size_t root);

/// Default root: the first fixed-head node in file order.
TreeDecomposition build_spanning_tree(const Network& net);

/// Tree-link flows carrying `nonroot_demands` (m^3/s, n-1 entries,
/// decomposition order) from the root, by back substitution on T. Returns a
/// p-vector in decomposition link order with zero chord flows.
DenseVector initial_tree_flows(const TreeDecomposition& dec, const DenseVector& nonroot_demands);

/// p x (n-1) matrix [T^-1; 0] in decomposition order.
DenseMatrix a_star_matrix(const TreeDecomposition& dec);

/// n x p node-link incidence (network order, +1 = link enters node).
DenseMatrix node_link_incidence(const Network& net);

/// Text listing of tree, chords and loop membership.
std::string describe_topology(const Network& net, const TreeDecomposition& dec);

}  // namespace hydrocla
