#pragma once

// Weighted digraphs for consensus analysis: Laplacian and balance queries,
// island decomposition, and privacy classification of observer/target pairs.
//
// Edge convention: a_ij > 0 means agent i reads the output of agent j, so j
// is an out-neighbor of i and the dynamics of i couples to y_j. Node ids are
// 1-based at this interface; matrix rows/columns are 0-based (row k is node
// k+1).

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpl {

// Orthonormal completion of the consensus direction. `basis` is n x (n-1)
// with columns orthogonal to the all-ones vector; `reduced` = basisT * L * basis.
// For a strongly connected weight-balanced graph, reduced + reducedT is
// symmetric positive definite.
struct ReducedLaplacian {
  Eigen::MatrixXd basis;
  Eigen::MatrixXd reduced;
};

// Split of one island (minus the designated agent) by observability role:
//   v2: out-neighbors of the agent whose own out-neighborhood escapes the
//       agent's closed out-neighborhood (shielding boundary),
//   v3: island members the agent does not listen to directly (hidden),
//   v4: out-neighbors fully enclosed by the agent's closed out-neighborhood.
struct IslandClasses {
  std::vector<int> v2;
  std::vector<int> v3;
  std::vector<int> v4;
};

class Digraph {
 public:
  Digraph() = default;
  explicit Digraph(int n);
  Digraph(int n, Eigen::MatrixXd weights);

  int size() const { return n_; }
  const Eigen::MatrixXd& weights() const { return w_; }

  // Node arguments are 1-based. add_edge rejects self-loops, negative
  // weights, and redefinition of an existing edge.
  void add_edge(int from, int to, double weight);
  double weight(int from, int to) const;
  std::vector<int> out_neighbors(int node) const;
  double out_degree(int node) const;
  Eigen::VectorXd out_degrees() const;
  Eigen::VectorXd in_degrees() const;

  Eigen::MatrixXd laplacian() const;
  bool is_weight_balanced(double tol = 1e-9) const;
  bool is_strongly_connected() const;
  ReducedLaplacian reduced_laplacian() const;

  // Islands of `agent`: connected components (undirected sense) of the graph
  // with `agent` removed, each unioned with {agent}. Every island subgraph is
  // checked to be strongly connected and weight-balanced.
  std::vector<std::vector<int>> islands(int agent) const;
  IslandClasses partition_island(int agent, const std::vector<int>& island) const;

  bool can_identify_internal(int observer, int target) const;
  bool can_identify_external(int target, const std::vector<int>& intercepted) const;
  bool all_private() const;

  // Subgraph induced by `nodes` (1-based, deduplicated, sorted internally);
  // node k of the result is the k-th smallest member of `nodes`.
  Digraph induced_subgraph(const std::vector<int>& nodes) const;

 private:
  void check_node(int node) const;

  int n_ = 0;
  Eigen::MatrixXd w_;  // n x n, nonnegative, zero diagonal
};

// Unit-weight generator families; undirected families emit symmetric weights.
// Sizes below each family minimum are rejected.
Digraph directed_ring(int n);                       // n >= 3
Digraph cyclic_bipartite(int m);                    // complete bipartite on m+m, m >= 2
Digraph ring_lattice_4regular(int n);               // neighbors at distance 1 and 2, n >= 6
Digraph stacked_prism(int rings, int ring_size);    // rings >= 2, ring_size >= 3
Digraph grid_lattice(int rows, int cols);           // rows, cols >= 2

// Text format: header "n <count>", then "edge <i> <j> <weight>" lines meaning
// a_ij = weight. '#' starts a comment. Rejects self-loops and negative weights.
Digraph parse_graph_text(const std::string& text);
std::string format_graph_text(const Digraph& g);

}  // namespace cpl
