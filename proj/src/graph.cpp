#include "cpl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "cpl/errors.hpp"

namespace cpl {

namespace {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void validate_weights(const Eigen::MatrixXd& w) {
  for (int i = 0; i < w.rows(); ++i) {
    if (w(i, i) != 0.0)
      throw input_error("weight matrix has a self-loop at node " + std::to_string(i + 1));
    for (int j = 0; j < w.cols(); ++j)
      if (w(i, j) < 0.0)
        throw input_error("weight matrix has a negative entry at (" + std::to_string(i + 1) +
                          ", " + std::to_string(j + 1) + ")");
  }
}

// Marks every node reachable from `start` following w(i, j) > 0 when
// `forward` is true and w(j, i) > 0 otherwise.
std::vector<char> reachable(const Eigen::MatrixXd& w, int start, bool forward) {
  const int n = static_cast<int>(w.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack = {start};
  seen[start] = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j) {
      const double wij = forward ? w(i, j) : w(j, i);
      if (wij > 0.0 && !seen[j]) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

bool is_subset(const std::vector<int>& inner, const std::vector<int>& outer) {
  return std::all_of(inner.begin(), inner.end(), [&outer](int v) {
    return std::binary_search(outer.begin(), outer.end(), v);
  });
}

}  // namespace

Digraph::Digraph(int n) : n_(n), w_(Eigen::MatrixXd::Zero(std::max(n, 0), std::max(n, 0))) {
  if (n < 0) throw input_error("node count must be nonnegative");
}

Digraph::Digraph(int n, Eigen::MatrixXd weights) : n_(n), w_(std::move(weights)) {
  if (n < 0) throw input_error("node count must be nonnegative");
  if (w_.rows() != n || w_.cols() != n)
    throw input_error("weight matrix shape does not match the node count");
  validate_weights(w_);
}

void Digraph::check_node(int node) const {
  if (node < 1 || node > n_)
    throw input_error("node " + std::to_string(node) + " is outside 1.." + std::to_string(n_));
}

void Digraph::add_edge(int from, int to, double weight) {
  check_node(from);
  check_node(to);
  if (from == to) throw input_error("self-loops are not allowed");
  if (!(weight > 0.0)) throw input_error("edge weight must be positive");
  double& slot = w_(from - 1, to - 1);
  if (slot != 0.0)
    throw input_error("edge " + std::to_string(from) + " -> " + std::to_string(to) +
                      " is already defined");
  slot = weight;
}

double Digraph::weight(int from, int to) const {
  check_node(from);
  check_node(to);
  return w_(from - 1, to - 1);
}

std::vector<int> Digraph::out_neighbors(int node) const {
  check_node(node);
  std::vector<int> result;
  for (int j = 0; j < n_; ++j)
    if (w_(node - 1, j) > 0.0) result.push_back(j + 1);
  return result;
}

double Digraph::out_degree(int node) const {
  check_node(node);
  return w_.row(node - 1).sum();
}

Eigen::VectorXd Digraph::out_degrees() const { return w_.rowwise().sum(); }

Eigen::VectorXd Digraph::in_degrees() const { return w_.colwise().sum().transpose(); }

Eigen::MatrixXd Digraph::laplacian() const {
  Eigen::MatrixXd lap = -w_;
  lap.diagonal() += out_degrees();
  return lap;
}

bool Digraph::is_weight_balanced(double tol) const {
  if (n_ == 0) return false;
  return (out_degrees() - in_degrees()).cwiseAbs().maxCoeff() <= tol;
}

bool Digraph::is_strongly_connected() const {
  if (n_ == 0) return false;
  const std::vector<char> fwd = reachable(w_, 0, true);
  const std::vector<char> bwd = reachable(w_, 0, false);
  for (int i = 0; i < n_; ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

ReducedLaplacian Digraph::reduced_laplacian() const {
  if (!is_strongly_connected() || !is_weight_balanced())
    throw input_error("reduced laplacian requires a strongly connected weight-balanced graph");
  ReducedLaplacian result;
  if (n_ == 1) {
    result.basis = Eigen::MatrixXd::Zero(1, 0);
    result.reduced = Eigen::MatrixXd::Zero(0, 0);
    return result;
  }
  // Householder reflector sending e1 to the normalized all-ones vector; its
  // trailing n-1 columns are an orthonormal basis of the disagreement space.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n_, 1.0 / std::sqrt(double(n_)));
  v(0) -= 1.0;
  const Eigen::MatrixXd reflector =
      Eigen::MatrixXd::Identity(n_, n_) - (2.0 / v.squaredNorm()) * (v * v.transpose());
  result.basis = reflector.rightCols(n_ - 1);
  result.reduced = result.basis.transpose() * laplacian() * result.basis;
  return result;
}

std::vector<std::vector<int>> Digraph::islands(int agent) const {
  check_node(agent);
  const int a = agent - 1;
  std::vector<char> seen(n_, 0);
  seen[a] = 1;
  std::vector<std::vector<int>> result;
  for (int start = 0; start < n_; ++start) {
    if (seen[start]) continue;
    std::vector<int> island = {agent};
    std::vector<int> stack = {start};
    seen[start] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      island.push_back(i + 1);
      for (int j = 0; j < n_; ++j) {
        if (j == a || seen[j]) continue;
        if (w_(i, j) > 0.0 || w_(j, i) > 0.0) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    std::sort(island.begin(), island.end());
    result.push_back(std::move(island));
  }
  if (is_strongly_connected() && is_weight_balanced()) {
    for (const auto& island : result) {
      const Digraph sub = induced_subgraph(island);
      if (!sub.is_strongly_connected() || !sub.is_weight_balanced())
        throw input_error("island decomposition produced an invalid island");
    }
  }
  return result;
}

IslandClasses Digraph::partition_island(int agent, const std::vector<int>& island) const {
  check_node(agent);
  std::vector<int> wanted = island;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());
  const auto all = islands(agent);
  if (std::find(all.begin(), all.end(), wanted) == all.end())
    throw input_error("the given node set is not an island of agent " + std::to_string(agent));

  std::vector<int> closed = out_neighbors(agent);
  closed.push_back(agent);
  std::sort(closed.begin(), closed.end());

  IslandClasses classes;
  for (int node : wanted) {
    if (node == agent) continue;
    if (!std::binary_search(closed.begin(), closed.end(), node)) {
      classes.v3.push_back(node);
    } else if (is_subset(out_neighbors(node), closed)) {
      classes.v4.push_back(node);
    } else {
      classes.v2.push_back(node);
    }
  }
  return classes;
}

bool Digraph::can_identify_internal(int observer, int target) const {
  check_node(observer);
  check_node(target);
  if (observer == target) throw input_error("observer and target must be distinct nodes");
  if (w_(observer - 1, target - 1) <= 0.0) return false;
  std::vector<int> closed = out_neighbors(observer);
  closed.push_back(observer);
  std::sort(closed.begin(), closed.end());
  return is_subset(out_neighbors(target), closed);
}

bool Digraph::can_identify_external(int target, const std::vector<int>& intercepted) const {
  check_node(target);
  std::vector<int> covered = intercepted;
  for (int node : covered) check_node(node);
  std::sort(covered.begin(), covered.end());
  std::vector<int> needed = out_neighbors(target);
  needed.push_back(target);
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  return is_subset(needed, covered);
}

bool Digraph::all_private() const {
  for (int i = 1; i <= n_; ++i)
    for (int j = 1; j <= n_; ++j)
      if (i != j && can_identify_internal(i, j)) return false;
  return true;
}

Digraph Digraph::induced_subgraph(const std::vector<int>& nodes) const {
  std::vector<int> keep = nodes;
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  for (int node : keep) check_node(node);
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) w(a, b) = w_(keep[a] - 1, keep[b] - 1);
  return Digraph(m, std::move(w));
}

Digraph directed_ring(int n) {
  if (n < 3) throw input_error("directed_ring needs at least 3 nodes");
  Digraph g(n);
  for (int i = 1; i <= n; ++i) g.add_edge(i, i % n + 1, 1.0);
  return g;
}

Digraph cyclic_bipartite(int m) {
  if (m < 2) throw input_error("cyclic_bipartite needs at least 2 nodes per side");
  Digraph g(2 * m);
  for (int i = 1; i <= m; ++i) {
    for (int j = m + 1; j <= 2 * m; ++j) {
      g.add_edge(i, j, 1.0);
      g.add_edge(j, i, 1.0);
    }
  }
  return g;
}

Digraph ring_lattice_4regular(int n) {
  if (n < 6) throw input_error("ring_lattice_4regular needs at least 6 nodes");
  Digraph g(n);
  for (int i = 0; i < n; ++i) {
    for (int step : {1, 2}) {
      g.add_edge(i + 1, (i + step) % n + 1, 1.0);
      g.add_edge((i + step) % n + 1, i + 1, 1.0);
    }
  }
  return g;
}

Digraph stacked_prism(int rings, int ring_size) {
  if (rings < 2) throw input_error("stacked_prism needs at least 2 rings");
  if (ring_size < 3) throw input_error("stacked_prism needs at least 3 nodes per ring");
  Digraph g(rings * ring_size);
  const auto id = [ring_size](int ring, int k) { return ring * ring_size + k + 1; };
  for (int r = 0; r < rings; ++r) {
    for (int k = 0; k < ring_size; ++k) {
      const int next = id(r, (k + 1) % ring_size);
      g.add_edge(id(r, k), next, 1.0);
      g.add_edge(next, id(r, k), 1.0);
      if (r + 1 < rings) {
        g.add_edge(id(r, k), id(r + 1, k), 1.0);
        g.add_edge(id(r + 1, k), id(r, k), 1.0);
      }
    }
  }
  return g;
}

Digraph grid_lattice(int rows, int cols) {
  if (rows < 2 || cols < 2) throw input_error("grid_lattice needs at least 2 rows and 2 columns");
  Digraph g(rows * cols);
  const auto id = [cols](int r, int c) { return r * cols + c + 1; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        g.add_edge(id(r, c), id(r, c + 1), 1.0);
        g.add_edge(id(r, c + 1), id(r, c), 1.0);
      }
      if (r + 1 < rows) {
        g.add_edge(id(r, c), id(r + 1, c), 1.0);
        g.add_edge(id(r + 1, c), id(r, c), 1.0);
      }
    }
  }
  return g;
}

Digraph parse_graph_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Digraph g;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;
    const std::string where = " on line " + std::to_string(lineno);
    if (!have_header) {
      if (keyword != "n")
        throw input_error("graph text must start with an 'n <count>' header");
      int count = 0;
      std::string rest;
      if (!(fields >> count) || count < 1 || fields >> rest)
        throw input_error("malformed node count" + where);
      g = Digraph(count);
      have_header = true;
    } else if (keyword == "edge") {
      int from = 0;
      int to = 0;
      double w = 0.0;
      std::string rest;
      if (!(fields >> from >> to >> w) || fields >> rest)
        throw input_error("malformed edge" + where);
      g.add_edge(from, to, w);
    } else {
      throw input_error("unknown keyword '" + keyword + "'" + where);
    }
  }
  if (!have_header) throw input_error("graph text is missing the 'n <count>' header");
  return g;
}

std::string format_graph_text(const Digraph& g) {
  std::ostringstream out;
  out << "n " << g.size() << "\n";
  for (int i = 1; i <= g.size(); ++i)
    for (int j = 1; j <= g.size(); ++j) {
      const double w = g.weights()(i - 1, j - 1);
      if (w > 0.0) out << "edge " << i << " " << j << " " << format_double(w) << "\n";
    }
  return out.str();
}

}  // namespace cpl
