#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "simex/errors.hpp"

namespace simex {

using NodeId = int;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Undirected edge in canonical order (u < v).
struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  auto operator<=>(const Edge&) const = default;
};

// Immutable undirected graph with node features. Edges are stored sorted,
// canonical and unique; adjacency lists are sorted by neighbor id.
class Graph {
 public:
  // Node count equals the feature row count. Edges are canonicalized and
  // deduplicated; self-loops and out-of-range endpoints are rejected.
  Graph(std::vector<Edge> edges, Matrix features,
        std::vector<std::string> node_labels = {});

  int node_count() const { return static_cast<int>(x_.rows()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int feature_dim() const { return static_cast<int>(x_.cols()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return x_; }
  const std::vector<std::string>& node_labels() const { return labels_; }

  bool has_edge(NodeId u, NodeId v) const { return edge_index(u, v) >= 0; }
  // Index into edges() or -1.
  int edge_index(NodeId u, NodeId v) const;
  // (neighbor, edge index) pairs in ascending neighbor order.
  std::span<const std::pair<NodeId, int>> neighbors(NodeId u) const;

 private:
  std::vector<Edge> edges_;
  Matrix x_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::pair<NodeId, int>>> adj_;
};

// Per-edge non-negative weights, indexed like Graph::edges().
struct EdgeWeights {
  std::vector<double> values;

  static EdgeWeights ones(const Graph& g) {
    return {std::vector<double>(g.edge_count(), 1.0)};
  }
  static EdgeWeights zeros(const Graph& g) {
    return {std::vector<double>(g.edge_count(), 0.0)};
  }
  double& operator[](int e) { return values[e]; }
  double operator[](int e) const { return values[e]; }
  int size() const { return static_cast<int>(values.size()); }
};

// Symmetric renormalized adjacency in CSR form. Includes the implicit
// diagonal of the self-loop augmentation; columns are ascending within each
// row. degree[i] = 1 + weighted degree of i.
struct NormalizedAdjacency {
  int node_count = 0;
  std::vector<int> row_ptr;     // size node_count + 1
  std::vector<int> col;         // size nnz
  std::vector<double> val;      // size nnz
  std::vector<int> entry_edge;  // size nnz; source edge index, -1 = diagonal
  std::vector<double> degree;   // size node_count

  int nnz() const { return static_cast<int>(col.size()); }
  // Dense product A * x.
  Matrix multiply(const Matrix& x) const;
  // Single row of A * x; out must have x.cols() entries.
  void multiply_row(const Matrix& x, int row, Eigen::Ref<Eigen::RowVectorXd> out) const;
};

// Nodes within k hops of the seed set, plus the edges lying on paths of
// length <= k from a seed (equivalently: edges whose closer endpoint is at
// distance <= k-1).
struct ComputationSubgraph {
  std::vector<NodeId> nodes;      // ascending original ids
  std::vector<int> edge_indices;  // ascending indices into Graph::edges()
  int radius = 0;

  // Position of v in nodes, or -1.
  int local_id(NodeId v) const;
};

// Reads "u v" edge lines ('#' comments and blank lines allowed) plus a
// headerless CSV of per-node feature rows. Node count = CSV row count.
Graph load_graph(const std::string& edges_path, const std::string& features_path);

// D^{-1/2} (W + I) D^{-1/2} with D = I + diag(weighted degrees). Entries for
// zero-weight edges are dropped; the diagonal is always kept.
NormalizedAdjacency normalize(const Graph& g, const EdgeWeights& w);

// Same, but keeps entries for zero-weight edges so the sparsity pattern is a
// function of the edge list alone. Used when differentiating through weights.
NormalizedAdjacency normalize_keep_pattern(int node_count,
                                           std::span<const Edge> edges,
                                           const Vector& w);

ComputationSubgraph khop_subgraph(const Graph& g, std::span<const NodeId> seeds,
                                  int k);

// Stochastic block model with feature means drawn per block, so communities
// are separable in feature space. Deterministic for a fixed seed.
Graph generate_sbm(const std::vector<int>& block_sizes, double p_in,
                   double p_out, int feature_dim, std::uint64_t seed);

}  // namespace simex
