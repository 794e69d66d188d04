#include "simex/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>

#include "simex/rng.hpp"

namespace simex {

Graph::Graph(std::vector<Edge> edges, Matrix features,
             std::vector<std::string> node_labels)
    : x_(std::move(features)), labels_(std::move(node_labels)) {
  const int n = static_cast<int>(x_.rows());
  if (n < 1) throw DimensionError("graph needs at least one feature row");
  if (x_.cols() < 1) throw DimensionError("feature dimension must be positive");
  if (!labels_.empty() && static_cast<int>(labels_.size()) != n)
    throw DimensionError("node label count does not match node count");

  for (Edge& e : edges) {
    if (e.u == e.v)
      throw ValidationError("self-loop at node " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 0 || e.v >= n)
      throw ValidationError("edge endpoint out of range: (" +
                            std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") with " + std::to_string(n) + " nodes");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  adj_.resize(n);
  for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
    adj_[edges_[e].u].emplace_back(edges_[e].v, e);
    adj_[edges_[e].v].emplace_back(edges_[e].u, e);
  }
  // Sorted edge iteration fills each list in ascending neighbor order already;
  // sort anyway to keep the invariant independent of construction details.
  for (auto& list : adj_) std::sort(list.begin(), list.end());
}

int Graph::edge_index(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  if (u < 0 || v >= node_count() || u == v) return -1;
  const Edge probe{u, v};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), probe);
  if (it != edges_.end() && *it == probe)
    return static_cast<int>(it - edges_.begin());
  return -1;
}

std::span<const std::pair<NodeId, int>> Graph::neighbors(NodeId u) const {
  if (u < 0 || u >= node_count())
    throw ValidationError("node id out of range: " + std::to_string(u));
  return adj_[u];
}

Matrix NormalizedAdjacency::multiply(const Matrix& x) const {
  if (static_cast<int>(x.rows()) != node_count)
    throw DimensionError("matrix rows do not match adjacency dimension");
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (int i = 0; i < node_count; ++i)
    for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e)
      y.row(i) += val[e] * x.row(col[e]);
  return y;
}

void NormalizedAdjacency::multiply_row(const Matrix& x, int row,
                                       Eigen::Ref<Eigen::RowVectorXd> out) const {
  out.setZero();
  for (int e = row_ptr[row]; e < row_ptr[row + 1]; ++e)
    out += val[e] * x.row(col[e]);
}

int ComputationSubgraph::local_id(NodeId v) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), v);
  if (it != nodes.end() && *it == v) return static_cast<int>(it - nodes.begin());
  return -1;
}

namespace {

// Shared CSR builder. Degrees accumulate in edge-list order so subgraph and
// full-graph degrees agree bitwise for nodes whose incidence is complete.
NormalizedAdjacency build_normalized(int node_count, std::span<const Edge> edges,
                                     std::span<const double> w, bool keep_zero) {
  if (static_cast<int>(w.size()) != static_cast<int>(edges.size()))
    throw DimensionError("weight count " + std::to_string(w.size()) +
                         " does not match edge count " +
                         std::to_string(edges.size()));
  for (std::size_t e = 0; e < w.size(); ++e) {
    if (!(w[e] >= 0.0))
      throw ValidationError("negative or non-finite weight " +
                            std::to_string(w[e]) + " on edge " +
                            std::to_string(e));
  }

  NormalizedAdjacency a;
  a.node_count = node_count;
  a.degree.assign(node_count, 1.0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    a.degree[edges[e].u] += w[e];
    a.degree[edges[e].v] += w[e];
  }

  // Row entries: neighbors in ascending id order with the diagonal merged in.
  std::vector<std::vector<std::pair<int, int>>> rows(node_count);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    if (!keep_zero && w[e] == 0.0) continue;
    rows[edges[e].u].emplace_back(edges[e].v, e);
    rows[edges[e].v].emplace_back(edges[e].u, e);
  }
  a.row_ptr.assign(node_count + 1, 0);
  for (int i = 0; i < node_count; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    a.row_ptr[i + 1] = a.row_ptr[i] + static_cast<int>(rows[i].size()) + 1;
  }
  const int nnz = a.row_ptr[node_count];
  a.col.reserve(nnz);
  a.val.reserve(nnz);
  a.entry_edge.reserve(nnz);
  for (int i = 0; i < node_count; ++i) {
    bool diag_done = false;
    auto push_diag = [&] {
      a.col.push_back(i);
      a.val.push_back(1.0 / a.degree[i]);
      a.entry_edge.push_back(-1);
      diag_done = true;
    };
    for (const auto& [j, e] : rows[i]) {
      if (!diag_done && j > i) push_diag();
      a.col.push_back(j);
      a.val.push_back(w[e] / std::sqrt(a.degree[i] * a.degree[j]));
      a.entry_edge.push_back(e);
    }
    if (!diag_done) push_diag();
  }
  return a;
}

}  // namespace

NormalizedAdjacency normalize(const Graph& g, const EdgeWeights& w) {
  return build_normalized(g.node_count(), g.edges(), w.values, false);
}

NormalizedAdjacency normalize_keep_pattern(int node_count,
                                           std::span<const Edge> edges,
                                           const Vector& w) {
  return build_normalized(node_count, edges,
                          std::span<const double>(w.data(), w.size()), true);
}

Graph load_graph(const std::string& edges_path, const std::string& features_path) {
  std::ifstream fs(features_path);
  if (!fs) throw IoError("cannot open features file: " + features_path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(fs, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && *end == ' ') ++end;
      if (end == begin || *end != '\0')
        throw ParseError(features_path + ":" + std::to_string(lineno) +
                         ": cell \"" + cell + "\" is not a number");
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DimensionError(features_path + ":" + std::to_string(lineno) +
                           ": row has " + std::to_string(row.size()) +
                           " cells, expected " +
                           std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("features file is empty: " + features_path);

  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.front().size());
  Matrix x(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) x(i, j) = rows[i][j];

  std::ifstream es(edges_path);
  if (!es) throw IoError("cannot open edges file: " + edges_path);
  std::vector<Edge> edges;
  lineno = 0;
  while (std::getline(es, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = line.find_first_not_of(" \t");
    if (pos == std::string::npos || line[pos] == '#') continue;
    std::istringstream ls(line);
    std::string ta, tb, extra;
    ls >> ta >> tb;
    const bool trailing = static_cast<bool>(ls >> extra);
    int a = 0, b = 0;
    auto ra = std::from_chars(ta.data(), ta.data() + ta.size(), a);
    auto rb = std::from_chars(tb.data(), tb.data() + tb.size(), b);
    if (tb.empty() || trailing || ra.ec != std::errc() ||
        ra.ptr != ta.data() + ta.size() || rb.ec != std::errc() ||
        rb.ptr != tb.data() + tb.size())
      throw ParseError(edges_path + ":" + std::to_string(lineno) +
                       ": expected two node ids, got \"" + line + "\"");
    if (a >= n || b >= n)
      throw ValidationError(edges_path + ":" + std::to_string(lineno) +
                            ": node id exceeds feature row count " +
                            std::to_string(n));
    edges.push_back({a, b});
  }
  return Graph(std::move(edges), std::move(x));
}

ComputationSubgraph khop_subgraph(const Graph& g, std::span<const NodeId> seeds,
                                  int k) {
  if (k < 0) throw ValidationError("hop count must be non-negative");
  if (seeds.empty()) throw ValidationError("seed set must be non-empty");
  for (NodeId s : seeds)
    if (s < 0 || s >= g.node_count())
      throw ValidationError("seed node out of range: " + std::to_string(s));

  const int unreached = k + 1;
  std::vector<int> dist(g.node_count(), unreached);
  std::deque<NodeId> queue;
  for (NodeId s : seeds) {
    if (dist[s] == 0) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] == k) continue;
    for (const auto& [v, e] : g.neighbors(u)) {
      if (dist[v] > dist[u] + 1) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }

  ComputationSubgraph sub;
  sub.radius = k;
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (dist[v] <= k) sub.nodes.push_back(v);
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edges()[e];
    if (std::min(dist[ed.u], dist[ed.v]) <= k - 1) sub.edge_indices.push_back(e);
  }
  return sub;
}

Graph generate_sbm(const std::vector<int>& block_sizes, double p_in,
                   double p_out, int feature_dim, std::uint64_t seed) {
  if (block_sizes.empty()) throw ValidationError("block list must be non-empty");
  for (int b : block_sizes)
    if (b < 1) throw ValidationError("block sizes must be positive");
  if (feature_dim < 1) throw ValidationError("feature dimension must be positive");
  if (!(p_out >= 0.0 && p_in <= 1.0 && p_out < p_in))
    throw ValidationError("require 0 <= p_out < p_in <= 1");

  int n = 0;
  for (int b : block_sizes) n += b;
  std::vector<int> block_of(n);
  {
    int v = 0;
    for (int b = 0; b < static_cast<int>(block_sizes.size()); ++b)
      for (int i = 0; i < block_sizes[b]; ++i) block_of[v++] = b;
  }

  Rng mean_rng(derive_seed(seed, 0));
  Matrix means(static_cast<int>(block_sizes.size()), feature_dim);
  for (int b = 0; b < means.rows(); ++b)
    for (int j = 0; j < feature_dim; ++j) means(b, j) = mean_rng.normal();

  Rng feat_rng(derive_seed(seed, 1));
  Matrix x(n, feature_dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < feature_dim; ++j)
      x(i, j) = means(block_of[i], j) + 0.25 * feat_rng.normal();

  Rng edge_rng(derive_seed(seed, 2));
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double p = block_of[i] == block_of[j] ? p_in : p_out;
      if (edge_rng.uniform() < p) edges.push_back({i, j});
    }

  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = "block" + std::to_string(block_of[i]);
  return Graph(std::move(edges), std::move(x), std::move(labels));
}

}  // namespace simex
