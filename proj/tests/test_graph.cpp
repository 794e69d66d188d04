#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "helpers.hpp"
#include "simex/graph.hpp"

using namespace simex;
using simex::testing::TempDir;
using simex::testing::write_file;

namespace {

Matrix ident_features(int n) {
  return Matrix::Identity(n, n);
}

// Reference BFS distances, independent of the khop implementation.
std::vector<int> bfs_distances(const Graph& g, const std::vector<NodeId>& seeds) {
  std::vector<int> dist(g.node_count(), 1 << 20);
  std::deque<NodeId> q;
  for (NodeId s : seeds) {
    dist[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop_front();
    for (const auto& [v, e] : g.neighbors(u))
      if (dist[v] > dist[u] + 1) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

}  // namespace

TEST_CASE("graph canonicalizes, sorts and deduplicates edges") {
  Graph g({{2, 0}, {1, 2}, {0, 2}, {2, 1}}, ident_features(3));
  REQUIRE(g.edge_count() == 2);
  CHECK(g.edges()[0] == Edge{0, 2});
  CHECK(g.edges()[1] == Edge{1, 2});
  CHECK(g.has_edge(2, 0));
  CHECK(g.has_edge(1, 2));
  CHECK(!g.has_edge(0, 1));
  CHECK(g.edge_index(2, 1) == 1);
  CHECK(g.edge_index(0, 1) == -1);
}

TEST_CASE("graph rejects self-loops and out-of-range endpoints") {
  CHECK_THROWS_AS(Graph({{1, 1}}, ident_features(3)), ValidationError);
  CHECK_THROWS_AS(Graph({{0, 3}}, ident_features(3)), ValidationError);
  CHECK_THROWS_AS(Graph({{-1, 2}}, ident_features(3)), ValidationError);
}

TEST_CASE("graph rejects degenerate feature shapes") {
  CHECK_THROWS_AS(Graph({}, Matrix(0, 3)), DimensionError);
  CHECK_THROWS_AS(Graph({}, Matrix(3, 0)), DimensionError);
  CHECK_THROWS_AS(Graph({{0, 1}}, ident_features(3), {"a", "b"}),
                  DimensionError);
}

TEST_CASE("neighbor lists are ascending with edge back-references") {
  Graph g({{5, 1}, {3, 5}, {5, 7}, {0, 5}}, ident_features(8));
  auto nb = g.neighbors(5);
  REQUIRE(nb.size() == 4);
  std::vector<NodeId> ids;
  for (const auto& [v, e] : nb) {
    ids.push_back(v);
    CHECK(g.edges()[e] == Edge{std::min(v, 5), std::max(v, 5)});
  }
  CHECK(ids == std::vector<NodeId>{0, 1, 3, 7});
}

TEST_CASE("load_graph parses comments, blank lines and CRLF") {
  TempDir dir;
  write_file(dir.file("g.edges"),
             "# header comment\n"
             "\n"
             "0 1\r\n"
             "  # indented comment\n"
             "1 2\n"
             "2 0\n"
             "0 2\n");  // duplicate of the reversed line above
  write_file(dir.file("g.csv"), "1,0\n0,1\n0.5,0.5\n");
  Graph g = load_graph(dir.file("g.edges"), dir.file("g.csv"));
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 3);
  CHECK(g.feature_dim() == 2);
  CHECK(g.features()(2, 0) == 0.5);
}

TEST_CASE("load_graph error modes") {
  TempDir dir;
  write_file(dir.file("ok.csv"), "1,0\n0,1\n");

  SUBCASE("malformed edge line") {
    write_file(dir.file("bad.edges"), "0 1\n0 x\n");
    CHECK_THROWS_AS(load_graph(dir.file("bad.edges"), dir.file("ok.csv")),
                    ParseError);
  }
  SUBCASE("three tokens on a line") {
    write_file(dir.file("bad.edges"), "0 1 2\n");
    CHECK_THROWS_AS(load_graph(dir.file("bad.edges"), dir.file("ok.csv")),
                    ParseError);
  }
  SUBCASE("edge id beyond feature rows") {
    write_file(dir.file("bad.edges"), "0 5\n");
    CHECK_THROWS_AS(load_graph(dir.file("bad.edges"), dir.file("ok.csv")),
                    ValidationError);
  }
  SUBCASE("ragged feature rows") {
    write_file(dir.file("bad.csv"), "1,0\n0\n");
    write_file(dir.file("e.edges"), "0 1\n");
    CHECK_THROWS_AS(load_graph(dir.file("e.edges"), dir.file("bad.csv")),
                    DimensionError);
  }
  SUBCASE("non-numeric feature cell") {
    write_file(dir.file("bad.csv"), "1,apple\n0,1\n");
    write_file(dir.file("e.edges"), "0 1\n");
    CHECK_THROWS_AS(load_graph(dir.file("e.edges"), dir.file("bad.csv")),
                    ParseError);
  }
  SUBCASE("missing files") {
    CHECK_THROWS_AS(load_graph(dir.file("nope.edges"), dir.file("ok.csv")),
                    IoError);
    write_file(dir.file("e.edges"), "0 1\n");
    CHECK_THROWS_AS(load_graph(dir.file("e.edges"), dir.file("nope.csv")),
                    IoError);
  }
  SUBCASE("empty features file") {
    write_file(dir.file("empty.csv"), "");
    write_file(dir.file("e.edges"), "0 1\n");
    CHECK_THROWS_AS(load_graph(dir.file("e.edges"), dir.file("empty.csv")),
                    ParseError);
  }
}

TEST_CASE("normalize on a single edge gives the closed form") {
  Graph g({{0, 1}}, ident_features(2));
  NormalizedAdjacency a = normalize(g, EdgeWeights::ones(g));
  // Degrees are 1 + 1 = 2; off-diagonal 1/sqrt(4) = 1/2, diagonal 1/2.
  REQUIRE(a.nnz() == 4);
  CHECK(a.degree[0] == 2.0);
  CHECK(a.degree[1] == 2.0);
  CHECK(a.row_ptr == std::vector<int>{0, 2, 4});
  CHECK(a.col == std::vector<int>{0, 1, 0, 1});
  for (double v : a.val) CHECK(v == 0.5);
  CHECK(a.entry_edge == std::vector<int>{-1, 0, 0, -1});
}

TEST_CASE("normalize on a path matches hand-computed entries") {
  Graph g({{0, 1}, {1, 2}}, ident_features(3));
  NormalizedAdjacency a = normalize(g, EdgeWeights::ones(g));
  CHECK(a.degree == std::vector<double>{2.0, 3.0, 2.0});
  // Entry (0,1) = 1/sqrt(2*3).
  const double expect = 1.0 / std::sqrt(6.0);
  CHECK(a.val[1] == expect);     // row 0: [diag, (0,1)]
  CHECK(a.val[2] == expect);     // row 1: [(1,0), diag, (1,2)]
  CHECK(a.val[3] == 1.0 / 3.0);  // diagonal of node 1
}

TEST_CASE("zero-weight edge equals deleted edge exactly") {
  Graph full({{0, 1}, {1, 2}, {0, 2}}, ident_features(3));
  EdgeWeights w = EdgeWeights::ones(full);
  w[full.edge_index(0, 2)] = 0.0;
  NormalizedAdjacency a = normalize(full, w);

  Graph cut({{0, 1}, {1, 2}}, ident_features(3));
  NormalizedAdjacency b = normalize(cut, EdgeWeights::ones(cut));

  CHECK(a.row_ptr == b.row_ptr);
  CHECK(a.col == b.col);
  CHECK(a.degree == b.degree);
  REQUIRE(a.val.size() == b.val.size());
  for (std::size_t k = 0; k < a.val.size(); ++k) CHECK(a.val[k] == b.val[k]);
}

TEST_CASE("normalize validates weights") {
  Graph g({{0, 1}}, ident_features(2));
  CHECK_THROWS_AS(normalize(g, EdgeWeights{{-0.5}}), ValidationError);
  CHECK_THROWS_AS(normalize(g, EdgeWeights{{1.0, 1.0}}), DimensionError);
  CHECK_THROWS_AS(normalize(g, EdgeWeights{{std::nan("")}}), ValidationError);
}

TEST_CASE("row sums stay within (0, 1 + degree]") {
  Graph g = simex::testing::random_graph(20, 0.3, 4, 99);
  Rng wr(7);
  EdgeWeights w = EdgeWeights::ones(g);
  for (int e = 0; e < g.edge_count(); ++e) w[e] = wr.uniform(0.0, 2.0);
  NormalizedAdjacency a = normalize(g, w);
  for (int i = 0; i < a.node_count; ++i) {
    double sum = 0.0;
    for (int e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) sum += a.val[e];
    CHECK(sum > 0.0);
    CHECK(sum <= 1.0 + static_cast<double>(g.neighbors(i).size()) + 1e-12);
  }
}

TEST_CASE("sparse multiply matches a dense reconstruction") {
  Graph g = simex::testing::random_graph(15, 0.3, 6, 5);
  NormalizedAdjacency a = normalize(g, EdgeWeights::ones(g));
  Matrix dense = Matrix::Zero(a.node_count, a.node_count);
  for (int i = 0; i < a.node_count; ++i)
    for (int e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e)
      dense(i, a.col[e]) = a.val[e];
  CHECK(dense.isApprox(dense.transpose(), 1e-15));  // symmetric values

  Matrix x = g.features();
  Matrix fast = a.multiply(x);
  Matrix ref = dense * x;
  CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-12);

  Eigen::RowVectorXd row(x.cols());
  a.multiply_row(x, 3, row);
  CHECK((row - ref.row(3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("khop on a star and a path matches the closed-form sets") {
  // Star: center 0 with leaves 1..4.
  Graph star({{0, 1}, {0, 2}, {0, 3}, {0, 4}}, ident_features(5));
  const NodeId c[1] = {0};
  auto s1 = khop_subgraph(star, c, 1);
  CHECK(s1.nodes == std::vector<NodeId>{0, 1, 2, 3, 4});
  CHECK(s1.edge_indices == std::vector<int>{0, 1, 2, 3});

  // Path 0-1-2-3.
  Graph path({{0, 1}, {1, 2}, {2, 3}}, ident_features(4));
  auto p0 = khop_subgraph(path, c, 0);
  CHECK(p0.nodes == std::vector<NodeId>{0});
  CHECK(p0.edge_indices.empty());
  auto p1 = khop_subgraph(path, c, 1);
  CHECK(p1.nodes == std::vector<NodeId>{0, 1});
  CHECK(p1.edge_indices == std::vector<int>{0});
  auto p2 = khop_subgraph(path, c, 2);
  CHECK(p2.nodes == std::vector<NodeId>{0, 1, 2});
  CHECK(p2.edge_indices == std::vector<int>{0, 1});
  CHECK(p2.local_id(2) == 2);
  CHECK(p2.local_id(3) == -1);
}

TEST_CASE("khop matches an independent BFS oracle on random graphs") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Graph g = simex::testing::random_graph(30, 0.12, 3, seed);
    const std::vector<NodeId> seeds = {2, 17};
    auto dist = bfs_distances(g, seeds);
    for (int k = 0; k <= 3; ++k) {
      auto sub = khop_subgraph(g, seeds, k);
      std::set<NodeId> nodes(sub.nodes.begin(), sub.nodes.end());
      for (NodeId v = 0; v < g.node_count(); ++v)
        CHECK(nodes.count(v) == (dist[v] <= k ? 1u : 0u));
      std::set<int> edges(sub.edge_indices.begin(), sub.edge_indices.end());
      for (int e = 0; e < g.edge_count(); ++e) {
        const Edge& ed = g.edges()[e];
        const bool expect = std::min(dist[ed.u], dist[ed.v]) <= k - 1;
        CHECK(edges.count(e) == (expect ? 1u : 0u));
      }
    }
  }
}

TEST_CASE("khop validates inputs") {
  Graph g({{0, 1}}, ident_features(2));
  const NodeId bad[1] = {5};
  CHECK_THROWS_AS(khop_subgraph(g, bad, 1), ValidationError);
  const NodeId ok[1] = {0};
  CHECK_THROWS_AS(khop_subgraph(g, ok, -1), ValidationError);
  CHECK_THROWS_AS(khop_subgraph(g, std::span<const NodeId>{}, 1),
                  ValidationError);
}

TEST_CASE("sbm is deterministic and respects extreme probabilities") {
  Graph a = generate_sbm({3, 3}, 1.0, 0.0, 4, 42);
  Graph b = generate_sbm({3, 3}, 1.0, 0.0, 4, 42);
  REQUIRE(a.edge_count() == b.edge_count());
  CHECK(a.edges() == b.edges());
  CHECK(a.features().cwiseEqual(b.features()).all());
  // p_in = 1, p_out = 0: two complete triangles, nothing across.
  CHECK(a.edge_count() == 6);
  for (const Edge& e : a.edges())
    CHECK((e.u < 3) == (e.v < 3));
  CHECK(a.node_labels()[0] == "block0");
  CHECK(a.node_labels()[5] == "block1");

  Graph c = generate_sbm({3, 3}, 1.0, 0.0, 4, 43);
  CHECK(!a.features().cwiseEqual(c.features()).all());  // seed matters
}

TEST_CASE("sbm edge counts sit inside generous binomial bounds") {
  Graph g = generate_sbm({20, 20}, 0.5, 0.05, 8, 7);
  int within = 0, cross = 0;
  for (const Edge& e : g.edges()) {
    if ((e.u < 20) == (e.v < 20))
      ++within;
    else
      ++cross;
  }
  // E[within] = 190, sd ~ 9.7; E[cross] = 20, sd ~ 4.4. Use 5-sigma bounds.
  CHECK(within > 140);
  CHECK(within < 240);
  CHECK(cross < 45);
}

TEST_CASE("sbm validates parameters") {
  CHECK_THROWS_AS(generate_sbm({}, 0.5, 0.1, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_sbm({0, 3}, 0.5, 0.1, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_sbm({3, 3}, 0.5, 0.5, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_sbm({3, 3}, 0.1, 0.5, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_sbm({3, 3}, 1.1, 0.5, 4, 1), ValidationError);
  CHECK_THROWS_AS(generate_sbm({3, 3}, 0.5, 0.1, 0, 1), ValidationError);
}
