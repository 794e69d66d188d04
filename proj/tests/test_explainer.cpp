#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "simex/explainer.hpp"

using namespace simex;

namespace {

EncoderParams small_params(int m, int h, int d, std::uint64_t seed) {
  Rng rng(seed);
  EncoderParams p;
  p.theta1.resize(m, h);
  p.theta2.resize(h, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < h; ++j) p.theta1(i, j) = 0.5 * rng.normal();
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < d; ++j) p.theta2(i, j) = 0.5 * rng.normal();
  return p;
}

// Central difference of the pair score in one edge weight, computed through
// the plain encoder (no tape involved).
double fd_edge(const Graph& g, const EncoderParams& p, NodeId i, NodeId j,
               int e, double h) {
  EdgeWeights up = EdgeWeights::ones(g), dn = EdgeWeights::ones(g);
  up[e] += h;
  dn[e] -= h;
  const double yu = similarity(encode(g, up, p), i, j);
  const double yd = similarity(encode(g, dn, p), i, j);
  return (yu - yd) / (2 * h);
}

}  // namespace

TEST_CASE("support on a path graph follows the two-hop rule") {
  // 0-1-2-3-4-5-6; for the pair (0,1) only edges whose closer endpoint is
  // within 2 hops of {0,1} can reach the score.
  std::vector<Edge> edges;
  for (int v = 0; v < 6; ++v) edges.push_back({v, v + 1});
  Graph g(edges, Matrix::Ones(7, 2));

  const auto support = explanation_support(g, 0, 1);
  CHECK(support == std::vector<int>{0, 1, 2, 3});

  // From the middle both directions open up and every edge is reachable.
  const auto mid = explanation_support(g, 3, 4);
  CHECK(mid == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("support ids are validated") {
  Graph g = simex::testing::random_graph(5, 0.5, 2, 1);
  CHECK_THROWS_AS(explanation_support(g, 2, 2), ValidationError);
  CHECK_THROWS_AS(explanation_support(g, 0, 5), ValidationError);
}

TEST_CASE("raw gradients match central differences through the encoder") {
  const Graph g = simex::testing::random_graph(10, 0.35, 4, 91);
  const EncoderParams p = small_params(4, 5, 3, 92);
  const NodeId i = 0, j = 4;

  const ExplanationMatrix m = explain_gb1(g, p, i, j);
  CHECK(m.method == "gb1");
  CHECK(m.threshold == 0.0);
  CHECK(m.i == i);
  CHECK(m.j == j);
  CHECK(m.edge_indices == explanation_support(g, i, j));
  CHECK(m.score ==
        doctest::Approx(similarity(encode(g, EdgeWeights::ones(g), p), i, j))
            .epsilon(1e-12));

  REQUIRE(!m.edge_indices.empty());
  for (std::size_t k = 0; k < m.edge_indices.size(); ++k) {
    const double fd = fd_edge(g, p, i, j, m.edge_indices[k], 1e-5);
    const double denom = std::max({std::abs(fd), std::abs(m.values[k]), 1e-8});
    CHECK(std::abs(m.values[k] - fd) / denom < 1e-4);
  }
}

TEST_CASE("edges outside the support truly have zero gradient") {
  // Path long enough that the far end cannot reach the pair (0, 1).
  std::vector<Edge> edges;
  for (int v = 0; v < 7; ++v) edges.push_back({v, v + 1});
  Graph g(edges, simex::testing::random_graph(8, 0.0, 3, 93).features());
  const EncoderParams p = small_params(3, 4, 2, 94);

  const auto support = explanation_support(g, 0, 1);
  CHECK(std::find(support.begin(), support.end(), 6) == support.end());
  CHECK(std::abs(fd_edge(g, p, 0, 1, 6, 1e-4)) < 1e-10);
}

TEST_CASE("integrated gradients sum to the score change from empty graph") {
  const Graph g = simex::testing::random_graph(10, 0.35, 4, 95);
  const EncoderParams p = small_params(4, 5, 3, 96);
  const NodeId i = 1, j = 7;
  ScoreModel model(g, p);

  const double y_full = model.pair_score(EdgeWeights::ones(g), i, j);
  const double y_empty = model.pair_score(EdgeWeights::zeros(g), i, j);

  const ExplanationMatrix m = explain_gb2(model, i, j, 256);
  CHECK(m.method == "gb2");
  CHECK(m.threshold == 0.0);
  CHECK(m.edge_indices == explanation_support(g, i, j));
  CHECK(m.score == doctest::Approx(y_full).epsilon(1e-12));

  const double total = std::accumulate(m.values.begin(), m.values.end(), 0.0);
  CHECK(std::abs(total - (y_full - y_empty)) < 1e-3);

  // Refining the rule shrinks the completeness gap.
  const auto gap = [&](int steps) {
    const ExplanationMatrix mm = explain_gb2(model, i, j, steps);
    const double t = std::accumulate(mm.values.begin(), mm.values.end(), 0.0);
    return std::abs(t - (y_full - y_empty));
  };
  CHECK(gap(128) <= gap(8) + 1e-12);
}

TEST_CASE("mask optimization halves its objective and stays reproducible") {
  const Graph g = generate_sbm({8, 8}, 0.7, 0.1, 5, 97);
  const EncoderParams p = small_params(5, 6, 3, 98);
  const NodeId i = 2, j = 5;

  MiConfig cfg;
  cfg.steps = 200;
  MiTrace trace;
  const ExplanationMatrix m = explain_mi(g, p, i, j, cfg, &trace);

  CHECK(m.method == "mi");
  CHECK(m.threshold == 0.5);
  CHECK(m.edge_indices == explanation_support(g, i, j));
  CHECK(m.score ==
        doctest::Approx(similarity(encode(g, EdgeWeights::ones(g), p), i, j))
            .epsilon(1e-12));

  for (double v : m.values) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }

  REQUIRE(trace.objective.size() == 200);
  CHECK(trace.final_objective < 0.5 * trace.objective.front());

  const ExplanationMatrix m2 = explain_mi(g, p, i, j, cfg);
  CHECK(m.values == m2.values);

  cfg.seed = 42;
  const ExplanationMatrix m3 = explain_mi(g, p, i, j, cfg);
  CHECK(m.values != m3.values);
}

TEST_CASE("score model and parameter overloads agree") {
  const Graph g = simex::testing::random_graph(9, 0.4, 3, 99);
  const EncoderParams p = small_params(3, 4, 2, 100);
  ScoreModel model(g, p);

  const ExplanationMatrix a1 = explain_gb1(model, 0, 3);
  const ExplanationMatrix a2 = explain_gb1(g, p, 0, 3);
  CHECK(a1.values == a2.values);

  const ExplanationMatrix b1 = explain_gb2(model, 0, 3, 16);
  const ExplanationMatrix b2 = explain_gb2(g, p, 0, 3, 16);
  CHECK(b1.values == b2.values);
}

TEST_CASE("a pair with no connecting structure gets an empty explanation") {
  // One real edge far away; nodes 3 and 4 are isolated.
  Graph g({{0, 1}}, simex::testing::random_graph(5, 0.0, 3, 101).features());
  const EncoderParams p = small_params(3, 4, 2, 102);

  const ExplanationMatrix gb = explain_gb1(g, p, 3, 4);
  CHECK(gb.edge_indices.empty());
  CHECK(gb.values.empty());
  CHECK(std::isfinite(gb.score));

  MiConfig cfg;
  cfg.steps = 10;
  const ExplanationMatrix mi = explain_mi(g, p, 3, 4, cfg);
  CHECK(mi.values.empty());
  CHECK(mi.score == doctest::Approx(gb.score).epsilon(1e-12));
}

TEST_CASE("degenerate embeddings surface as an error, not NaN") {
  Graph g = simex::testing::random_graph(6, 0.5, 3, 103);
  EncoderParams p = small_params(3, 4, 2, 104);
  p.theta2.setZero();  // all embeddings collapse to the origin
  CHECK_THROWS_AS(explain_gb1(g, p, 0, 1), DegenerateEmbedding);
}

TEST_CASE("mask config validation") {
  MiConfig cfg;
  cfg.steps = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.size_weight = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.entropy_weight = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
