#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "simex/trainer.hpp"

using namespace simex;

TEST_CASE("adam matches the reference recurrence on a scalar") {
  // Hand-rolled copy of the update: m,v EMAs with bias correction.
  double x = 1.0, rm = 0.0, rv = 0.0;
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;

  Matrix param(1, 1);
  param(0, 0) = 1.0;
  AdamState st;

  for (int t = 1; t <= 5; ++t) {
    const double grad = x;  // d/dx of x^2 / 2
    rm = b1 * rm + (1 - b1) * grad;
    rv = b2 * rv + (1 - b2) * grad * grad;
    const double mhat = rm / (1 - std::pow(b1, t));
    const double vhat = rv / (1 - std::pow(b2, t));
    x -= lr * mhat / (std::sqrt(vhat) + eps);

    Matrix g(1, 1);
    g(0, 0) = param(0, 0);
    st.step(param, g, lr);
    CHECK(param(0, 0) == doctest::Approx(x).epsilon(1e-14));
  }
  // First step moves by almost exactly lr regardless of gradient scale.
  CHECK(std::abs(1.0 - 0.1 - (1.0 - lr * 1.0 / (std::sqrt(1.0) + eps))) < 1e-9);
}

TEST_CASE("negative sampling returns distinct non-edges") {
  Graph g = simex::testing::random_graph(10, 0.3, 2, 50);
  const auto neg = sample_negative_edges(g, 15, 7);
  REQUIRE(neg.size() == 15);

  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [u, v] : neg) {
    CHECK(u < v);
    CHECK(!g.has_edge(u, v));
    CHECK(seen.insert({u, v}).second);
  }

  const auto again = sample_negative_edges(g, 15, 7);
  CHECK(neg == again);
  CHECK(neg != sample_negative_edges(g, 15, 8));
}

TEST_CASE("negative sampling can exhaust the complement exactly") {
  // K4 minus one edge: exactly one non-edge remains.
  Graph g({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}}, Matrix::Ones(4, 1));
  const auto neg = sample_negative_edges(g, 1, 3);
  REQUIRE(neg.size() == 1);
  CHECK(neg[0] == NodePair{2, 3});
  CHECK_THROWS_AS(sample_negative_edges(g, 2, 3), ValidationError);
}

TEST_CASE("loss closed forms") {
  Matrix z = Matrix::Zero(4, 3);
  std::vector<NodePair> pos{{0, 1}, {2, 3}};
  std::vector<NodePair> neg{{0, 2}};
  // All logits are zero, so every term is ln 2.
  CHECK(gae_loss(z, pos, neg) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(gae_loss(z, {}, neg), ValidationError);

  // mu = 1, logvar = 0 gives KL of 1/2 per node.
  Matrix mu = Matrix::Ones(4, 1), lv = Matrix::Zero(4, 1);
  const double base = gae_loss(z, pos, neg);
  const double with_kl = vgae_loss(z, mu, lv, pos, neg, 2.0);
  CHECK(with_kl - base == doctest::Approx(2.0 * 0.5).epsilon(1e-12));
  CHECK(vgae_loss(z, mu, lv, pos, neg, 0.0) ==
        doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("logit clamping keeps the loss finite on huge embeddings") {
  Matrix z = Matrix::Constant(2, 2, 1e10);
  std::vector<NodePair> pos{{0, 1}};
  const double loss = gae_loss(z, pos, {});
  CHECK(std::isfinite(loss));
  // Positive pair with clamped logit 20: softplus(-20).
  CHECK(loss == doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-12));
}

TEST_CASE("training reduces the loss and is reproducible") {
  Graph g = generate_sbm({12, 12}, 0.6, 0.08, 8, 77);
  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 4;
  cfg.epochs = 60;
  cfg.seed = 3;

  auto [params, report] = train(g, cfg);
  REQUIRE(report.loss_curve.size() == 60);
  CHECK(report.final_loss < report.loss_curve.front());
  CHECK(std::isfinite(report.final_loss));
  CHECK(report.wall_time_sec > 0.0);
  CHECK(params.theta1.rows() == 8);
  CHECK(params.theta1.cols() == 8);
  CHECK(params.theta2.cols() == 4);
  CHECK(params.trainer == TrainerKind::kGae);

  auto [params2, report2] = train(g, cfg);
  CHECK(params.theta1.cwiseEqual(params2.theta1).all());
  CHECK(params.theta2.cwiseEqual(params2.theta2).all());
  CHECK(report.loss_curve == report2.loss_curve);
  CHECK(report.final_loss == report2.final_loss);

  cfg.seed = 4;
  auto [params3, report3] = train(g, cfg);
  CHECK(!params.theta1.cwiseEqual(params3.theta1).all());
}

TEST_CASE("variational training carries the extra head") {
  Graph g = generate_sbm({10, 10}, 0.6, 0.1, 6, 78);
  TrainConfig cfg;
  cfg.trainer = TrainerKind::kVgae;
  cfg.hidden_dim = 6;
  cfg.embed_dim = 3;
  cfg.epochs = 40;
  cfg.kl_weight = 0.2;

  auto [params, report] = train(g, cfg);
  CHECK(params.trainer == TrainerKind::kVgae);
  REQUIRE(params.theta2_logvar.size() > 0);
  CHECK(params.theta2_logvar.rows() == 6);
  CHECK(params.theta2_logvar.cols() == 3);
  CHECK(report.final_loss < report.loss_curve.front());
}

TEST_CASE("zero epochs returns the initialization untouched") {
  Graph g = simex::testing::random_graph(8, 0.4, 4, 79);
  TrainConfig cfg;
  cfg.hidden_dim = 4;
  cfg.embed_dim = 2;
  cfg.epochs = 0;

  auto [params, report] = train(g, cfg);
  CHECK(report.loss_curve.empty());
  CHECK(std::isfinite(report.final_loss));

  auto [params2, report2] = train(g, cfg);
  CHECK(params.theta1.cwiseEqual(params2.theta1).all());
  CHECK(report.final_loss == report2.final_loss);
}

TEST_CASE("a diverging run aborts with a numeric error") {
  Graph g = simex::testing::random_graph(8, 0.4, 4, 80);
  TrainConfig cfg;
  cfg.trainer = TrainerKind::kVgae;
  cfg.hidden_dim = 4;
  cfg.embed_dim = 2;
  cfg.epochs = 5;
  cfg.learning_rate = 1e80;  // parameter scale overflows the KL term
  CHECK_THROWS_AS(train(g, cfg), NumericError);
}

TEST_CASE("config validation") {
  TrainConfig cfg;
  cfg.epochs = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.negative_ratio = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("grid search tries every point and picks the argmin") {
  Graph g = generate_sbm({10, 10}, 0.6, 0.1, 6, 81);
  TrainConfig base;
  base.hidden_dim = 6;
  base.embed_dim = 3;
  base.epochs = 25;

  GridSpec grid;
  grid.learning_rates = {0.005, 0.02};
  grid.hidden_dims = {4, 6};

  const GridSearchResult res = grid_search(g, base, grid);
  REQUIRE(res.reports.size() == 4);

  double best = res.reports.front().final_loss;
  for (const auto& r : res.reports) best = std::min(best, r.final_loss);
  CHECK(res.report.final_loss == best);
  CHECK(res.params.theta1.rows() == 6);  // input dim fixed by features
  CHECK(res.params.theta1.cols() == res.config.hidden_dim);

  // Grid order is lr-major: first report carries the first lr.
  CHECK(res.reports[0].config.learning_rate == 0.005);
  CHECK(res.reports[0].config.hidden_dim == 4);
  CHECK(res.reports[1].config.hidden_dim == 6);
}

TEST_CASE("grid search rejects an absurd learning rate by loss") {
  Graph g = generate_sbm({10, 10}, 0.6, 0.1, 6, 82);
  TrainConfig base;
  base.hidden_dim = 6;
  base.embed_dim = 3;
  base.epochs = 30;

  GridSpec grid;
  grid.learning_rates = {0.001, 0.01, 1000.0};
  const GridSearchResult res = grid_search(g, base, grid);
  REQUIRE(res.reports.size() == 3);
  CHECK(res.config.learning_rate != 1000.0);
}

TEST_CASE("an empty grid trains the base config once") {
  Graph g = generate_sbm({8, 8}, 0.6, 0.1, 4, 83);
  TrainConfig base;
  base.hidden_dim = 4;
  base.embed_dim = 2;
  base.epochs = 10;

  const GridSearchResult res = grid_search(g, base, GridSpec{});
  REQUIRE(res.reports.size() == 1);
  auto [params, report] = train(g, base);
  CHECK(res.params.theta1.cwiseEqual(params.theta1).all());
  CHECK(res.report.final_loss == report.final_loss);
}
