#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "simex/encoder.hpp"

using namespace simex;

namespace {

EncoderParams random_params(int m, int h, int d, std::uint64_t seed,
                            TrainerKind kind = TrainerKind::kGae) {
  Rng rng(seed);
  EncoderParams p;
  p.trainer = kind;
  p.theta1.resize(m, h);
  p.theta2.resize(h, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < h; ++j) p.theta1(i, j) = 0.5 * rng.normal();
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < d; ++j) p.theta2(i, j) = 0.5 * rng.normal();
  if (kind == TrainerKind::kVgae) {
    p.theta2_logvar.resize(h, d);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < d; ++j) p.theta2_logvar(i, j) = 0.2 * rng.normal();
  }
  return p;
}

}  // namespace

TEST_CASE("encode on the two-node graph hits the closed form") {
  // A is the constant 0.5 matrix, which is idempotent, and identity weights
  // pass features through: Z = A relu(A I I) I = A A = A.
  Graph g({{0, 1}}, Matrix(Matrix::Identity(2, 2)));
  EncoderParams p;
  p.theta1 = Matrix::Identity(2, 2);
  p.theta2 = Matrix::Identity(2, 2);
  const Matrix z = encode(g, EdgeWeights::ones(g), p);
  REQUIRE(z.rows() == 2);
  REQUIRE(z.cols() == 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(z(i, j) == 0.5);
  CHECK(similarity(z, 0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("encode validates parameter shapes") {
  Graph g = simex::testing::random_graph(5, 0.5, 3, 1);
  EncoderParams p = random_params(4, 3, 2, 2);  // wrong input dim
  CHECK_THROWS_AS(encode(g, EdgeWeights::ones(g), p), DimensionError);
}

TEST_CASE("similarity validates ids and rejects zero rows") {
  Matrix z(3, 2);
  z << 1, 0, 0, 2, 0, 0;
  CHECK(similarity(z, 0, 1) == 0.0);
  CHECK_THROWS_AS(similarity(z, 0, 0), ValidationError);
  CHECK_THROWS_AS(similarity(z, 0, 3), ValidationError);
  CHECK_THROWS_AS(similarity(z, 0, 2), DegenerateEmbedding);
}

TEST_CASE("pair_score agrees with the full embedding path") {
  Graph g = simex::testing::random_graph(12, 0.3, 4, 11);
  EncoderParams p = random_params(4, 5, 3, 12);
  ScoreModel model(g, p);

  Rng wr(13);
  EdgeWeights w = EdgeWeights::ones(g);
  for (int e = 0; e < g.edge_count(); ++e) w[e] = wr.uniform(0.2, 1.4);

  const Matrix z = model.embed(w);
  for (auto [i, j] : {std::pair<int, int>{0, 5}, {2, 9}, {3, 4}}) {
    CHECK(model.pair_score(w, i, j) ==
          doctest::Approx(similarity(z, i, j)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(model.pair_score(w, 3, 3), ValidationError);
}

TEST_CASE("score model caches the feature projection") {
  Graph g = simex::testing::random_graph(6, 0.5, 3, 21);
  EncoderParams p = random_params(3, 4, 2, 22);
  ScoreModel model(g, p);
  const Matrix expect = g.features() * p.theta1;
  CHECK((model.feature_projection() - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("variational encode: mean path, sampling and determinism") {
  Graph g = simex::testing::random_graph(8, 0.4, 3, 31);
  EncoderParams p = random_params(3, 4, 2, 32, TrainerKind::kVgae);
  const EdgeWeights w = EdgeWeights::ones(g);

  const Embeddings mean1 = encode_vgae(g, w, p, VgaeMode::kMean);
  CHECK(mean1.z.cwiseEqual(mean1.mu).all());
  // The mean head is theta2, so the plain encoder reproduces mu.
  CHECK((mean1.mu - encode(g, w, p)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(mean1.logvar.cwiseAbs().maxCoeff() <= kLogvarClampAbs);

  const Embeddings s1 = encode_vgae(g, w, p, VgaeMode::kSample, 5);
  const Embeddings s2 = encode_vgae(g, w, p, VgaeMode::kSample, 5);
  const Embeddings s3 = encode_vgae(g, w, p, VgaeMode::kSample, 6);
  CHECK(s1.z.cwiseEqual(s2.z).all());
  CHECK(!s1.z.cwiseEqual(s3.z).all());
  CHECK(!s1.z.cwiseEqual(mean1.mu).all());
}

TEST_CASE("variational encode rejects plain parameters") {
  Graph g = simex::testing::random_graph(5, 0.5, 3, 41);
  EncoderParams p = random_params(3, 4, 2, 42);
  CHECK_THROWS_AS(encode_vgae(g, EdgeWeights::ones(g), p, VgaeMode::kMean),
                  ValidationError);
}

TEST_CASE("trainer names round-trip") {
  CHECK(trainer_from_name("gae") == TrainerKind::kGae);
  CHECK(trainer_from_name("vgae") == TrainerKind::kVgae);
  CHECK(trainer_name(TrainerKind::kVgae) == "vgae");
  CHECK_THROWS_AS(trainer_from_name("dcgan"), ValidationError);
}
