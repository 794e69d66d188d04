#include "simex/encoder.hpp"

#include <cmath>

#include "simex/rng.hpp"

namespace simex {

std::string trainer_name(TrainerKind k) {
  return k == TrainerKind::kGae ? "gae" : "vgae";
}

TrainerKind trainer_from_name(const std::string& name) {
  if (name == "gae") return TrainerKind::kGae;
  if (name == "vgae") return TrainerKind::kVgae;
  throw ValidationError("unknown trainer \"" + name + "\" (expected gae or vgae)");
}

void EncoderParams::validate(int feature_dim) const {
  if (theta1.rows() != feature_dim)
    throw DimensionError("theta1 rows " + std::to_string(theta1.rows()) +
                         " do not match feature dimension " +
                         std::to_string(feature_dim));
  if (theta1.cols() < 1 || theta2.cols() < 1)
    throw DimensionError("hidden and embedding dimensions must be positive");
  if (theta2.rows() != theta1.cols())
    throw DimensionError("theta2 rows do not match hidden dimension");
  if (trainer == TrainerKind::kVgae) {
    if (theta2_logvar.rows() != theta2.rows() ||
        theta2_logvar.cols() != theta2.cols())
      throw DimensionError("log-variance head shape does not match mean head");
  }
}

namespace {

// Second-layer pre-activation S = A relu(A proj).
Matrix second_layer_input(const NormalizedAdjacency& a, const Matrix& proj) {
  Matrix h = a.multiply(proj).cwiseMax(0.0);
  return a.multiply(h);
}

}  // namespace

Matrix encode(const Graph& g, const EdgeWeights& w, const EncoderParams& p) {
  p.validate(g.feature_dim());
  const NormalizedAdjacency a = normalize(g, w);
  const Matrix s = second_layer_input(a, g.features() * p.theta1);
  return s * p.theta2;
}

Embeddings encode_vgae(const Graph& g, const EdgeWeights& w,
                       const EncoderParams& p, VgaeMode mode,
                       std::uint64_t seed) {
  if (p.trainer != TrainerKind::kVgae)
    throw ValidationError("encode_vgae requires variational parameters");
  p.validate(g.feature_dim());
  const NormalizedAdjacency a = normalize(g, w);
  const Matrix s = second_layer_input(a, g.features() * p.theta1);

  Embeddings out;
  out.mu = s * p.theta2;
  out.logvar = (s * p.theta2_logvar)
                   .cwiseMax(-kLogvarClampAbs)
                   .cwiseMin(kLogvarClampAbs);
  if (mode == VgaeMode::kMean) {
    out.z = out.mu;
  } else {
    Rng rng(seed);
    Matrix noise(out.mu.rows(), out.mu.cols());
    for (Eigen::Index i = 0; i < noise.rows(); ++i)
      for (Eigen::Index j = 0; j < noise.cols(); ++j) noise(i, j) = rng.normal();
    out.z = out.mu.array() + noise.array() * (0.5 * out.logvar.array()).exp();
  }
  return out;
}

double similarity(const Matrix& z, NodeId i, NodeId j) {
  if (i < 0 || j < 0 || i >= z.rows() || j >= z.rows())
    throw ValidationError("node id out of range for similarity");
  if (i == j) throw ValidationError("similarity requires two distinct nodes");
  const double ni = z.row(i).norm();
  const double nj = z.row(j).norm();
  if (ni == 0.0 || nj == 0.0)
    throw DegenerateEmbedding("zero-norm embedding for node " +
                              std::to_string(ni == 0.0 ? i : j));
  return z.row(i).dot(z.row(j)) / (ni * nj);
}

ScoreModel::ScoreModel(const Graph& g, EncoderParams params)
    : g_(&g), params_(std::move(params)) {
  params_.validate(g.feature_dim());
  proj_ = g.features() * params_.theta1;
}

Matrix ScoreModel::embed(const EdgeWeights& w) const {
  const NormalizedAdjacency a = normalize(*g_, w);
  return second_layer_input(a, proj_) * params_.theta2;
}

double ScoreModel::pair_score(const EdgeWeights& w, NodeId i, NodeId j) const {
  if (i < 0 || j < 0 || i >= g_->node_count() || j >= g_->node_count())
    throw ValidationError("node id out of range for pair score");
  if (i == j) throw ValidationError("pair score requires two distinct nodes");
  const NormalizedAdjacency a = normalize(*g_, w);
  const Matrix h = a.multiply(proj_).cwiseMax(0.0);
  Eigen::RowVectorXd si(h.cols()), sj(h.cols());
  a.multiply_row(h, i, si);
  a.multiply_row(h, j, sj);
  const Eigen::RowVectorXd zi = si * params_.theta2;
  const Eigen::RowVectorXd zj = sj * params_.theta2;
  const double ni = zi.norm();
  const double nj = zj.norm();
  if (ni == 0.0 || nj == 0.0)
    throw DegenerateEmbedding("zero-norm embedding for node " +
                              std::to_string(ni == 0.0 ? i : j));
  return zi.dot(zj) / (ni * nj);
}

}  // namespace simex
