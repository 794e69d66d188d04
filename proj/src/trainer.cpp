#include "simex/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "simex/rng.hpp"
#include "simex/tape.hpp"

namespace simex {

void TrainConfig::validate() const {
  if (hidden_dim < 1 || embed_dim < 1)
    throw ValidationError("hidden and embedding dimensions must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning rate must be positive and finite");
  if (epochs < 0) throw ValidationError("epoch count must be non-negative");
  if (!(negative_ratio > 0.0))
    throw ValidationError("negative ratio must be positive");
  if (!(kl_weight >= 0.0)) throw ValidationError("kl weight must be non-negative");
}

void AdamState::step(Matrix& param, const Matrix& grad, double lr) {
  if (t == 0) {
    m = Matrix::Zero(param.rows(), param.cols());
    v = Matrix::Zero(param.rows(), param.cols());
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

std::vector<NodePair> sample_negative_edges(const Graph& g, int count,
                                            std::uint64_t seed) {
  if (count < 1) throw ValidationError("negative sample count must be positive");
  const std::int64_t n = g.node_count();
  const std::int64_t non_edges = n * (n - 1) / 2 - g.edge_count();
  if (count > non_edges)
    throw ValidationError("cannot sample " + std::to_string(count) +
                          " negatives: graph has only " +
                          std::to_string(non_edges) + " non-edges");

  Rng rng(seed);
  std::vector<NodePair> out;
  out.reserve(count);
  std::unordered_set<std::uint64_t> seen;
  std::int64_t budget = 1000LL * count + 1000;
  while (static_cast<int>(out.size()) < count && budget-- > 0) {
    NodeId u = static_cast<NodeId>(rng.uniform_int(n));
    NodeId v = static_cast<NodeId>(rng.uniform_int(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
    if (seen.count(key) || g.has_edge(u, v)) continue;
    seen.insert(key);
    out.emplace_back(u, v);
  }
  if (static_cast<int>(out.size()) < count)
    throw ValidationError("negative sampling budget exhausted on a near-complete graph");
  return out;
}

namespace {

double bce_terms(const Matrix& z, std::span<const NodePair> pairs,
                 double target, double& count) {
  double total = 0.0;
  for (const auto& [u, v] : pairs) {
    double x = z.row(u).dot(z.row(v));
    x = std::clamp(x, -kLogitClampAbs, kLogitClampAbs);
    const double sp = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    total += sp - target * x;
    count += 1.0;
  }
  return total;
}

}  // namespace

double gae_loss(const Matrix& z, std::span<const NodePair> positives,
                std::span<const NodePair> negatives) {
  if (positives.empty())
    throw ValidationError("reconstruction loss needs at least one positive pair");
  double count = 0.0;
  double total = bce_terms(z, positives, 1.0, count);
  total += bce_terms(z, negatives, 0.0, count);
  return total / count;
}

double vgae_loss(const Matrix& z, const Matrix& mu, const Matrix& logvar,
                 std::span<const NodePair> positives,
                 std::span<const NodePair> negatives, double kl_weight) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols())
    throw DimensionError("mu and logvar shapes differ");
  const double recon = gae_loss(z, positives, negatives);
  const double kl =
      -0.5 *
      (1.0 + logvar.array() - mu.array().square() - logvar.array().exp())
          .sum() /
      static_cast<double>(mu.rows());
  return recon + kl_weight * kl;
}

namespace {

Matrix glorot(Rng& rng, int rows, int cols) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

// Seed streams: 100 init, 200+epoch negatives, 300+epoch reparameterization.
constexpr std::uint64_t kInitStream = 100;
constexpr std::uint64_t kNegStream = 200;
constexpr std::uint64_t kNoiseStream = 300;

}  // namespace

std::pair<EncoderParams, TrainReport> train(const Graph& g,
                                            const TrainConfig& cfg) {
  cfg.validate();
  if (g.edge_count() < 1)
    throw ValidationError("training needs at least one edge");

  const auto t0 = std::chrono::steady_clock::now();
  const bool variational = cfg.trainer == TrainerKind::kVgae;

  EncoderParams params;
  params.trainer = cfg.trainer;
  {
    Rng init_rng(derive_seed(cfg.seed, kInitStream));
    params.theta1 = glorot(init_rng, g.feature_dim(), cfg.hidden_dim);
    params.theta2 = glorot(init_rng, cfg.hidden_dim, cfg.embed_dim);
    if (variational)
      params.theta2_logvar = glorot(init_rng, cfg.hidden_dim, cfg.embed_dim);
  }

  const NormalizedAdjacency adjacency = normalize(g, EdgeWeights::ones(g));
  std::vector<NodePair> positives;
  positives.reserve(g.edge_count());
  for (const Edge& e : g.edges()) positives.emplace_back(e.u, e.v);
  const int neg_count = std::max<int>(
      1, static_cast<int>(std::llround(cfg.negative_ratio * g.edge_count())));

  AdamState opt1, opt2, opt_lv;
  TrainReport report;
  report.config = cfg;

  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const auto negatives =
        sample_negative_edges(g, neg_count, derive_seed(cfg.seed, kNegStream + epoch));
    std::vector<NodePair> pairs = positives;
    pairs.insert(pairs.end(), negatives.begin(), negatives.end());
    Vector targets = Vector::Zero(pairs.size());
    targets.head(positives.size()).setOnes();

    Tape tape;
    const SlotId th1 = tape.input(params.theta1);
    const SlotId th2 = tape.input(params.theta2);
    const SlotId thlv = variational ? tape.input(params.theta2_logvar) : -1;
    const SlotId x = tape.constant(g.features());
    const SlotId a = tape.constant_adjacency(adjacency);

    const SlotId h = tape.relu(tape.spmm(a, tape.matmul(x, th1)));
    const SlotId s = tape.spmm(a, h);
    SlotId loss;
    if (!variational) {
      const SlotId z = tape.matmul(s, th2);
      const SlotId logits = tape.pair_inner(z, pairs);
      loss = tape.bce_with_logits(logits, targets, kLogitClampAbs);
    } else {
      const SlotId mu = tape.matmul(s, th2);
      const SlotId lv =
          tape.clamp(tape.matmul(s, thlv), -kLogvarClampAbs, kLogvarClampAbs);
      Rng noise_rng(derive_seed(cfg.seed, kNoiseStream + epoch));
      Matrix noise(g.node_count(), cfg.embed_dim);
      for (Eigen::Index r = 0; r < noise.rows(); ++r)
        for (Eigen::Index c = 0; c < noise.cols(); ++c)
          noise(r, c) = noise_rng.normal();
      const SlotId z = tape.gauss_reparam(mu, lv, std::move(noise));
      const SlotId logits = tape.pair_inner(z, pairs);
      const SlotId bce = tape.bce_with_logits(logits, targets, kLogitClampAbs);
      const SlotId kl = tape.kl_normal(mu, lv);
      loss = tape.add_scaled(bce, kl, cfg.kl_weight);
    }

    const double loss_value = tape.scalar(loss);
    if (!std::isfinite(loss_value))
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                         " (trainer=" + trainer_name(cfg.trainer) +
                         ", lr=" + std::to_string(cfg.learning_rate) + ")");
    if (epoch == cfg.epochs) {
      report.final_loss = loss_value;
      break;
    }
    report.loss_curve.push_back(loss_value);

    const GradientMap grads = tape.backward(loss);
    opt1.step(params.theta1, grads.matrix(th1), cfg.learning_rate);
    opt2.step(params.theta2, grads.matrix(th2), cfg.learning_rate);
    if (variational)
      opt_lv.step(params.theta2_logvar, grads.matrix(thlv), cfg.learning_rate);
  }

  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(params), std::move(report)};
}

GridSearchResult grid_search(const Graph& g, const TrainConfig& base,
                             const GridSpec& grid) {
  const auto lrs = grid.learning_rates.empty()
                       ? std::vector<double>{base.learning_rate}
                       : grid.learning_rates;
  const auto hiddens = grid.hidden_dims.empty() ? std::vector<int>{base.hidden_dim}
                                                : grid.hidden_dims;
  const auto embeds = grid.embed_dims.empty() ? std::vector<int>{base.embed_dim}
                                              : grid.embed_dims;
  const auto klws = grid.kl_weights.empty() ? std::vector<double>{base.kl_weight}
                                            : grid.kl_weights;

  GridSearchResult result;
  bool have_best = false;
  for (double lr : lrs)
    for (int hd : hiddens)
      for (int ed : embeds)
        for (double klw : klws) {
          TrainConfig cfg = base;
          cfg.learning_rate = lr;
          cfg.hidden_dim = hd;
          cfg.embed_dim = ed;
          cfg.kl_weight = klw;
          try {
            auto [params, report] = train(g, cfg);
            const bool better =
                !have_best || report.final_loss < result.report.final_loss;
            result.reports.push_back(report);
            if (better) {
              result.params = std::move(params);
              result.config = cfg;
              result.report = std::move(report);
              have_best = true;
            }
          } catch (const NumericError&) {
            TrainReport failed;
            failed.config = cfg;
            failed.final_loss = std::numeric_limits<double>::quiet_NaN();
            failed.diverged = true;
            result.reports.push_back(std::move(failed));
          }
        }
  if (!have_best)
    throw NumericError("every grid point diverged; no usable parameters");
  return result;
}

}  // namespace simex
