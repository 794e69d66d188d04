#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "simex/encoder.hpp"

namespace simex {

using NodePair = std::pair<NodeId, NodeId>;

struct TrainConfig {
  TrainerKind trainer = TrainerKind::kGae;
  int hidden_dim = 32;
  int embed_dim = 16;
  double learning_rate = 0.01;
  int epochs = 200;
  double negative_ratio = 1.0;  // negatives per positive edge
  double kl_weight = 1.0;       // variational trainer only
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_curve;  // per-epoch loss before that epoch's update
  double final_loss = 0.0;         // loss after the last update
  double wall_time_sec = 0.0;
  TrainConfig config;
  bool diverged = false;  // set by grid_search for aborted runs
};

// Per-dimension grids; an empty list means "use the base config value".
struct GridSpec {
  std::vector<double> learning_rates;
  std::vector<int> hidden_dims;
  std::vector<int> embed_dims;
  std::vector<double> kl_weights;

  bool empty() const {
    return learning_rates.empty() && hidden_dims.empty() &&
           embed_dims.empty() && kl_weights.empty();
  }
};

struct GridSearchResult {
  EncoderParams params;              // winner (lowest final loss, first on tie)
  TrainConfig config;                // winner's config
  TrainReport report;                // winner's report
  std::vector<TrainReport> reports;  // every run, in grid order
};

// Adam optimizer state for one tensor.
struct AdamState {
  Matrix m, v;
  int t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(Matrix& param, const Matrix& grad, double lr);
};

// Uniform non-edge, non-self pairs, distinct within one call. Deterministic
// for a fixed seed. Throws ValidationError when the graph has fewer than
// `count` non-edges.
std::vector<NodePair> sample_negative_edges(const Graph& g, int count,
                                            std::uint64_t seed);

// Mean binary cross-entropy of sigmoid(z_u . z_v) with targets 1 on positive
// and 0 on negative pairs. Logits are clamped to +-20.
double gae_loss(const Matrix& z, std::span<const NodePair> positives,
                std::span<const NodePair> negatives);

// gae_loss on the sampled embeddings plus kl_weight times the mean-per-node
// KL divergence to the standard normal prior.
double vgae_loss(const Matrix& z, const Matrix& mu, const Matrix& logvar,
                 std::span<const NodePair> positives,
                 std::span<const NodePair> negatives, double kl_weight);

// Full-batch training with Adam and fresh negatives every epoch. Throws
// NumericError when the loss turns non-finite.
std::pair<EncoderParams, TrainReport> train(const Graph& g,
                                            const TrainConfig& cfg);

// Trains every grid point and picks the lowest final loss; ties keep the
// earlier point. Diverged runs are reported but never win.
GridSearchResult grid_search(const Graph& g, const TrainConfig& base,
                             const GridSpec& grid);

}  // namespace simex
