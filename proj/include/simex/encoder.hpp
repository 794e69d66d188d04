#pragma once

#include <cstdint>
#include <string>

#include "simex/graph.hpp"

namespace simex {

// Clamp bounds shared by training and encoding.
inline constexpr double kLogitClampAbs = 20.0;   // decoder logits
inline constexpr double kLogvarClampAbs = 10.0;  // variational log-variance

enum class TrainerKind { kGae, kVgae };

std::string trainer_name(TrainerKind k);
TrainerKind trainer_from_name(const std::string& name);

// Two-layer encoder weights. Layer 1 uses ReLU, layer 2 is linear. For the
// variational trainer, theta2 is the mean head and theta2_logvar the
// log-variance head; otherwise theta2_logvar stays empty.
struct EncoderParams {
  Matrix theta1;         // input_dim x hidden_dim
  Matrix theta2;         // hidden_dim x embed_dim
  Matrix theta2_logvar;  // hidden_dim x embed_dim or empty
  TrainerKind trainer = TrainerKind::kGae;

  int input_dim() const { return static_cast<int>(theta1.rows()); }
  int hidden_dim() const { return static_cast<int>(theta1.cols()); }
  int embed_dim() const { return static_cast<int>(theta2.cols()); }

  // Checks internal shape consistency and the match against a feature
  // dimension. Throws DimensionError.
  void validate(int feature_dim) const;
};

struct Embeddings {
  Matrix z;       // node_count x embed_dim
  Matrix mu;      // variational mean (empty for plain encoder)
  Matrix logvar;  // clamped log-variance (empty for plain encoder)
};

enum class VgaeMode { kMean, kSample };

// Deterministic embeddings Z = A relu(A X theta1) theta2 with A the
// weight-renormalized adjacency. For variational parameters this is the mean
// path.
Matrix encode(const Graph& g, const EdgeWeights& w, const EncoderParams& p);

// Variational embeddings. kSample draws one reparameterized sample using the
// seed; kMean returns the mean (the seed is ignored).
Embeddings encode_vgae(const Graph& g, const EdgeWeights& w,
                       const EncoderParams& p, VgaeMode mode,
                       std::uint64_t seed = 0);

// Cosine similarity of rows i != j. Throws DegenerateEmbedding on zero norm.
double similarity(const Matrix& z, NodeId i, NodeId j);

// Caches the weight-independent feature projection X theta1 so that repeated
// scoring under different edge weights skips the dense input product.
class ScoreModel {
 public:
  ScoreModel(const Graph& g, EncoderParams params);

  const Graph& graph() const { return *g_; }
  const EncoderParams& params() const { return params_; }
  const Matrix& feature_projection() const { return proj_; }

  // Mean-path embeddings under the given weights.
  Matrix embed(const EdgeWeights& w) const;
  // Cosine similarity of one pair without materializing all of layer 2.
  double pair_score(const EdgeWeights& w, NodeId i, NodeId j) const;

 private:
  const Graph* g_;
  EncoderParams params_;
  Matrix proj_;
};

}  // namespace simex
