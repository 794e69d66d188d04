#pragma once

#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "simex/graph.hpp"

namespace simex {

using SlotId = int;

// Gradients of one scalar output with respect to tracked input slots.
// Contains an entry (possibly all-zero) for every tracked slot of the tape.
class GradientMap {
 public:
  const Vector& vector(SlotId s) const;
  const Matrix& matrix(SlotId s) const;
  bool contains(SlotId s) const { return grads_.count(s) > 0; }

 private:
  friend class Tape;
  std::unordered_map<SlotId, std::variant<Vector, Matrix>> grads_;
};

// Reverse-mode tape over a fixed op set. Forward values are computed eagerly
// as ops are recorded; backward() replays the recording in reverse. Single
// threaded, deterministic.
class Tape {
 public:
  // Tracked inputs (gradients are produced for these).
  SlotId input(const Vector& v);
  SlotId input(const Matrix& m);
  // Untracked values.
  SlotId constant(double s);
  SlotId constant(const Vector& v);
  SlotId constant(const Matrix& m);
  SlotId constant_adjacency(NormalizedAdjacency a);

  // Normalized adjacency from per-edge weights; keeps zero-weight entries so
  // the pattern depends only on the edge list. `edges` must outlive the tape.
  SlotId renormalize(SlotId w, int node_count, std::span<const Edge> edges);
  // Sparse-times-dense A * H.
  SlotId spmm(SlotId a, SlotId h);
  // Dense product.
  SlotId matmul(SlotId a, SlotId b);
  SlotId relu(SlotId x);            // subgradient 0 at 0
  SlotId sigmoid(SlotId x);
  SlotId clamp(SlotId x, double lo, double hi);
  // Cosine similarity of rows i and j of a matrix slot; scalar output.
  // Throws DegenerateEmbedding if either row has zero norm.
  SlotId cosine_pair(SlotId z, int i, int j);
  // Inner products z_u . z_v for a list of node pairs; vector output.
  SlotId pair_inner(SlotId z, std::span<const std::pair<int, int>> pairs);
  // Mean binary cross-entropy of sigmoid(logit) against targets in {0,1}.
  // Logits are clamped to [-clamp_abs, clamp_abs] first.
  SlotId bce_with_logits(SlotId logits, Vector targets, double clamp_abs = 20.0);
  // Mean-per-row KL(N(mu, exp(logvar)) || N(0, I)), summed over columns.
  SlotId kl_normal(SlotId mu, SlotId logvar);
  // mu + noise .* exp(logvar / 2); noise is a fixed sample.
  SlotId gauss_reparam(SlotId mu, SlotId logvar, Matrix noise);
  SlotId mean(SlotId x);  // vector -> scalar
  // Mean binary entropy of sigmoid(theta) over a vector slot.
  SlotId entropy_mean(SlotId theta);
  SlotId sub(SlotId a, SlotId b);              // scalar a - b
  SlotId square(SlotId x);                     // scalar x^2
  SlotId add_scaled(SlotId a, SlotId b, double c);  // scalar a + c*b

  double scalar(SlotId s) const;
  const Vector& vector(SlotId s) const;
  const Matrix& matrix(SlotId s) const;
  const NormalizedAdjacency& adjacency(SlotId s) const;

  // Reverse pass from a scalar slot. Throws ValidationError on non-scalar.
  GradientMap backward(SlotId out) const;

 private:
  enum class Op {
    kRenormalize,
    kSpmm,
    kMatmul,
    kRelu,
    kSigmoid,
    kClamp,
    kCosinePair,
    kPairInner,
    kBce,
    kKlNormal,
    kGaussReparam,
    kMean,
    kEntropyMean,
    kSub,
    kSquare,
    kAddScaled,
  };

  using Value = std::variant<double, Vector, Matrix, NormalizedAdjacency>;
  // Adjoint of an adjacency slot is a vector over its sparse entries.
  using Adjoint = std::variant<std::monostate, double, Vector, Matrix>;

  struct Slot {
    Value value;
    bool tracked = false;
  };

  struct Node {
    Op op;
    SlotId a = -1;
    SlotId b = -1;
    SlotId out = -1;
    int i = 0;
    int j = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    int node_count = 0;
    std::span<const Edge> edges;             // renormalize
    std::vector<std::pair<int, int>> pairs;  // pair_inner
    Vector targets;                          // bce
    Matrix noise;                            // gauss_reparam
  };

  SlotId push_slot(Value v, bool tracked);
  const Slot& at(SlotId s) const;

  std::vector<Slot> slots_;
  std::vector<Node> nodes_;
};

// Max relative error between tape gradients and central finite differences of
// the scalar built by `build` from one tracked input, evaluated at x0.
// Per-coordinate error: |analytic - central| / max(|analytic|, |central|, 1e-12).
double finite_diff_check(const std::function<SlotId(Tape&, SlotId)>& build,
                         const Vector& x0, double h);
double finite_diff_check(const std::function<SlotId(Tape&, SlotId)>& build,
                         const Matrix& x0, double h);

}  // namespace simex
