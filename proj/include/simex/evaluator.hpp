#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simex/explainer.hpp"
#include "simex/trainer.hpp"

namespace simex {

enum class ExplainMethod { kGb1, kGb2, kMi };

std::string method_name(ExplainMethod m);
ExplainMethod method_from_name(const std::string& name);

struct ScoredEdge {
  int edge = 0;        // index into Graph::edges()
  double value = 0.0;  // attribution or mask value
};

// Partition of an explanation's support at its threshold.
struct ThresholdSplit {
  double threshold = 0.0;
  std::vector<ScoredEdge> above;  // value >= threshold
  std::vector<ScoredEdge> below;  // value < threshold
};

ThresholdSplit split_threshold(const ExplanationMatrix& m);

// Drops floor(s * |above|) lowest-valued edges from `above` and
// floor(s * |below|) highest-valued edges from `below`. Ties are broken by
// (value, u, v) so the result is deterministic. 0 <= s < 1.
ThresholdSplit apply_sparsity(const ThresholdSplit& split, double s,
                              const Graph& g);

// Pair score when only `selection` edges remain. By default removed edges get
// weight 0 and kept edges weight 1; with keep_values the kept edges carry
// their stored values instead (soft masking).
double intervene_and_score(const ScoreModel& model,
                           std::span<const ScoredEdge> selection, NodeId i,
                           NodeId j, bool keep_values = false);

// Score change caused by an intervention.
inline double fidelity(double y_new, double y_original) {
  return y_new - y_original;
}

// Overlap of the sign-count tuples (a1, a2) and (b1, b2):
// sum of min / sum of max, 0 when the denominator vanishes.
double effect_overlap(std::int64_t a1, std::int64_t a2, std::int64_t b1,
                      std::int64_t b2);

// Uniform distinct node pairs (not necessarily edges), without replacement.
std::vector<NodePair> sample_pairs(const Graph& g, int count,
                                   std::uint64_t seed);

struct EvalOptions {
  ExplainMethod method = ExplainMethod::kGb2;
  int ig_steps = 64;
  MiConfig mi;
  double sparsity = 0.0;
  bool soft_mask = false;  // mi only: intervene with literal mask values
  int jobs = 1;

  void validate() const;
};

struct PairEvalRecord {
  NodeId i = 0;
  NodeId j = 0;
  double score = 0.0;    // original similarity
  double score_a = 0.0;  // keeping edges at or above the threshold
  double score_b = 0.0;  // keeping edges below the threshold
  double fid_a = 0.0;
  double fid_b = 0.0;
  int above_kept = 0;  // selection sizes after sparsity
  int below_kept = 0;
  bool skipped = false;
  std::string skip_reason;
};

struct AggregateEval {
  double fid_a_mean = 0.0;
  double fid_b_mean = 0.0;
  std::int64_t a_pos = 0;  // pairs with fid_a > 0
  std::int64_t a_neg = 0;  // pairs with fid_a < 0
  std::int64_t b_pos = 0;
  std::int64_t b_neg = 0;
  double eo = 0.0;
  int pairs_evaluated = 0;
  int pairs_skipped = 0;
};

// Explains and intervenes on every pair, then aggregates in sorted pair
// order (so results do not depend on processing order or thread count).
// Mask seeds are derived from the pair ids, keeping records reproducible.
AggregateEval evaluate_method(const ScoreModel& model, const EvalOptions& opts,
                              std::span<const NodePair> pairs,
                              std::vector<PairEvalRecord>* records = nullptr);

struct SweepPoint {
  double sparsity = 0.0;
  double fid_a_mean = 0.0;
  double fid_a_halfwidth = 0.0;  // 2 * sample stddev across runs
  double fid_b_mean = 0.0;
  double fid_b_halfwidth = 0.0;
  double eo_mean = 0.0;
  double eo_halfwidth = 0.0;
  std::vector<AggregateEval> runs;  // one per seed
};

using SweepResult = std::vector<SweepPoint>;

// Repeats the evaluation per sparsity level with freshly sampled pairs per
// seed and reports mean and 2-sigma half-width across the runs.
SweepResult sweep_sparsity(const ScoreModel& model, const EvalOptions& opts,
                           std::span<const double> levels, int pair_count,
                           std::span<const std::uint64_t> seeds);

}  // namespace simex
