#include "simex/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>
#include <unordered_set>

#include "simex/rng.hpp"

namespace simex {

std::string method_name(ExplainMethod m) {
  switch (m) {
    case ExplainMethod::kGb1: return "gb1";
    case ExplainMethod::kGb2: return "gb2";
    case ExplainMethod::kMi: return "mi";
  }
  throw ValidationError("unhandled method");
}

ExplainMethod method_from_name(const std::string& name) {
  if (name == "gb1") return ExplainMethod::kGb1;
  if (name == "gb2") return ExplainMethod::kGb2;
  if (name == "mi") return ExplainMethod::kMi;
  throw ValidationError("unknown method \"" + name +
                        "\" (expected gb1, gb2 or mi)");
}

void EvalOptions::validate() const {
  if (ig_steps < 1) throw ValidationError("ig_steps must be positive");
  mi.validate();
  if (!(sparsity >= 0.0 && sparsity < 1.0))
    throw ValidationError("sparsity must lie in [0, 1)");
  if (soft_mask && method != ExplainMethod::kMi)
    throw ValidationError("soft masking is only defined for the mi method");
  if (jobs < 1) throw ValidationError("jobs must be positive");
}

ThresholdSplit split_threshold(const ExplanationMatrix& m) {
  if (m.edge_indices.size() != m.values.size())
    throw DimensionError("explanation edge and value counts differ");
  ThresholdSplit split;
  split.threshold = m.threshold;
  for (std::size_t k = 0; k < m.values.size(); ++k) {
    if (m.values[k] >= m.threshold)
      split.above.push_back({m.edge_indices[k], m.values[k]});
    else
      split.below.push_back({m.edge_indices[k], m.values[k]});
  }
  return split;
}

namespace {

// Ascending by (value, u, v); deterministic under ties.
auto value_order(const Graph& g) {
  return [&g](const ScoredEdge& a, const ScoredEdge& b) {
    if (a.value != b.value) return a.value < b.value;
    return g.edges()[a.edge] < g.edges()[b.edge];
  };
}

}  // namespace

ThresholdSplit apply_sparsity(const ThresholdSplit& split, double s,
                              const Graph& g) {
  if (!(s >= 0.0 && s < 1.0))
    throw ValidationError("sparsity must lie in [0, 1)");
  ThresholdSplit out;
  out.threshold = split.threshold;

  auto drop = [&](const std::vector<ScoredEdge>& side, bool drop_smallest) {
    std::vector<ScoredEdge> sorted = side;
    std::sort(sorted.begin(), sorted.end(), value_order(g));
    const std::size_t k =
        static_cast<std::size_t>(s * static_cast<double>(side.size()));
    std::vector<ScoredEdge> kept;
    if (drop_smallest)
      kept.assign(sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    else
      kept.assign(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(k));
    // Restore edge-index order for stable downstream output.
    std::sort(kept.begin(), kept.end(),
              [](const ScoredEdge& a, const ScoredEdge& b) {
                return a.edge < b.edge;
              });
    return kept;
  };
  out.above = drop(split.above, true);   // drop weakest selected edges
  out.below = drop(split.below, false);  // drop strongest non-selected edges
  return out;
}

double intervene_and_score(const ScoreModel& model,
                           std::span<const ScoredEdge> selection, NodeId i,
                           NodeId j, bool keep_values) {
  EdgeWeights w = EdgeWeights::zeros(model.graph());
  for (const ScoredEdge& se : selection) {
    if (se.edge < 0 || se.edge >= model.graph().edge_count())
      throw ValidationError("selection edge index out of range");
    w[se.edge] = keep_values ? se.value : 1.0;
  }
  return model.pair_score(w, i, j);
}

double effect_overlap(std::int64_t a1, std::int64_t a2, std::int64_t b1,
                      std::int64_t b2) {
  if (a1 < 0 || a2 < 0 || b1 < 0 || b2 < 0)
    throw ValidationError("sign counts must be non-negative");
  const std::int64_t den = std::max(a1, b1) + std::max(a2, b2);
  if (den == 0) return 0.0;
  const std::int64_t num = std::min(a1, b1) + std::min(a2, b2);
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<NodePair> sample_pairs(const Graph& g, int count,
                                   std::uint64_t seed) {
  if (count < 1) throw ValidationError("pair count must be positive");
  const std::int64_t n = g.node_count();
  const std::int64_t total = n * (n - 1) / 2;
  if (count > total)
    throw ValidationError("cannot sample " + std::to_string(count) +
                          " distinct pairs from " + std::to_string(total));

  Rng rng(seed);
  std::vector<NodePair> out;
  out.reserve(count);

  if (static_cast<std::int64_t>(count) * 2 >= total) {
    // Dense request: partial shuffle of the full pair enumeration.
    std::vector<NodePair> all;
    all.reserve(static_cast<std::size_t>(total));
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v) all.emplace_back(u, v);
    for (int k = 0; k < count; ++k) {
      const std::size_t pick =
          k + static_cast<std::size_t>(rng.uniform_int(all.size() - k));
      std::swap(all[k], all[pick]);
      out.push_back(all[k]);
    }
    return out;
  }

  std::unordered_set<std::uint64_t> seen;
  while (static_cast<int>(out.size()) < count) {
    NodeId u = static_cast<NodeId>(rng.uniform_int(n));
    NodeId v = static_cast<NodeId>(rng.uniform_int(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    const std::uint64_t key =
        (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
    if (!seen.insert(key).second) continue;
    out.emplace_back(u, v);
  }
  return out;
}

namespace {

PairEvalRecord evaluate_pair(const ScoreModel& model, const Matrix& z,
                             const EvalOptions& opts, NodePair pair) {
  PairEvalRecord r;
  r.i = pair.first;
  r.j = pair.second;
  try {
    r.score = similarity(z, r.i, r.j);

    ExplanationMatrix ex;
    switch (opts.method) {
      case ExplainMethod::kGb1:
        ex = explain_gb1(model, r.i, r.j);
        break;
      case ExplainMethod::kGb2:
        ex = explain_gb2(model, r.i, r.j, opts.ig_steps);
        break;
      case ExplainMethod::kMi: {
        MiConfig cfg = opts.mi;
        // Pair-content seed: reproducible regardless of processing order.
        cfg.seed = derive_seed(
            opts.mi.seed,
            (static_cast<std::uint64_t>(r.i) << 32) |
                static_cast<std::uint32_t>(r.j));
        ex = explain_mi(model, r.i, r.j, cfg);
        break;
      }
    }

    const ThresholdSplit split =
        apply_sparsity(split_threshold(ex), opts.sparsity, model.graph());
    r.above_kept = static_cast<int>(split.above.size());
    r.below_kept = static_cast<int>(split.below.size());
    const bool soft = opts.soft_mask;
    r.score_a = intervene_and_score(model, split.above, r.i, r.j, soft);
    r.score_b = intervene_and_score(model, split.below, r.i, r.j, soft);
    r.fid_a = fidelity(r.score_a, r.score);
    r.fid_b = fidelity(r.score_b, r.score);
  } catch (const DegenerateEmbedding& e) {
    r.skipped = true;
    r.skip_reason = e.what();
  }
  return r;
}

}  // namespace

AggregateEval evaluate_method(const ScoreModel& model, const EvalOptions& opts,
                              std::span<const NodePair> pairs,
                              std::vector<PairEvalRecord>* records) {
  opts.validate();
  const Matrix z = model.embed(EdgeWeights::ones(model.graph()));

  std::vector<PairEvalRecord> local(pairs.size());
  if (opts.jobs <= 1 || pairs.size() <= 1) {
    for (std::size_t k = 0; k < pairs.size(); ++k)
      local[k] = evaluate_pair(model, z, opts, pairs[k]);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (true) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pairs.size()) return;
        try {
          local[k] = evaluate_pair(model, z, opts, pairs[k]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> threads;
    const int nthreads =
        std::min<int>(opts.jobs, static_cast<int>(pairs.size()));
    threads.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Reduce in sorted pair order so the aggregate is independent of both the
  // input order and the thread schedule.
  std::vector<std::size_t> order(local.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (local[a].i != local[b].i) return local[a].i < local[b].i;
    return local[a].j < local[b].j;
  });

  AggregateEval agg;
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t k : order) {
    const PairEvalRecord& r = local[k];
    if (r.skipped) {
      ++agg.pairs_skipped;
      continue;
    }
    ++agg.pairs_evaluated;
    sum_a += r.fid_a;
    sum_b += r.fid_b;
    if (r.fid_a > 0.0) ++agg.a_pos;
    if (r.fid_a < 0.0) ++agg.a_neg;
    if (r.fid_b > 0.0) ++agg.b_pos;
    if (r.fid_b < 0.0) ++agg.b_neg;
  }
  if (agg.pairs_evaluated > 0) {
    sum_a /= agg.pairs_evaluated;
    sum_b /= agg.pairs_evaluated;
    agg.fid_a_mean = sum_a;
    agg.fid_b_mean = sum_b;
  }
  agg.eo = effect_overlap(agg.a_pos, agg.a_neg, agg.b_pos, agg.b_neg);

  if (records != nullptr) *records = std::move(local);
  return agg;
}

SweepResult sweep_sparsity(const ScoreModel& model, const EvalOptions& opts,
                           std::span<const double> levels, int pair_count,
                           std::span<const std::uint64_t> seeds) {
  if (levels.empty()) throw ValidationError("sweep needs at least one level");
  if (seeds.empty()) throw ValidationError("sweep needs at least one seed");

  SweepResult result;
  result.reserve(levels.size());
  for (double level : levels) {
    SweepPoint point;
    point.sparsity = level;
    for (std::uint64_t seed : seeds) {
      const auto pairs = sample_pairs(model.graph(), pair_count, seed);
      EvalOptions run = opts;
      run.sparsity = level;
      run.mi.seed = derive_seed(seed, 11);
      point.runs.push_back(evaluate_method(model, run, pairs));
    }

    auto stats = [&](auto pick) {
      const std::size_t n = point.runs.size();
      double mean = 0.0;
      for (const auto& r : point.runs) mean += pick(r);
      mean /= static_cast<double>(n);
      double var = 0.0;
      if (n > 1) {
        for (const auto& r : point.runs) {
          const double d = pick(r) - mean;
          var += d * d;
        }
        var /= static_cast<double>(n - 1);
      }
      return std::pair<double, double>(mean, 2.0 * std::sqrt(var));
    };
    std::tie(point.fid_a_mean, point.fid_a_halfwidth) =
        stats([](const AggregateEval& a) { return a.fid_a_mean; });
    std::tie(point.fid_b_mean, point.fid_b_halfwidth) =
        stats([](const AggregateEval& a) { return a.fid_b_mean; });
    std::tie(point.eo_mean, point.eo_halfwidth) =
        stats([](const AggregateEval& a) { return a.eo; });
    result.push_back(std::move(point));
  }
  return result;
}

}  // namespace simex
