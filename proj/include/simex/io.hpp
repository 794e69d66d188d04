#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "simex/evaluator.hpp"

namespace simex {

// Bumped on any breaking change to the JSON artifact layout.
inline constexpr int kFormatVersion = 1;

struct DatasetConfig {
  std::string edges;
  std::string features;
};

struct ExplainConfig {
  ExplainMethod method = ExplainMethod::kGb2;
  int ig_steps = 64;
};

struct EvalConfig {
  int pairs = 200;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<double> sparsity_levels = {0.0};
  bool soft_mask = false;
  int jobs = 1;
};

struct RunConfig {
  DatasetConfig dataset;
  std::string output_dir = ".";
  TrainConfig train;
  GridSpec grid;
  MiConfig mi;
  ExplainConfig explain;
  EvalConfig eval;
};

// Strict JSON config: unknown keys and wrong types are rejected with the full
// key path; missing keys fall back to defaults.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

// Canonical echo with every default filled in; key order is sorted, so equal
// configs serialize identically.
std::string config_echo_json(const RunConfig& cfg);
// 16-hex-digit FNV-1a of the canonical echo.
std::string config_hash(const RunConfig& cfg);

struct Checkpoint {
  EncoderParams params;
  std::string config_hash;
};

void save_checkpoint(const std::string& path, const EncoderParams& params,
                     const RunConfig& cfg);
Checkpoint load_checkpoint(const std::string& path);

void write_train_report(const std::string& path, const TrainReport& best,
                        const std::vector<TrainReport>& grid_reports,
                        const RunConfig& cfg);

// Explanation artifact with resolved edge endpoints.
struct ExplanationDoc {
  std::string method;
  NodeId i = 0;
  NodeId j = 0;
  double score = 0.0;
  double threshold = 0.0;
  std::vector<std::tuple<NodeId, NodeId, double>> edges;  // (u, v, value)
  std::string config_hash;
};

ExplanationDoc make_explanation_doc(const Graph& g, const ExplanationMatrix& m,
                                    const std::string& hash);
void save_explanation(const std::string& path, const ExplanationDoc& doc);
ExplanationDoc load_explanation(const std::string& path);

// Graphviz rendering; top_k = 0 keeps all edges, otherwise the k largest by
// absolute value. Edge color encodes sign (or mask threshold), width encodes
// magnitude.
void export_dot(const ExplanationDoc& doc, const std::string& path,
                int top_k = 0);

void write_eval_report(const std::string& path, const std::string& method,
                       double sparsity, const AggregateEval& agg,
                       const std::vector<PairEvalRecord>& records,
                       bool include_records, const RunConfig& cfg);

// One row per method: "method,fid_a,fid_b,eo".
void write_eval_table_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, AggregateEval>>& rows);

void write_sweep_report(const std::string& path, const std::string& method,
                        const SweepResult& sweep, const RunConfig& cfg);
// "sparsity,fid_a_mean,fid_a_hw,fid_b_mean,fid_b_hw,eo_mean,eo_hw".
void write_sweep_csv(const std::string& path, const SweepResult& sweep);

// Edge / feature writers matching the loader's formats.
void write_edges_file(const std::string& path, const Graph& g,
                      const std::string& comment = "");
void write_features_csv(const std::string& path, const Graph& g);

}  // namespace simex
