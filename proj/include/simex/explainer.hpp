#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simex/encoder.hpp"

namespace simex {

// Per-edge attribution for one node pair. `edge_indices` (ascending indices
// into Graph::edges()) is the support: every edge able to influence the pair
// score. `values` is parallel to it.
struct ExplanationMatrix {
  NodeId i = 0;
  NodeId j = 0;
  std::vector<int> edge_indices;
  std::vector<double> values;
  double score = 0.0;      // similarity on the intact graph
  double threshold = 0.0;  // split point between kept and dropped edges
  std::string method;      // "gb1", "gb2" or "mi"
};

// Mask-optimization settings.
struct MiConfig {
  int steps = 300;
  double learning_rate = 0.01;
  double size_weight = 0.005;     // penalty on mean mask value
  double entropy_weight = 0.1;    // penalty on mean mask entropy
  std::uint64_t seed = 1;

  void validate() const;
};

// Objective trajectory of one mask optimization.
struct MiTrace {
  std::vector<double> objective;  // per step, before that step's update
  double final_objective = 0.0;   // after the last update
};

// Edges whose closer endpoint lies within 2 hops of {i, j}. Through two
// propagation layers plus degree renormalization these are exactly the edges
// the pair score depends on.
std::vector<int> explanation_support(const Graph& g, NodeId i, NodeId j);

// Raw gradient of the pair score with respect to each edge weight at the
// intact graph (weights all one). Threshold 0.
ExplanationMatrix explain_gb1(const ScoreModel& model, NodeId i, NodeId j);
ExplanationMatrix explain_gb1(const Graph& g, const EncoderParams& p, NodeId i,
                              NodeId j);

// Integrated gradients along the straight path from all-zero to all-one
// weights, midpoint rule with `steps` points. Threshold 0.
ExplanationMatrix explain_gb2(const ScoreModel& model, NodeId i, NodeId j,
                              int steps = 64);
ExplanationMatrix explain_gb2(const Graph& g, const EncoderParams& p, NodeId i,
                              NodeId j, int steps = 64);

// Learned sigmoid edge mask minimizing squared score change plus size and
// entropy penalties (Adam). Values are the final mask, threshold 0.5.
ExplanationMatrix explain_mi(const ScoreModel& model, NodeId i, NodeId j,
                             const MiConfig& cfg, MiTrace* trace = nullptr);
ExplanationMatrix explain_mi(const Graph& g, const EncoderParams& p, NodeId i,
                             NodeId j, const MiConfig& cfg,
                             MiTrace* trace = nullptr);

}  // namespace simex
