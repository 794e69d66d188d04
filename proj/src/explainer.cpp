#include "simex/explainer.hpp"

#include <cmath>
#include <string>

#include "simex/rng.hpp"
#include "simex/tape.hpp"
#include "simex/trainer.hpp"  // AdamState drives the mask updates

namespace simex {

void MiConfig::validate() const {
  if (steps < 1) throw ValidationError("mask optimization needs at least one step");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("mask learning rate must be positive and finite");
  if (!(size_weight >= 0.0) || !(entropy_weight >= 0.0))
    throw ValidationError("mask penalties must be non-negative");
}

std::vector<int> explanation_support(const Graph& g, NodeId i, NodeId j) {
  if (i == j) throw ValidationError("explanation requires two distinct nodes");
  const NodeId seeds[2] = {i, j};
  // Radius 3 so the edge rule (closer endpoint within radius-1 hops) yields
  // the 2-hop influence set.
  return khop_subgraph(g, seeds, 3).edge_indices;
}

namespace {

// Pair-local view: the score of (i, j) computed on this subgraph equals the
// full-graph score bitwise, because every node within 2 hops has its complete
// incidence (and therefore exact degree) inside the 3-hop neighborhood.
struct PairContext {
  std::vector<NodeId> nodes;
  std::vector<Edge> local_edges;
  std::vector<int> orig_edges;
  int li = 0;
  int lj = 0;
  Matrix proj;  // gathered rows of the feature projection
};

PairContext build_context(const ScoreModel& model, NodeId i, NodeId j) {
  const Graph& g = model.graph();
  if (i < 0 || j < 0 || i >= g.node_count() || j >= g.node_count())
    throw ValidationError("node id out of range for explanation");
  if (i == j) throw ValidationError("explanation requires two distinct nodes");

  const NodeId seeds[2] = {i, j};
  const ComputationSubgraph sub = khop_subgraph(g, seeds, 3);

  PairContext ctx;
  ctx.nodes = sub.nodes;
  ctx.orig_edges = sub.edge_indices;
  ctx.local_edges.reserve(sub.edge_indices.size());
  for (int e : sub.edge_indices) {
    const Edge& ed = g.edges()[e];
    ctx.local_edges.push_back({sub.local_id(ed.u), sub.local_id(ed.v)});
  }
  ctx.li = sub.local_id(i);
  ctx.lj = sub.local_id(j);

  const Matrix& proj = model.feature_projection();
  ctx.proj.resize(static_cast<Eigen::Index>(ctx.nodes.size()), proj.cols());
  for (std::size_t r = 0; r < ctx.nodes.size(); ++r)
    ctx.proj.row(static_cast<Eigen::Index>(r)) = proj.row(ctx.nodes[r]);
  return ctx;
}

// Records the two-layer propagation and cosine read-out on the local view.
SlotId local_score(Tape& tape, const PairContext& ctx, const Matrix& out_head,
                   SlotId weights) {
  const SlotId a = tape.renormalize(
      weights, static_cast<int>(ctx.nodes.size()), ctx.local_edges);
  const SlotId h = tape.relu(tape.spmm(a, tape.constant(ctx.proj)));
  const SlotId s = tape.spmm(a, h);
  const SlotId z = tape.matmul(s, tape.constant(out_head));
  return tape.cosine_pair(z, ctx.li, ctx.lj);
}

double intact_score(const PairContext& ctx, const Matrix& out_head) {
  Tape tape;
  const SlotId w = tape.constant(
      Vector(Vector::Ones(static_cast<Eigen::Index>(ctx.local_edges.size()))));
  return tape.scalar(local_score(tape, ctx, out_head, w));
}

ExplanationMatrix make_result(const PairContext& ctx, NodeId i, NodeId j,
                              std::string method, double threshold) {
  ExplanationMatrix m;
  m.i = i;
  m.j = j;
  m.edge_indices = ctx.orig_edges;
  m.values.assign(ctx.orig_edges.size(), 0.0);
  m.method = std::move(method);
  m.threshold = threshold;
  return m;
}

}  // namespace

ExplanationMatrix explain_gb1(const ScoreModel& model, NodeId i, NodeId j) {
  const PairContext ctx = build_context(model, i, j);
  ExplanationMatrix result = make_result(ctx, i, j, "gb1", 0.0);

  Tape tape;
  const SlotId w = tape.input(
      Vector(Vector::Ones(static_cast<Eigen::Index>(ctx.local_edges.size()))));
  const SlotId y = local_score(tape, ctx, model.params().theta2, w);
  result.score = tape.scalar(y);
  const Vector grads = tape.backward(y).vector(w);
  for (Eigen::Index e = 0; e < grads.size(); ++e) result.values[e] = grads[e];
  return result;
}

ExplanationMatrix explain_gb2(const ScoreModel& model, NodeId i, NodeId j,
                              int steps) {
  if (steps < 1) throw ValidationError("integration needs at least one step");
  const PairContext ctx = build_context(model, i, j);
  ExplanationMatrix result = make_result(ctx, i, j, "gb2", 0.0);
  result.score = intact_score(ctx, model.params().theta2);

  const Eigen::Index ne = static_cast<Eigen::Index>(ctx.local_edges.size());
  Vector total = Vector::Zero(ne);
  for (int k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / steps;
    Tape tape;
    const SlotId w = tape.input(Vector(Vector::Constant(ne, alpha)));
    const SlotId y = local_score(tape, ctx, model.params().theta2, w);
    total += tape.backward(y).vector(w);
  }
  // Attribution = (w_e - 0) * average path gradient with w_e = 1.
  total /= static_cast<double>(steps);
  for (Eigen::Index e = 0; e < ne; ++e) result.values[e] = total[e];
  return result;
}

ExplanationMatrix explain_mi(const ScoreModel& model, NodeId i, NodeId j,
                             const MiConfig& cfg, MiTrace* trace) {
  cfg.validate();
  const PairContext ctx = build_context(model, i, j);
  ExplanationMatrix result = make_result(ctx, i, j, "mi", 0.5);
  result.score = intact_score(ctx, model.params().theta2);

  const Eigen::Index ne = static_cast<Eigen::Index>(ctx.local_edges.size());
  if (trace != nullptr) {
    trace->objective.clear();
    trace->final_objective = 0.0;
  }
  if (ne == 0) return result;  // nothing to mask

  Rng rng(derive_seed(cfg.seed, 7));
  Matrix theta(ne, 1);
  for (Eigen::Index e = 0; e < ne; ++e) theta(e, 0) = 0.1 * rng.normal();

  const double y0 = result.score;
  AdamState opt;
  auto objective = [&](Tape& tape, SlotId th) {
    const SlotId mask = tape.sigmoid(th);
    const SlotId y = local_score(tape, ctx, model.params().theta2, mask);
    const SlotId data = tape.square(tape.sub(y, tape.constant(y0)));
    const SlotId size_term = tape.mean(mask);
    const SlotId ent_term = tape.entropy_mean(th);
    return tape.add_scaled(tape.add_scaled(data, size_term, cfg.size_weight),
                           ent_term, cfg.entropy_weight);
  };

  for (int step = 0; step <= cfg.steps; ++step) {
    Tape tape;
    const SlotId th = tape.input(Vector(theta.col(0)));
    const SlotId obj = objective(tape, th);
    const double value = tape.scalar(obj);
    if (!std::isfinite(value))
      throw NumericError("mask objective turned non-finite at step " +
                         std::to_string(step));
    if (step == cfg.steps) {
      if (trace != nullptr) trace->final_objective = value;
      break;
    }
    if (trace != nullptr) trace->objective.push_back(value);
    const Vector grad = tape.backward(obj).vector(th);
    opt.step(theta, Matrix(grad), cfg.learning_rate);
  }

  for (Eigen::Index e = 0; e < ne; ++e) {
    const double t = theta(e, 0);
    result.values[e] = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                                : std::exp(t) / (1.0 + std::exp(t));
  }
  return result;
}

ExplanationMatrix explain_gb1(const Graph& g, const EncoderParams& p, NodeId i,
                              NodeId j) {
  return explain_gb1(ScoreModel(g, p), i, j);
}

ExplanationMatrix explain_gb2(const Graph& g, const EncoderParams& p, NodeId i,
                              NodeId j, int steps) {
  return explain_gb2(ScoreModel(g, p), i, j, steps);
}

ExplanationMatrix explain_mi(const Graph& g, const EncoderParams& p, NodeId i,
                             NodeId j, const MiConfig& cfg, MiTrace* trace) {
  return explain_mi(ScoreModel(g, p), i, j, cfg, trace);
}

}  // namespace simex
