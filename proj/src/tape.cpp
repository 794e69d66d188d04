#include "simex/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace simex {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

const Vector& GradientMap::vector(SlotId s) const {
  auto it = grads_.find(s);
  if (it == grads_.end())
    throw ValidationError("no gradient recorded for slot " + std::to_string(s));
  if (!std::holds_alternative<Vector>(it->second))
    throw ValidationError("gradient for slot " + std::to_string(s) +
                          " is not a vector");
  return std::get<Vector>(it->second);
}

const Matrix& GradientMap::matrix(SlotId s) const {
  auto it = grads_.find(s);
  if (it == grads_.end())
    throw ValidationError("no gradient recorded for slot " + std::to_string(s));
  if (!std::holds_alternative<Matrix>(it->second))
    throw ValidationError("gradient for slot " + std::to_string(s) +
                          " is not a matrix");
  return std::get<Matrix>(it->second);
}

SlotId Tape::push_slot(Value v, bool tracked) {
  slots_.push_back({std::move(v), tracked});
  return static_cast<SlotId>(slots_.size()) - 1;
}

const Tape::Slot& Tape::at(SlotId s) const {
  if (s < 0 || s >= static_cast<SlotId>(slots_.size()))
    throw ValidationError("slot id out of range: " + std::to_string(s));
  return slots_[s];
}

SlotId Tape::input(const Vector& v) { return push_slot(v, true); }
SlotId Tape::input(const Matrix& m) { return push_slot(m, true); }
SlotId Tape::constant(double s) { return push_slot(s, false); }
SlotId Tape::constant(const Vector& v) { return push_slot(v, false); }
SlotId Tape::constant(const Matrix& m) { return push_slot(m, false); }
SlotId Tape::constant_adjacency(NormalizedAdjacency a) {
  return push_slot(std::move(a), false);
}

double Tape::scalar(SlotId s) const {
  const Slot& slot = at(s);
  if (!std::holds_alternative<double>(slot.value))
    throw ValidationError("slot " + std::to_string(s) + " is not a scalar");
  return std::get<double>(slot.value);
}

const Vector& Tape::vector(SlotId s) const {
  const Slot& slot = at(s);
  if (!std::holds_alternative<Vector>(slot.value))
    throw ValidationError("slot " + std::to_string(s) + " is not a vector");
  return std::get<Vector>(slot.value);
}

const Matrix& Tape::matrix(SlotId s) const {
  const Slot& slot = at(s);
  if (!std::holds_alternative<Matrix>(slot.value))
    throw ValidationError("slot " + std::to_string(s) + " is not a matrix");
  return std::get<Matrix>(slot.value);
}

const NormalizedAdjacency& Tape::adjacency(SlotId s) const {
  const Slot& slot = at(s);
  if (!std::holds_alternative<NormalizedAdjacency>(slot.value))
    throw ValidationError("slot " + std::to_string(s) + " is not an adjacency");
  return std::get<NormalizedAdjacency>(slot.value);
}

SlotId Tape::renormalize(SlotId w, int node_count, std::span<const Edge> edges) {
  const Vector& weights = vector(w);
  NormalizedAdjacency a = normalize_keep_pattern(node_count, edges, weights);
  const SlotId out = push_slot(std::move(a), false);
  Node n{.op = Op::kRenormalize, .a = w, .out = out, .node_count = node_count,
         .edges = edges};
  nodes_.push_back(std::move(n));
  return out;
}

SlotId Tape::spmm(SlotId a, SlotId h) {
  const NormalizedAdjacency& A = adjacency(a);
  const Matrix& H = matrix(h);
  const SlotId out = push_slot(A.multiply(H), false);
  nodes_.push_back({.op = Op::kSpmm, .a = a, .b = h, .out = out});
  return out;
}

SlotId Tape::matmul(SlotId a, SlotId b) {
  const Matrix& A = matrix(a);
  const Matrix& B = matrix(b);
  if (A.cols() != B.rows())
    throw DimensionError("matmul shape mismatch: " + std::to_string(A.cols()) +
                         " vs " + std::to_string(B.rows()));
  const SlotId out = push_slot(Matrix(A * B), false);
  nodes_.push_back({.op = Op::kMatmul, .a = a, .b = b, .out = out});
  return out;
}

SlotId Tape::relu(SlotId x) {
  const Slot& slot = at(x);
  SlotId out;
  if (std::holds_alternative<Matrix>(slot.value))
    out = push_slot(Matrix(std::get<Matrix>(slot.value).cwiseMax(0.0)), false);
  else
    out = push_slot(Vector(vector(x).cwiseMax(0.0)), false);
  nodes_.push_back({.op = Op::kRelu, .a = x, .out = out});
  return out;
}

SlotId Tape::sigmoid(SlotId x) {
  const Slot& slot = at(x);
  SlotId out;
  if (std::holds_alternative<Matrix>(slot.value)) {
    Matrix y = std::get<Matrix>(slot.value).unaryExpr(&sigmoid_scalar);
    out = push_slot(std::move(y), false);
  } else {
    Vector y = vector(x).unaryExpr(&sigmoid_scalar);
    out = push_slot(std::move(y), false);
  }
  nodes_.push_back({.op = Op::kSigmoid, .a = x, .out = out});
  return out;
}

SlotId Tape::clamp(SlotId x, double lo, double hi) {
  if (!(lo <= hi)) throw ValidationError("clamp bounds out of order");
  const Slot& slot = at(x);
  SlotId out;
  if (std::holds_alternative<Matrix>(slot.value)) {
    Matrix y = std::get<Matrix>(slot.value).cwiseMax(lo).cwiseMin(hi);
    out = push_slot(std::move(y), false);
  } else {
    Vector y = vector(x).cwiseMax(lo).cwiseMin(hi);
    out = push_slot(std::move(y), false);
  }
  nodes_.push_back({.op = Op::kClamp, .a = x, .out = out, .c0 = lo, .c1 = hi});
  return out;
}

SlotId Tape::cosine_pair(SlotId z, int i, int j) {
  const Matrix& Z = matrix(z);
  if (i < 0 || j < 0 || i >= Z.rows() || j >= Z.rows())
    throw ValidationError("cosine row index out of range");
  const double ni = Z.row(i).norm();
  const double nj = Z.row(j).norm();
  if (ni == 0.0 || nj == 0.0)
    throw DegenerateEmbedding("zero-norm embedding for node " +
                              std::to_string(ni == 0.0 ? i : j));
  const double y = Z.row(i).dot(Z.row(j)) / (ni * nj);
  const SlotId out = push_slot(y, false);
  nodes_.push_back({.op = Op::kCosinePair, .a = z, .out = out, .i = i, .j = j});
  return out;
}

SlotId Tape::pair_inner(SlotId z, std::span<const std::pair<int, int>> pairs) {
  const Matrix& Z = matrix(z);
  Vector logits(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [u, v] = pairs[p];
    if (u < 0 || v < 0 || u >= Z.rows() || v >= Z.rows())
      throw ValidationError("pair node index out of range");
    logits[p] = Z.row(u).dot(Z.row(v));
  }
  const SlotId out = push_slot(std::move(logits), false);
  Node n{.op = Op::kPairInner, .a = z, .out = out};
  n.pairs.assign(pairs.begin(), pairs.end());
  nodes_.push_back(std::move(n));
  return out;
}

SlotId Tape::bce_with_logits(SlotId logits, Vector targets, double clamp_abs) {
  const Vector& x = vector(logits);
  if (x.size() != targets.size())
    throw DimensionError("targets size does not match logits");
  if (x.size() == 0) throw ValidationError("empty logit vector");
  double total = 0.0;
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    const double xc = std::clamp(x[p], -clamp_abs, clamp_abs);
    total += softplus(xc) - targets[p] * xc;
  }
  const SlotId out = push_slot(total / static_cast<double>(x.size()), false);
  Node n{.op = Op::kBce, .a = logits, .out = out, .c0 = clamp_abs};
  n.targets = std::move(targets);
  nodes_.push_back(std::move(n));
  return out;
}

SlotId Tape::kl_normal(SlotId mu, SlotId logvar) {
  const Matrix& m = matrix(mu);
  const Matrix& lv = matrix(logvar);
  if (m.rows() != lv.rows() || m.cols() != lv.cols())
    throw DimensionError("mu and logvar shapes differ");
  const double n = static_cast<double>(m.rows());
  const double kl =
      -0.5 *
      ((1.0 + lv.array() - m.array().square() - lv.array().exp()).sum()) / n;
  const SlotId out = push_slot(kl, false);
  nodes_.push_back({.op = Op::kKlNormal, .a = mu, .b = logvar, .out = out});
  return out;
}

SlotId Tape::gauss_reparam(SlotId mu, SlotId logvar, Matrix noise) {
  const Matrix& m = matrix(mu);
  const Matrix& lv = matrix(logvar);
  if (m.rows() != lv.rows() || m.cols() != lv.cols() ||
      noise.rows() != m.rows() || noise.cols() != m.cols())
    throw DimensionError("reparameterization shape mismatch");
  Matrix z = m.array() + noise.array() * (0.5 * lv.array()).exp();
  const SlotId out = push_slot(std::move(z), false);
  Node n{.op = Op::kGaussReparam, .a = mu, .b = logvar, .out = out};
  n.noise = std::move(noise);
  nodes_.push_back(std::move(n));
  return out;
}

SlotId Tape::mean(SlotId x) {
  const Vector& v = vector(x);
  if (v.size() == 0) throw ValidationError("mean of empty vector");
  const SlotId out = push_slot(v.mean(), false);
  nodes_.push_back({.op = Op::kMean, .a = x, .out = out});
  return out;
}

SlotId Tape::entropy_mean(SlotId theta) {
  const Vector& t = vector(theta);
  if (t.size() == 0) throw ValidationError("entropy of empty vector");
  double total = 0.0;
  for (Eigen::Index p = 0; p < t.size(); ++p)
    total += softplus(t[p]) - t[p] * sigmoid_scalar(t[p]);
  const SlotId out = push_slot(total / static_cast<double>(t.size()), false);
  nodes_.push_back({.op = Op::kEntropyMean, .a = theta, .out = out});
  return out;
}

SlotId Tape::sub(SlotId a, SlotId b) {
  const SlotId out = push_slot(scalar(a) - scalar(b), false);
  nodes_.push_back({.op = Op::kSub, .a = a, .b = b, .out = out});
  return out;
}

SlotId Tape::square(SlotId x) {
  const double v = scalar(x);
  const SlotId out = push_slot(v * v, false);
  nodes_.push_back({.op = Op::kSquare, .a = x, .out = out});
  return out;
}

SlotId Tape::add_scaled(SlotId a, SlotId b, double c) {
  const SlotId out = push_slot(scalar(a) + c * scalar(b), false);
  nodes_.push_back({.op = Op::kAddScaled, .a = a, .b = b, .out = out, .c0 = c});
  return out;
}

GradientMap Tape::backward(SlotId out) const {
  const Slot& out_slot = at(out);
  if (!std::holds_alternative<double>(out_slot.value))
    throw ValidationError("backward requires a scalar output slot");

  const int ns = static_cast<int>(slots_.size());
  // A slot matters if it can influence `out` and is reachable from a tracked
  // input (or is itself tracked).
  std::vector<char> hits_out(ns, 0);
  hits_out[out] = 1;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!hits_out[it->out]) continue;
    if (it->a >= 0) hits_out[it->a] = 1;
    if (it->b >= 0) hits_out[it->b] = 1;
  }
  std::vector<char> from_tracked(ns, 0);
  for (int s = 0; s < ns; ++s) from_tracked[s] = slots_[s].tracked;
  for (const Node& n : nodes_) {
    if ((n.a >= 0 && from_tracked[n.a]) || (n.b >= 0 && from_tracked[n.b]))
      from_tracked[n.out] = 1;
  }
  std::vector<char> needed(ns, 0);
  for (int s = 0; s < ns; ++s) needed[s] = hits_out[s] && from_tracked[s];
  needed[out] = 1;

  std::vector<Adjoint> adj(ns);
  adj[out] = 1.0;

  auto grad_scalar = [&](SlotId s) -> double {
    if (std::holds_alternative<std::monostate>(adj[s])) return 0.0;
    return std::get<double>(adj[s]);
  };
  auto add_scalar = [&](SlotId s, double g) {
    if (!needed[s]) return;
    if (std::holds_alternative<std::monostate>(adj[s])) adj[s] = 0.0;
    std::get<double>(adj[s]) += g;
  };
  auto vec_adj = [&](SlotId s, Eigen::Index size) -> Vector& {
    if (std::holds_alternative<std::monostate>(adj[s]))
      adj[s] = Vector(Vector::Zero(size));
    return std::get<Vector>(adj[s]);
  };
  auto mat_adj = [&](SlotId s, Eigen::Index r, Eigen::Index c) -> Matrix& {
    if (std::holds_alternative<std::monostate>(adj[s]))
      adj[s] = Matrix(Matrix::Zero(r, c));
    return std::get<Matrix>(adj[s]);
  };

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const Node& n = *it;
    if (!hits_out[n.out] || std::holds_alternative<std::monostate>(adj[n.out]))
      continue;

    switch (n.op) {
      case Op::kRenormalize: {
        const auto& g = std::get<Vector>(adj[n.out]);
        const auto& A = std::get<NormalizedAdjacency>(slots_[n.out].value);
        if (!needed[n.a]) break;
        Vector& gw = vec_adj(n.a, static_cast<Eigen::Index>(n.edges.size()));
        // Degree back-coupling: acc[u] collects adjoint mass of every entry in
        // row u or column u, weighted by the entry value.
        std::vector<double> acc(A.node_count, 0.0);
        for (int i = 0; i < A.node_count; ++i) {
          for (int e = A.row_ptr[i]; e < A.row_ptr[i + 1]; ++e) {
            const double gv = g[e] * A.val[e];
            acc[i] += gv;
            acc[A.col[e]] += gv;
            const int f = A.entry_edge[e];
            if (f >= 0)
              gw[f] += g[e] / std::sqrt(A.degree[i] * A.degree[A.col[e]]);
          }
        }
        for (std::size_t f = 0; f < n.edges.size(); ++f) {
          const Edge& ed = n.edges[f];
          gw[static_cast<Eigen::Index>(f)] -=
              0.5 * (acc[ed.u] / A.degree[ed.u] + acc[ed.v] / A.degree[ed.v]);
        }
        break;
      }
      case Op::kSpmm: {
        const auto& g = std::get<Matrix>(adj[n.out]);
        const auto& A = std::get<NormalizedAdjacency>(slots_[n.a].value);
        const auto& H = std::get<Matrix>(slots_[n.b].value);
        if (needed[n.b]) {
          // A is symmetric, so the H adjoint is another A-product.
          mat_adj(n.b, H.rows(), H.cols()) += A.multiply(g);
        }
        if (needed[n.a]) {
          Vector& ga = vec_adj(n.a, A.nnz());
          for (int i = 0; i < A.node_count; ++i)
            for (int e = A.row_ptr[i]; e < A.row_ptr[i + 1]; ++e)
              ga[e] += g.row(i).dot(H.row(A.col[e]));
        }
        break;
      }
      case Op::kMatmul: {
        const auto& g = std::get<Matrix>(adj[n.out]);
        const auto& A = std::get<Matrix>(slots_[n.a].value);
        const auto& B = std::get<Matrix>(slots_[n.b].value);
        if (needed[n.a]) mat_adj(n.a, A.rows(), A.cols()) += g * B.transpose();
        if (needed[n.b]) mat_adj(n.b, B.rows(), B.cols()) += A.transpose() * g;
        break;
      }
      case Op::kRelu: {
        if (!needed[n.a]) break;
        if (std::holds_alternative<Matrix>(slots_[n.a].value)) {
          const auto& g = std::get<Matrix>(adj[n.out]);
          const auto& x = std::get<Matrix>(slots_[n.a].value);
          mat_adj(n.a, x.rows(), x.cols()) +=
              (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
        } else {
          const auto& g = std::get<Vector>(adj[n.out]);
          const auto& x = std::get<Vector>(slots_[n.a].value);
          vec_adj(n.a, x.size()) +=
              (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
        }
        break;
      }
      case Op::kSigmoid: {
        if (!needed[n.a]) break;
        if (std::holds_alternative<Matrix>(slots_[n.a].value)) {
          const auto& g = std::get<Matrix>(adj[n.out]);
          const auto& y = std::get<Matrix>(slots_[n.out].value);
          mat_adj(n.a, y.rows(), y.cols()).array() +=
              g.array() * y.array() * (1.0 - y.array());
        } else {
          const auto& g = std::get<Vector>(adj[n.out]);
          const auto& y = std::get<Vector>(slots_[n.out].value);
          vec_adj(n.a, y.size()).array() +=
              g.array() * y.array() * (1.0 - y.array());
        }
        break;
      }
      case Op::kClamp: {
        if (!needed[n.a]) break;
        if (std::holds_alternative<Matrix>(slots_[n.a].value)) {
          const auto& g = std::get<Matrix>(adj[n.out]);
          const auto& x = std::get<Matrix>(slots_[n.a].value);
          mat_adj(n.a, x.rows(), x.cols()).array() +=
              g.array() * (x.array() > n.c0 && x.array() < n.c1).cast<double>();
        } else {
          const auto& g = std::get<Vector>(adj[n.out]);
          const auto& x = std::get<Vector>(slots_[n.a].value);
          vec_adj(n.a, x.size()).array() +=
              g.array() * (x.array() > n.c0 && x.array() < n.c1).cast<double>();
        }
        break;
      }
      case Op::kCosinePair: {
        if (!needed[n.a]) break;
        const double g = grad_scalar(n.out);
        const auto& Z = std::get<Matrix>(slots_[n.a].value);
        const double y = std::get<double>(slots_[n.out].value);
        const double ni = Z.row(n.i).norm();
        const double nj = Z.row(n.j).norm();
        Matrix& gz = mat_adj(n.a, Z.rows(), Z.cols());
        gz.row(n.i) +=
            g * (Z.row(n.j) / (ni * nj) - y * Z.row(n.i) / (ni * ni));
        gz.row(n.j) +=
            g * (Z.row(n.i) / (ni * nj) - y * Z.row(n.j) / (nj * nj));
        break;
      }
      case Op::kPairInner: {
        if (!needed[n.a]) break;
        const auto& g = std::get<Vector>(adj[n.out]);
        const auto& Z = std::get<Matrix>(slots_[n.a].value);
        Matrix& gz = mat_adj(n.a, Z.rows(), Z.cols());
        for (std::size_t p = 0; p < n.pairs.size(); ++p) {
          const auto& [u, v] = n.pairs[p];
          gz.row(u) += g[static_cast<Eigen::Index>(p)] * Z.row(v);
          gz.row(v) += g[static_cast<Eigen::Index>(p)] * Z.row(u);
        }
        break;
      }
      case Op::kBce: {
        if (!needed[n.a]) break;
        const double g = grad_scalar(n.out);
        const auto& x = std::get<Vector>(slots_[n.a].value);
        Vector& gx = vec_adj(n.a, x.size());
        const double scale = g / static_cast<double>(x.size());
        for (Eigen::Index p = 0; p < x.size(); ++p) {
          if (x[p] <= -n.c0 || x[p] >= n.c0) continue;
          gx[p] += scale * (sigmoid_scalar(x[p]) - n.targets[p]);
        }
        break;
      }
      case Op::kKlNormal: {
        const double g = grad_scalar(n.out);
        const auto& m = std::get<Matrix>(slots_[n.a].value);
        const auto& lv = std::get<Matrix>(slots_[n.b].value);
        const double inv_n = 1.0 / static_cast<double>(m.rows());
        if (needed[n.a])
          mat_adj(n.a, m.rows(), m.cols()).array() += g * inv_n * m.array();
        if (needed[n.b])
          mat_adj(n.b, lv.rows(), lv.cols()).array() +=
              g * (-0.5 * inv_n) * (1.0 - lv.array().exp());
        break;
      }
      case Op::kGaussReparam: {
        const auto& g = std::get<Matrix>(adj[n.out]);
        const auto& lv = std::get<Matrix>(slots_[n.b].value);
        if (needed[n.a]) mat_adj(n.a, g.rows(), g.cols()) += g;
        if (needed[n.b])
          mat_adj(n.b, g.rows(), g.cols()).array() +=
              g.array() * n.noise.array() * 0.5 * (0.5 * lv.array()).exp();
        break;
      }
      case Op::kMean: {
        if (!needed[n.a]) break;
        const double g = grad_scalar(n.out);
        const auto& x = std::get<Vector>(slots_[n.a].value);
        vec_adj(n.a, x.size()).array() += g / static_cast<double>(x.size());
        break;
      }
      case Op::kEntropyMean: {
        if (!needed[n.a]) break;
        const double g = grad_scalar(n.out);
        const auto& t = std::get<Vector>(slots_[n.a].value);
        Vector& gt = vec_adj(n.a, t.size());
        const double scale = g / static_cast<double>(t.size());
        for (Eigen::Index p = 0; p < t.size(); ++p) {
          const double s = sigmoid_scalar(t[p]);
          gt[p] += scale * (-t[p] * s * (1.0 - s));
        }
        break;
      }
      case Op::kSub: {
        const double g = grad_scalar(n.out);
        add_scalar(n.a, g);
        add_scalar(n.b, -g);
        break;
      }
      case Op::kSquare: {
        const double g = grad_scalar(n.out);
        add_scalar(n.a, g * 2.0 * std::get<double>(slots_[n.a].value));
        break;
      }
      case Op::kAddScaled: {
        const double g = grad_scalar(n.out);
        add_scalar(n.a, g);
        add_scalar(n.b, g * n.c0);
        break;
      }
    }
  }

  GradientMap result;
  for (int s = 0; s < ns; ++s) {
    if (!slots_[s].tracked) continue;
    if (std::holds_alternative<Vector>(adj[s])) {
      result.grads_[s] = std::get<Vector>(std::move(adj[s]));
    } else if (std::holds_alternative<Matrix>(adj[s])) {
      result.grads_[s] = std::get<Matrix>(std::move(adj[s]));
    } else if (std::holds_alternative<Vector>(slots_[s].value)) {
      result.grads_[s] =
          Vector(Vector::Zero(std::get<Vector>(slots_[s].value).size()));
    } else if (std::holds_alternative<Matrix>(slots_[s].value)) {
      const auto& m = std::get<Matrix>(slots_[s].value);
      result.grads_[s] = Matrix(Matrix::Zero(m.rows(), m.cols()));
    }
  }
  return result;
}

namespace {

template <typename Tensor>
double finite_diff_impl(const std::function<SlotId(Tape&, SlotId)>& build,
                        const Tensor& x0, double h) {
  if (!(h > 0.0)) throw ValidationError("finite difference step must be positive");

  Tape tape;
  const SlotId in = tape.input(x0);
  const SlotId out = build(tape, in);
  const GradientMap grads = tape.backward(out);

  auto value_at = [&](const Tensor& x) {
    Tape t;
    const SlotId s = t.input(x);
    return t.scalar(build(t, s));
  };

  double worst = 0.0;
  Tensor x = x0;
  for (Eigen::Index k = 0; k < x0.size(); ++k) {
    const double saved = x(k);
    x(k) = saved + h;
    const double up = value_at(x);
    x(k) = saved - h;
    const double down = value_at(x);
    x(k) = saved;
    const double central = (up - down) / (2.0 * h);
    double analytic;
    if constexpr (std::is_same_v<Tensor, Vector>)
      analytic = grads.vector(in)(k);
    else
      analytic = grads.matrix(in)(k);
    const double denom =
        std::max({std::abs(analytic), std::abs(central), 1e-12});
    worst = std::max(worst, std::abs(analytic - central) / denom);
  }
  return worst;
}

}  // namespace

double finite_diff_check(const std::function<SlotId(Tape&, SlotId)>& build,
                         const Vector& x0, double h) {
  return finite_diff_impl(build, x0, h);
}

double finite_diff_check(const std::function<SlotId(Tape&, SlotId)>& build,
                         const Matrix& x0, double h) {
  return finite_diff_impl(build, x0, h);
}

}  // namespace simex
