#pragma once

// Cross-attention binary classifier. Trajectory tokens [x(t), t/T] give the
// queries; the concept embeddings give keys and values. The attention matrix
// is averaged over time into one weight per concept, the attended values are
// pooled into a context vector, and a ReLU MLP maps it to a probability.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecats/error.hpp"
#include "ecats/random.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::classifier {

struct Architecture {
  std::size_t input_dims = 1;  // signal dimensions n; tokens have n + 1 features
  std::size_t embed_dim = 1;   // concept embedding dimension d
  std::size_t d_att = 32;
  std::size_t hidden = 64;

  std::size_t token_dims() const noexcept { return input_dims + 1; }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ModelParams {
  Architecture arch;
  Eigen::MatrixXd wq;  // (n+1) x d_att
  Eigen::MatrixXd wk;  // d x d_att
  Eigen::MatrixXd wv;  // d x d_att
  Eigen::MatrixXd w1;  // h x d_att
  Eigen::MatrixXd b1;  // h x 1
  Eigen::MatrixXd w2;  // h x 1
  Eigen::MatrixXd b2;  // 1 x 1

  static constexpr std::array<const char*, 7> names = {"wq", "wk", "wv", "w1", "b1", "w2", "b2"};

  std::array<Eigen::MatrixXd*, 7> tensors() { return {&wq, &wk, &wv, &w1, &b1, &w2, &b2}; }
  std::array<const Eigen::MatrixXd*, 7> tensors() const { return {&wq, &wk, &wv, &w1, &b1, &w2, &b2}; }

  static ModelParams zeros(const Architecture& a) {
    const auto n = static_cast<Eigen::Index>(a.token_dims()), d = static_cast<Eigen::Index>(a.embed_dim),
               k = static_cast<Eigen::Index>(a.d_att), h = static_cast<Eigen::Index>(a.hidden);
    return {a,
            Eigen::MatrixXd::Zero(n, k),
            Eigen::MatrixXd::Zero(d, k),
            Eigen::MatrixXd::Zero(d, k),
            Eigen::MatrixXd::Zero(h, k),
            Eigen::MatrixXd::Zero(h, 1),
            Eigen::MatrixXd::Zero(h, 1),
            Eigen::MatrixXd::Zero(1, 1)};
  }

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static ModelParams init(const Architecture& a, std::uint64_t seed) {
    if (a.input_dims < 1 || a.embed_dim < 1 || a.d_att < 1 || a.hidden < 1)
      throw ConfigError("classifier: every layer size must be >= 1");
    ModelParams p = zeros(a);
    Rng rng = make_rng(seed, "init");
    auto fill = [&](Eigen::MatrixXd& m, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    };
    fill(p.wq, a.token_dims());
    fill(p.wk, a.embed_dim);
    fill(p.wv, a.embed_dim);
    fill(p.w1, a.d_att);
    fill(p.w2, a.hidden);
    return p;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (!(a.arch == b.arch)) return false;
    const auto ta = a.tensors(), tb = b.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i)
      if (ta[i]->rows() != tb[i]->rows() || ta[i]->cols() != tb[i]->cols() || *ta[i] != *tb[i]) return false;
    return true;
  }
};

/// Query tokens [x(t), t/T], one row per time step.
inline Eigen::MatrixXd tokens(const Trajectory& xi) {
  const auto T = static_cast<Eigen::Index>(xi.length());
  const auto n = static_cast<Eigen::Index>(xi.dims());
  Eigen::MatrixXd x(T, n + 1);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) x(t, i) = xi.at(static_cast<std::size_t>(t), static_cast<std::size_t>(i));
    x(t, n) = static_cast<double>(t) / static_cast<double>(T);
  }
  return x;
}

/// Everything the backward pass needs from one forward evaluation.
struct ForwardCache {
  Eigen::MatrixXd x;         // T x (n+1)
  Eigen::MatrixXd q;         // T x d_att
  Eigen::MatrixXd attention; // T x C, row-stochastic
  Eigen::VectorXd alpha;     // C, column mean of attention
  Eigen::VectorXd context;   // d_att
  Eigen::VectorXd z1;        // h, pre-activation
  Eigen::VectorXd h1;        // h
  double logit = 0.0;
  double p = 0.5;
};

namespace detail {

inline void check_shapes(const ModelParams& m, const Trajectory& xi, const Eigen::MatrixXd& embeddings) {
  if (xi.dims() != m.arch.input_dims)
    throw ShapeError("classifier: trajectory has " + std::to_string(xi.dims()) + " dimension(s), model expects " +
                     std::to_string(m.arch.input_dims));
  if (static_cast<std::size_t>(embeddings.cols()) != m.arch.embed_dim)
    throw ShapeError("classifier: concept embeddings have dimension " + std::to_string(embeddings.cols()) +
                     ", model expects " + std::to_string(m.arch.embed_dim));
  if (embeddings.rows() < 1) throw ShapeError("classifier: empty concept bank");
}

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace detail

/// Keys and values for a bank, shared across a batch.
struct KeyValues {
  Eigen::MatrixXd k;  // C x d_att
  Eigen::MatrixXd v;  // C x d_att
};

inline KeyValues key_values(const ModelParams& m, const Eigen::MatrixXd& embeddings) {
  return {embeddings * m.wk, embeddings * m.wv};
}

inline ForwardCache forward_kv(const ModelParams& m, const Trajectory& xi, const KeyValues& kv) {
  ForwardCache c;
  c.x = tokens(xi);
  c.q = c.x * m.wq;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m.arch.d_att));
  c.attention = (c.q * kv.k.transpose()) * scale;
  for (Eigen::Index t = 0; t < c.attention.rows(); ++t) {
    auto row = c.attention.row(t);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  c.alpha = c.attention.colwise().mean().transpose();
  c.context = kv.v.transpose() * c.alpha;
  c.z1 = m.w1 * c.context + m.b1.col(0);
  c.h1 = c.z1.cwiseMax(0.0);
  c.logit = m.w2.col(0).dot(c.h1) + m.b2(0, 0);
  c.p = detail::sigmoid(c.logit);
  return c;
}

/// Probability of class 1 and the cached intermediates (alpha is the attention record).
inline ForwardCache forward(const ModelParams& m, const Trajectory& xi, const Eigen::MatrixXd& embeddings) {
  detail::check_shapes(m, xi, embeddings);
  return forward_kv(m, xi, key_values(m, embeddings));
}

inline constexpr double kProbClamp = 1e-12;

inline double loss_bce(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

inline double loss_bce(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size() || p.empty()) throw ShapeError("loss_bce: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += loss_bce(p[i], y[i]);
  return s / static_cast<double>(p.size());
}

/// Mean BCE of a batch and its gradient with respect to every parameter.
struct LossAndGrad {
  double loss = 0.0;
  ModelParams grad;
};

inline LossAndGrad loss_and_grad(const ModelParams& m, std::span<const Trajectory> batch, std::span<const int> labels,
                                 const Eigen::MatrixXd& embeddings) {
  if (batch.empty() || batch.size() != labels.size()) throw ShapeError("backward: batch and labels differ in size");
  for (const auto& xi : batch) detail::check_shapes(m, xi, embeddings);
  LossAndGrad out{0.0, ModelParams::zeros(m.arch)};
  auto& g = out.grad;
  const KeyValues kv = key_values(m, embeddings);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(m.arch.d_att));
  Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(kv.k.rows(), kv.k.cols());
  Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(kv.v.rows(), kv.v.cols());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const ForwardCache c = forward_kv(m, batch[s], kv);
    const int y = labels[s];
    out.loss += loss_bce(c.p, y) * inv_n;
    // The clamp is flat outside [eps, 1 - eps].
    const bool clamped = c.p < kProbClamp || c.p > 1.0 - kProbClamp;
    const double dlogit = clamped ? 0.0 : (c.p - y) * inv_n;
    g.w2.col(0) += dlogit * c.h1;
    g.b2(0, 0) += dlogit;
    const Eigen::VectorXd dz1 = (dlogit * m.w2.col(0)).cwiseProduct((c.z1.array() > 0.0).cast<double>().matrix());
    g.w1 += dz1 * c.context.transpose();
    g.b1.col(0) += dz1;
    const Eigen::VectorXd dctx = m.w1.transpose() * dz1;
    dv += c.alpha * dctx.transpose();
    const Eigen::VectorXd dalpha = kv.v * dctx;
    const double inv_t = 1.0 / static_cast<double>(c.attention.rows());
    Eigen::MatrixXd ds(c.attention.rows(), c.attention.cols());
    for (Eigen::Index t = 0; t < ds.rows(); ++t) {
      const auto a = c.attention.row(t);
      const double dot = a.dot(dalpha.transpose()) * inv_t;
      ds.row(t) = a.array() * (dalpha.transpose().array() * inv_t - dot);
    }
    ds *= scale;
    g.wq += c.x.transpose() * (ds * kv.k);
    dk += ds.transpose() * c.q;
  }
  g.wk = embeddings.transpose() * dk;
  g.wv = embeddings.transpose() * dv;
  const auto ts = g.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (!ts[i]->allFinite()) throw EvalError(std::string("non-finite gradient in ") + ModelParams::names[i]);
  return out;
}

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-5;
  std::size_t batch_size = 32;
  Optimizer optimizer = Optimizer::Adam;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t d_att = 32;
  std::size_t hidden = 64;

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean BCE over the training set after the epoch
  double accuracy = 0.0;
};

struct Prediction {
  int label = 0;
  double probability = 0.5;
  Eigen::VectorXd attention;  // pooled alpha over the concepts
};

/// Label 1 iff p >= 0.5.
inline std::vector<Prediction> predict(const ModelParams& m, std::span<const Trajectory> set,
                                       const Eigen::MatrixXd& embeddings) {
  std::vector<Prediction> out;
  if (set.empty()) return out;
  detail::check_shapes(m, set.front(), embeddings);
  const KeyValues kv = key_values(m, embeddings);
  for (const auto& xi : set) {
    detail::check_shapes(m, xi, embeddings);
    const auto c = forward_kv(m, xi, kv);
    out.push_back({c.p >= 0.5 ? 1 : 0, c.p, c.alpha});
  }
  return out;
}

inline double accuracy(std::span<const Prediction> pred, std::span<const int> labels) {
  if (pred.size() != labels.size() || pred.empty()) throw ShapeError("accuracy: size mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i].label == labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

/// Mini-batch training on shuffled batches; deterministic per seed.
inline TrainResult train(const LabeledSet& data, const Eigen::MatrixXd& embeddings, const TrainConfig& cfg,
                         std::uint64_t seed, const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("train: empty training set");
  if (log && (data.count(0) == 0 || data.count(1) == 0)) log("warning: training set has a single class");
  const Architecture arch{data.trajectories.front().dims(), static_cast<std::size_t>(embeddings.cols()), cfg.d_att,
                          cfg.hidden};
  TrainResult r{ModelParams::init(arch, seed), {}};
  ModelParams m1 = ModelParams::zeros(arch), m2 = ModelParams::zeros(arch);
  Rng rng = make_rng(seed, "batches");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Trajectory> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data.trajectories[order[i]]);
        labels.push_back(data.labels[order[i]]);
      }
      const auto lg = loss_and_grad(r.params, batch, labels, embeddings);
      ++step;
      auto p = r.params.tensors();
      const auto g = lg.grad.tensors();
      auto a = m1.tensors(), b = m2.tensors();
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (cfg.optimizer == Optimizer::Sgd) {
          *p[k] -= cfg.learning_rate * *g[k];
          continue;
        }
        *a[k] = cfg.beta1 * *a[k] + (1.0 - cfg.beta1) * *g[k];
        *b[k] = cfg.beta2 * *b[k] + (1.0 - cfg.beta2) * g[k]->cwiseAbs2();
        p[k]->array() -= cfg.learning_rate * (a[k]->array() / c1) / ((b[k]->array() / c2).sqrt() + cfg.eps);
      }
    }
    const auto pred = predict(r.params, data.trajectories, embeddings);
    std::vector<double> probs;
    for (const auto& q : pred) probs.push_back(q.probability);
    r.history.push_back({epoch, loss_bce(probs, data.labels), accuracy(pred, data.labels)});
  }
  return r;
}

}  // namespace ecats::classifier
