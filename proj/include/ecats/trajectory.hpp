#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ecats/error.hpp"
#include "ecats/random.hpp"

namespace ecats {

/// Uniformly sampled multivariate signal. Values are stored time-major:
/// `at(t, i)` is dimension i at sample t.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::size_t length, std::size_t dims, double dt = 1.0, double t0 = 0.0)
      : length_(length), dims_(dims), dt_(dt), t0_(t0), values_(length * dims, 0.0) {
    if (length < 2) throw ConfigError("trajectory needs at least 2 samples");
    if (dims < 1) throw ConfigError("trajectory needs at least 1 dimension");
    if (!(dt > 0.0)) throw ConfigError("trajectory sampling step must be positive");
  }

  /// One-dimensional trajectory from a list of samples.
  static Trajectory from_values(std::span<const double> xs, double dt = 1.0, double t0 = 0.0) {
    Trajectory out(xs.size(), 1, dt, t0);
    std::copy(xs.begin(), xs.end(), out.values_.begin());
    return out;
  }
  static Trajectory from_values(std::initializer_list<double> xs, double dt = 1.0, double t0 = 0.0) {
    return from_values(std::span<const double>(xs.begin(), xs.size()), dt, t0);
  }

  std::size_t length() const noexcept { return length_; }
  std::size_t dims() const noexcept { return dims_; }
  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  double time(std::size_t t) const noexcept { return t0_ + dt_ * static_cast<double>(t); }

  double at(std::size_t t, std::size_t i) const noexcept { return values_[t * dims_ + i]; }
  double& at(std::size_t t, std::size_t i) noexcept { return values_[t * dims_ + i]; }

  std::span<const double> sample(std::size_t t) const noexcept {
    return {values_.data() + t * dims_, dims_};
  }
  const std::vector<double>& values() const noexcept { return values_; }

  std::vector<double> channel(std::size_t i) const {
    std::vector<double> out(length_);
    for (std::size_t t = 0; t < length_; ++t) out[t] = at(t, i);
    return out;
  }

  bool finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::size_t length_ = 0;
  std::size_t dims_ = 0;
  double dt_ = 1.0;
  double t0_ = 0.0;
  std::vector<double> values_;
};

/// Trajectories with binary labels: 0 = regular, 1 = anomalous.
struct LabeledSet {
  std::vector<Trajectory> trajectories;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return trajectories.size(); }
  bool empty() const noexcept { return trajectories.empty(); }

  void push_back(Trajectory xi, int label, std::string id = {}) {
    if (id.empty()) id = std::to_string(trajectories.size());
    trajectories.push_back(std::move(xi));
    labels.push_back(label);
    ids.push_back(std::move(id));
  }

  /// Throws unless sizes agree, labels are binary, and all trajectories share shape and step.
  void validate() const {
    if (labels.size() != trajectories.size() || ids.size() != trajectories.size())
      throw ShapeError("labeled set: trajectories, labels and ids differ in length");
    for (std::size_t k = 0; k < size(); ++k) {
      if (labels[k] != 0 && labels[k] != 1) throw ShapeError("labeled set: labels must be 0 or 1");
      const auto& a = trajectories[k];
      const auto& b = trajectories.front();
      if (a.length() != b.length() || a.dims() != b.dims() || std::abs(a.dt() - b.dt()) > 1e-9 * b.dt())
        throw ShapeError("labeled set: trajectories differ in length, dimension or step");
      if (!a.finite()) throw ShapeError("labeled set: non-finite value in trajectory " + ids[k]);
    }
  }

  LabeledSet subset(std::span<const std::size_t> idx) const {
    LabeledSet out;
    for (auto k : idx) out.push_back(trajectories.at(k), labels.at(k), ids.at(k));
    return out;
  }

  std::vector<Trajectory> of_class(int label) const {
    std::vector<Trajectory> out;
    for (std::size_t k = 0; k < size(); ++k)
      if (labels[k] == label) out.push_back(trajectories[k]);
    return out;
  }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }

  friend bool operator==(const LabeledSet&, const LabeledSet&) = default;
};

/// Parameters of the piecewise-linear trajectory measure.
struct Mu0Params {
  double a = 0.0;
  double b = 100.0;
  double delta = 1.0;
  double m_start = 0.0;
  double sigma_start = 1.0;
  double m_tv = 0.0;
  double sigma_tv = 1.0;
  double q = 0.1;
  std::size_t n_dims = 1;

  void validate() const {
    if (!(b > a)) throw ConfigError("mu0: need b > a");
    if (!(delta > 0)) throw ConfigError("mu0: need delta > 0");
    if (!(sigma_start > 0) || !(sigma_tv > 0)) throw ConfigError("mu0: standard deviations must be positive");
    if (!(q >= 0 && q <= 1)) throw ConfigError("mu0: q must lie in [0, 1]");
    if (n_dims < 1) throw ConfigError("mu0: n_dims must be >= 1");
    if (steps() < 1) throw ConfigError("mu0: (b - a) / delta must be >= 1");
  }

  /// Number of linear segments; the trajectory has steps() + 1 samples.
  std::size_t steps() const { return static_cast<std::size_t>(std::floor((b - a) / delta + 1e-9)); }

  friend bool operator==(const Mu0Params&, const Mu0Params&) = default;
};

/// Draws one trajectory. Each dimension: start ~ N(m', s'), total variation
/// K ~ N(m'', s'')^2 split at sorted uniform breakpoints, slope sign flipping
/// with probability q at every step.
inline Trajectory sample_mu0(const Mu0Params& p, Rng& rng) {
  p.validate();
  const std::size_t n = p.steps();
  Trajectory xi(n + 1, p.n_dims, p.delta, p.a);
  std::normal_distribution<double> start(p.m_start, p.sigma_start);
  std::normal_distribution<double> tv(p.m_tv, p.sigma_tv);
  std::bernoulli_distribution flip(p.q);
  std::vector<double> y(n + 1);
  for (std::size_t d = 0; d < p.n_dims; ++d) {
    xi.at(0, d) = start(rng);
    const double g = tv(rng);
    const double k = g * g;
    std::uniform_real_distribution<double> uni(0.0, k);
    y[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) y[i] = uni(rng);
    y[n] = k;
    std::sort(y.begin() + 1, y.begin() + static_cast<std::ptrdiff_t>(n));
    double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (flip(rng)) sign = -sign;
      xi.at(i + 1, d) = xi.at(i, d) + sign * (y[i + 1] - y[i]);
    }
  }
  return xi;
}

inline Trajectory sample_mu0(const Mu0Params& p, std::uint64_t seed) {
  Rng rng = make_rng(seed, "mu0");
  return sample_mu0(p, rng);
}

/// `count` independent trajectories; trajectory k uses the stream (seed, k).
inline std::vector<Trajectory> sample_mu0_batch(const Mu0Params& p, std::size_t count, std::uint64_t seed) {
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = make_rng(seed, "mu0", k);
    out.push_back(sample_mu0(p, rng));
  }
  return out;
}

/// Per-dimension affine normalization (x - mean) / scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(std::span<const Trajectory> data) {
    if (data.empty()) throw ConfigError("standardizer: no trajectories");
    const std::size_t n = data.front().dims();
    Standardizer s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> sq(n, 0.0);
    double count = 0;
    for (const auto& xi : data) {
      for (std::size_t t = 0; t < xi.length(); ++t)
        for (std::size_t i = 0; i < n; ++i) {
          s.mean[i] += xi.at(t, i);
          sq[i] += xi.at(t, i) * xi.at(t, i);
        }
      count += static_cast<double>(xi.length());
    }
    for (std::size_t i = 0; i < n; ++i) {
      s.mean[i] /= count;
      const double var = sq[i] / count - s.mean[i] * s.mean[i];
      s.scale[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  static Standardizer identity(std::size_t dims) {
    return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
  }

  Trajectory apply(const Trajectory& xi) const {
    if (xi.dims() != mean.size()) throw ShapeError("standardizer: dimension mismatch");
    Trajectory out = xi;
    for (std::size_t t = 0; t < xi.length(); ++t)
      for (std::size_t i = 0; i < xi.dims(); ++i) out.at(t, i) = (xi.at(t, i) - mean[i]) / scale[i];
    return out;
  }

  LabeledSet apply(const LabeledSet& set) const {
    LabeledSet out = set;
    for (auto& xi : out.trajectories) xi = apply(xi);
    return out;
  }

  double to_raw(std::size_t dim, double v) const { return mean.at(dim) + scale.at(dim) * v; }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

}  // namespace ecats
