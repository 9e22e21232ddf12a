#pragma once

// Synthetic stand-ins for the two benchmark scenarios: a one-dimensional
// cruise-control speed signal whose anomalies dip below the operating band,
// and a two-dimensional vessel route whose anomalies either drift out of the
// lane or stall.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ecats/error.hpp"
#include "ecats/random.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::datasets {

struct CruiseConfig {
  std::size_t n_traj = 200;
  std::size_t length = 48;
  double band_min = 22.0;  // regular trajectories never go below
  double band_max = 42.0;
  double base_lo = 27.0, base_hi = 35.0;
  double amplitude_lo = 1.0, amplitude_hi = 4.0;
  double period_lo = 8.0, period_hi = 20.0;
  double noise = 0.4;
  double dip_depth_lo = 3.0, dip_depth_hi = 7.0;  // how far below band_min the dip bottoms out
  std::size_t dip_onset_lo = 6, dip_onset_hi = 30;
  std::size_t dip_width_lo = 6, dip_width_hi = 14;  // rounded to even widths
  std::size_t outliers = 7;

  void validate() const {
    if (n_traj < 2) throw ConfigError("cruise: need at least 2 trajectories");
    if (length < 8) throw ConfigError("cruise: length must be >= 8");
    if (!(band_min < base_lo - amplitude_hi && base_hi + amplitude_hi < band_max))
      throw ConfigError("cruise: oscillations must fit inside the band");
    if (base_lo > base_hi || amplitude_lo > amplitude_hi || period_lo > period_hi || dip_depth_lo > dip_depth_hi ||
        dip_onset_lo > dip_onset_hi || (dip_width_lo + 1) / 2 > dip_width_hi / 2 || dip_width_hi < 2)
      throw ConfigError("cruise: every range needs lo <= hi");
    if (!(period_lo > 0) || !(noise >= 0) || !(dip_depth_lo > 0)) throw ConfigError("cruise: invalid shape parameter");
    if (dip_onset_hi + dip_width_hi >= length) throw ConfigError("cruise: dip window exceeds the trajectory");
    if (outliers > n_traj) throw ConfigError("cruise: more outliers than trajectories");
  }
};

/// A generated set with its construction flags.
struct Generated {
  LabeledSet set;
  std::vector<bool> outlier;
  std::vector<int> mode;  // 0 regular, 1.. anomaly mode
};

/// Label 1 marks an anomaly. Trajectories alternate 0/1 so classes are
/// balanced (an extra regular one when n_traj is odd). Outliers are spread
/// evenly over the set: regular ones get a shallow dip just below band_min,
/// anomalous ones a dip that stops just above it.
inline Generated gen_cruise(const CruiseConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Generated g;
  std::vector<bool> is_outlier(cfg.n_traj, false);
  for (std::size_t i = 0; i < cfg.outliers; ++i) is_outlier[i * cfg.n_traj / cfg.outliers] = true;
  for (std::size_t k = 0; k < cfg.n_traj; ++k) {
    Rng rng = make_rng(seed, "cruise", k);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
    auto uniform_int = [&](std::size_t lo, std::size_t hi) {
      return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::normal_distribution<double> noise(0.0, cfg.noise);

    const int label = static_cast<int>(k % 2);
    const bool outlier = is_outlier[k];
    const double base = uniform(cfg.base_lo, cfg.base_hi);
    const double amplitude = uniform(cfg.amplitude_lo, cfg.amplitude_hi);
    const double period = uniform(cfg.period_lo, cfg.period_hi);
    const double phase = uniform(0.0, 2.0 * std::numbers::pi);
    const std::size_t onset = uniform_int(cfg.dip_onset_lo, cfg.dip_onset_hi);
    const std::size_t width = 2 * uniform_int((cfg.dip_width_lo + 1) / 2, cfg.dip_width_hi / 2);
    double bottom = cfg.band_min - uniform(cfg.dip_depth_lo, cfg.dip_depth_hi);
    if (outlier) bottom = label == 1 ? cfg.band_min + uniform(0.3, 1.0) : cfg.band_min - uniform(0.3, 1.0);
    const bool dips = label == 1 || outlier;

    Trajectory xi(cfg.length, 1);
    const double margin = cfg.band_min + 0.1;
    for (std::size_t t = 0; t < cfg.length; ++t) {
      double x = base + amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase) + noise(rng);
      x = std::clamp(x, margin, cfg.band_max);
      if (dips && t >= onset && t <= onset + width) {
        // Raised-cosine blend towards the bottom level, reached mid-window (width is even).
        const double s = static_cast<double>(t - onset) / static_cast<double>(width);
        const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * s);
        x = 2 * (t - onset) == width ? bottom : (1.0 - w) * x + w * bottom;
      }
      xi.at(t, 0) = x;
    }
    char id[32];
    std::snprintf(id, sizeof id, "cruise_%03zu", k);
    g.set.push_back(std::move(xi), label, id);
    g.outlier.push_back(outlier);
    g.mode.push_back(label);
  }
  return g;
}

struct MaritimeConfig {
  std::size_t n_traj = 2000;
  std::size_t length = 48;
  /// Route as (x0, x1) waypoints, traversed at constant speed.
  std::vector<std::pair<double, double>> waypoints = {{0.0, 0.0}, {6.0, 2.0}, {12.0, 2.0}, {18.0, 0.0}};
  double lane_noise = 0.15;    // lateral jitter of regular vessels
  double start_jitter = 0.3;
  double drift_lo = 1.5, drift_hi = 3.0;  // mode 1: lateral excursion out of the lane (x1)
  double stall_lo = 0.35, stall_hi = 0.6; // mode 2: fraction of the trip spent stopped (x0 lags)

  void validate() const {
    if (n_traj < 2) throw ConfigError("maritime: need at least 2 trajectories");
    if (length < 8) throw ConfigError("maritime: length must be >= 8");
    if (waypoints.size() < 2) throw ConfigError("maritime: need at least two waypoints");
    if (drift_lo > drift_hi || stall_lo > stall_hi || !(stall_hi < 1.0) || !(lane_noise >= 0))
      throw ConfigError("maritime: invalid deviation parameters");
  }
};

namespace detail {

// Point at arc-length fraction s in [0, 1] along a polyline.
inline std::pair<double, double> along(const std::vector<std::pair<double, double>>& w, double s) {
  std::vector<double> cum = {0.0};
  for (std::size_t i = 1; i < w.size(); ++i)
    cum.push_back(cum.back() + std::hypot(w[i].first - w[i - 1].first, w[i].second - w[i - 1].second));
  const double target = std::clamp(s, 0.0, 1.0) * cum.back();
  std::size_t i = 1;
  while (i + 1 < w.size() && cum[i] < target) ++i;
  const double seg = cum[i] - cum[i - 1];
  const double f = seg > 0 ? (target - cum[i - 1]) / seg : 0.0;
  return {w[i - 1].first + f * (w[i].first - w[i - 1].first), w[i - 1].second + f * (w[i].second - w[i - 1].second)};
}

}  // namespace detail

/// Regular vessels follow the route with small lateral noise. Anomalies
/// alternate between mode 1 (a lateral drift out of the lane over part of
/// the trip) and mode 2 (a stop midway, so the vessel falls behind).
inline Generated gen_maritime(const MaritimeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Generated g;
  std::size_t anomalies = 0;
  for (std::size_t k = 0; k < cfg.n_traj; ++k) {
    Rng rng = make_rng(seed, "maritime", k);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
    std::normal_distribution<double> lane(0.0, cfg.lane_noise);
    const int label = static_cast<int>(k % 2);
    const int mode = label == 0 ? 0 : static_cast<int>(anomalies++ % 2) + 1;

    const double dx = uniform(-cfg.start_jitter, cfg.start_jitter);
    const double dy = uniform(-cfg.start_jitter, cfg.start_jitter);
    const double drift = uniform(cfg.drift_lo, cfg.drift_hi) * (u01(rng) < 0.5 ? -1.0 : 1.0);
    const double drift_start = uniform(0.2, 0.5), drift_len = uniform(0.25, 0.4);
    const double stall = uniform(cfg.stall_lo, cfg.stall_hi), stall_at = uniform(0.2, 0.4);

    Trajectory xi(cfg.length, 2);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      const double tau = static_cast<double>(t) / static_cast<double>(cfg.length - 1);
      double s = tau;
      if (mode == 2) {
        // Time-warp: progress freezes for `stall` of the trip, then resumes at the same speed.
        s = tau < stall_at ? tau : (tau < stall_at + stall ? stall_at : tau - stall);
      }
      auto [x0, x1] = detail::along(cfg.waypoints, s);
      x0 += dx;
      x1 += dy + lane(rng);
      if (mode == 1 && tau >= drift_start && tau <= drift_start + drift_len) {
        const double f = (tau - drift_start) / drift_len;
        x1 += drift * std::sin(std::numbers::pi * f);
      }
      xi.at(t, 0) = x0;
      xi.at(t, 1) = x1;
    }
    char id[32];
    std::snprintf(id, sizeof id, "maritime_%04zu", k);
    g.set.push_back(std::move(xi), label, id);
    g.outlier.push_back(false);
    g.mode.push_back(mode);
  }
  return g;
}

}  // namespace ecats::datasets
