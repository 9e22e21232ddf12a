#pragma once

// Glue shared by the command-line tool and the end-to-end tests: stratified
// splitting, standardization, bank configuration from data, and multi-seed
// training/evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ecats/classifier.hpp"
#include "ecats/concepts.hpp"
#include "ecats/error.hpp"
#include "ecats/random.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::pipeline {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class shuffle; round(test_fraction * n_class) of each class go to test.
inline Split stratified_split(const std::vector<int>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0 && test_fraction < 1)) throw ConfigError("split: test fraction must lie in [0, 1)");
  std::vector<int> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  Split s;
  for (int c : classes) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    Rng rng = make_rng(seed, "split", static_cast<std::uint64_t>(c));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(idx.size())));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Bank settings matched to a dataset: one variable slot per signal
/// dimension and a mu0 horizon equal to the trajectory length.
inline concepts::BankConfig bank_config_for(const LabeledSet& data, concepts::BankConfig cfg) {
  data.validate();
  const Trajectory& xi = data.trajectories.front();
  cfg.max_vars = xi.dims();
  cfg.mu0.n_dims = xi.dims();
  cfg.mu0.a = 0;
  cfg.mu0.delta = 1;
  cfg.mu0.b = static_cast<double>(xi.length() - 1);
  return cfg;
}

struct SeedRun {
  std::uint64_t seed = 0;
  classifier::TrainResult result;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct Summary {
  std::vector<SeedRun> runs;
  double mean_test_accuracy = 0.0;
  double std_test_accuracy = 0.0;  // sample standard deviation over seeds
};

inline std::uint64_t train_seed(std::uint64_t seed, std::size_t run) { return derive_seed(seed, "train", run); }

/// Trains one model per seed on standardized `train` and scores it on `test`.
inline Summary train_and_evaluate(const LabeledSet& train, const LabeledSet& test, const Eigen::MatrixXd& embeddings,
                                  const classifier::TrainConfig& cfg, std::size_t seeds, std::uint64_t seed,
                                  const std::function<void(const std::string&)>& log = {}) {
  if (seeds < 1) throw ConfigError("train: need at least one seed");
  Summary s;
  for (std::size_t k = 0; k < seeds; ++k) {
    SeedRun run;
    run.seed = train_seed(seed, k);
    run.result = classifier::train(train, embeddings, cfg, run.seed, log);
    run.train_accuracy =
        classifier::accuracy(classifier::predict(run.result.params, train.trajectories, embeddings), train.labels);
    if (test.size() > 0)
      run.test_accuracy =
          classifier::accuracy(classifier::predict(run.result.params, test.trajectories, embeddings), test.labels);
    if (log)
      log("seed " + std::to_string(k) + ": train accuracy " + std::to_string(run.train_accuracy) + ", test accuracy " +
          std::to_string(run.test_accuracy));
    s.runs.push_back(std::move(run));
  }
  double sum = 0;
  for (const auto& r : s.runs) sum += r.test_accuracy;
  s.mean_test_accuracy = sum / static_cast<double>(seeds);
  double var = 0;
  for (const auto& r : s.runs) var += (r.test_accuracy - s.mean_test_accuracy) * (r.test_accuracy - s.mean_test_accuracy);
  s.std_test_accuracy = seeds > 1 ? std::sqrt(var / static_cast<double>(seeds - 1)) : 0.0;
  return s;
}

}  // namespace ecats::pipeline
