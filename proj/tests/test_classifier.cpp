#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "ecats/classifier.hpp"
#include "ecats/datasets.hpp"
#include "support.hpp"

using namespace ecats;
using namespace ecats::classifier;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * n01(rng);
  return m;
}

// Mean BCE recomputed from the forward pass only.
double batch_loss(const ModelParams& m, const std::vector<Trajectory>& xs, const std::vector<int>& ys,
                  const Eigen::MatrixXd& e) {
  double s = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += loss_bce(forward(m, xs[i], e).p, ys[i]);
  return s / static_cast<double>(xs.size());
}

struct SmallConfig {
  ModelParams params;
  std::vector<Trajectory> xs;
  std::vector<int> ys;
  Eigen::MatrixXd embeddings;
};

SmallConfig small_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = 1 + seed % 2;
  const Architecture arch{n, 4, 4, 8};
  SmallConfig c{ModelParams::init(arch, seed), {}, {}, random_matrix(rng, 5, 4)};
  // Biases are zero after init; give them values so their gradients are exercised.
  c.params.b1 = random_matrix(rng, 8, 1, 0.3);
  c.params.b2 = random_matrix(rng, 1, 1, 0.3);
  for (int k = 0; k < 3; ++k) {
    c.xs.push_back(testing::random_trajectory(rng, 10, n));
    c.ys.push_back(k % 2);
  }
  return c;
}

}  // namespace

TEST_CASE("forward pass attention", "[classifier][forward]") {
  std::mt19937_64 rng(1);
  const Architecture arch{2, 3, 6, 5};
  const auto m = ModelParams::init(arch, 7);
  const auto e = random_matrix(rng, 9, 3);
  const auto xi = testing::random_trajectory(rng, 12, 2);
  const auto c = forward(m, xi, e);
  REQUIRE(c.attention.rows() == 12);
  REQUIRE(c.attention.cols() == 9);
  for (Eigen::Index t = 0; t < 12; ++t) REQUIRE(std::abs(c.attention.row(t).sum() - 1.0) <= 1e-12);
  REQUIRE((c.attention.array() >= 0).all());
  REQUIRE(std::abs(c.alpha.sum() - 1.0) <= 1e-9);
  REQUIRE(c.p > 0);
  REQUIRE(c.p < 1);

  SECTION("a single concept gets all the attention") {
    const auto one = forward(m, xi, e.topRows(1));
    REQUIRE(one.alpha.size() == 1);
    REQUIRE(one.alpha[0] == 1.0);
  }
  SECTION("zero query and key projections give uniform attention") {
    auto z = m;
    z.wq.setZero();
    z.wk.setZero();
    const auto u = forward(z, xi, e);
    for (Eigen::Index i = 0; i < 9; ++i) REQUIRE(u.alpha[i] == Catch::Approx(1.0 / 9).epsilon(1e-12));
  }
  SECTION("permuting the concepts permutes alpha and keeps p") {
    std::vector<int> perm = {3, 0, 8, 1, 7, 2, 6, 4, 5};
    Eigen::MatrixXd ep(9, 3);
    for (int i = 0; i < 9; ++i) ep.row(i) = e.row(perm[i]);
    const auto cp = forward(m, xi, ep);
    for (int i = 0; i < 9; ++i) REQUIRE(std::abs(cp.alpha[i] - c.alpha[perm[i]]) <= 1e-9);
    REQUIRE(std::abs(cp.p - c.p) <= 1e-9);
  }
  SECTION("shape errors") {
    REQUIRE_THROWS_AS(forward(m, testing::random_trajectory(rng, 12, 1), e), ShapeError);
    REQUIRE_THROWS_AS(forward(m, xi, random_matrix(rng, 9, 4)), ShapeError);
  }
}

TEST_CASE("binary cross entropy", "[classifier][loss]") {
  REQUIRE(loss_bce(0.5, 0) == Catch::Approx(std::log(2.0)));
  REQUIRE(loss_bce(0.5, 1) == Catch::Approx(std::log(2.0)));
  REQUIRE(loss_bce(1.0, 1) <= 1e-11);
  REQUIRE(loss_bce(0.0, 0) <= 1e-11);
  REQUIRE(std::isfinite(loss_bce(0.0, 1)));
  REQUIRE(loss_bce(0.0, 1) == Catch::Approx(-std::log(kProbClamp)));
  const std::vector<double> p = {0.2, 0.9, 0.6};
  const std::vector<int> y = {0, 1, 0};
  REQUIRE(loss_bce(p, y) == Catch::Approx((loss_bce(0.2, 0) + loss_bce(0.9, 1) + loss_bce(0.6, 0)) / 3));
}

TEST_CASE("analytic gradients match central finite differences", "[classifier][gradient]") {
  const double h = 1e-5;
  int configs = 0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    auto c = small_config(seed);
    const auto analytic = loss_and_grad(c.params, c.xs, c.ys, c.embeddings);
    REQUIRE(analytic.loss == Catch::Approx(batch_loss(c.params, c.xs, c.ys, c.embeddings)).epsilon(1e-12));
    Eigen::VectorXd a(static_cast<Eigen::Index>(c.params.count())), fd(a.size());
    Eigen::Index k = 0;
    auto ts = c.params.tensors();
    const auto gs = analytic.grad.tensors();
    for (std::size_t t = 0; t < ts.size(); ++t)
      for (Eigen::Index i = 0; i < ts[t]->size(); ++i, ++k) {
        double& w = ts[t]->data()[i];
        const double saved = w;
        w = saved + h;
        const double up = batch_loss(c.params, c.xs, c.ys, c.embeddings);
        w = saved - h;
        const double down = batch_loss(c.params, c.xs, c.ys, c.embeddings);
        w = saved;
        fd[k] = (up - down) / (2 * h);
        a[k] = gs[t]->data()[i];
      }
    const double rel = (a - fd).norm() / std::max(a.norm(), fd.norm());
    INFO("seed " << seed << " relative error " << rel);
    REQUIRE(rel <= 1e-4);
    ++configs;
  }
  REQUIRE(configs >= 20);
}

TEST_CASE("gradient special cases", "[classifier][gradient]") {
  auto c = small_config(3);
  SECTION("zero output layer stops the flow into attention") {
    c.params.w2.setZero();
    const auto g = loss_and_grad(c.params, c.xs, c.ys, c.embeddings).grad;
    REQUIRE(g.wv.isZero(0));
    REQUIRE(g.wq.isZero(0));
    REQUIRE(g.wk.isZero(0));
    REQUIRE(g.w1.isZero(0));
    const double p = 1.0 / (1.0 + std::exp(-c.params.b2(0, 0)));
    REQUIRE(g.b2(0, 0) == Catch::Approx(p - (0.0 + 1.0 + 0.0) / 3));
  }
  SECTION("saturated predictions keep finite gradients") {
    c.params.b2(0, 0) = 800;
    const auto lg = loss_and_grad(c.params, c.xs, c.ys, c.embeddings);
    REQUIRE(std::isfinite(lg.loss));
    for (const auto* t : lg.grad.tensors()) REQUIRE(t->allFinite());
  }
  SECTION("non-finite gradients name the parameter") {
    c.params.w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
      loss_and_grad(c.params, c.xs, c.ys, c.embeddings);
      FAIL("expected an error");
    } catch (const EvalError& e) {
      REQUIRE(std::string(e.what()).find("non-finite gradient in ") != std::string::npos);
    }
  }
}

TEST_CASE("predict", "[classifier][predict]") {
  std::mt19937_64 rng(2);
  const Architecture arch{1, 3, 4, 4};
  const auto e = random_matrix(rng, 6, 3);
  std::vector<Trajectory> xs;
  for (int k = 0; k < 4; ++k) xs.push_back(testing::random_trajectory(rng, 8, 1));

  const auto zero = ModelParams::zeros(arch);
  for (const auto& p : predict(zero, xs, e)) {
    REQUIRE(p.probability == 0.5);
    REQUIRE(p.label == 1);
  }
  const auto m = ModelParams::init(arch, 4);
  const auto a = predict(m, xs, e), b = predict(m, xs, e);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(a[i].probability == b[i].probability);
    REQUIRE(a[i].attention == b[i].attention);
    REQUIRE(std::abs(a[i].attention.sum() - 1.0) <= 1e-9);
  }
  std::vector<Prediction> hand = {{1, 0.9, {}}, {0, 0.1, {}}, {1, 0.6, {}}, {0, 0.4, {}}};
  REQUIRE(accuracy(hand, std::vector<int>{1, 1, 0, 0}) == 0.5);
}

TEST_CASE("training", "[classifier][train]") {
  datasets::CruiseConfig cc;
  cc.n_traj = 40;
  cc.outliers = 0;
  const auto gen = datasets::gen_cruise(cc, 5);
  const auto data = Standardizer::fit(gen.set.trajectories).apply(gen.set);
  std::mt19937_64 rng(8);
  const auto e = random_matrix(rng, 12, 5);

  SECTION("same seed, same weights and history") {
    TrainConfig tc;
    tc.epochs = 3;
    tc.learning_rate = 1e-2;
    const auto a = train(data, e, tc, 1), b = train(data, e, tc, 1);
    REQUIRE(a.params == b.params);
    REQUIRE(a.history.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) REQUIRE(a.history[i].loss == b.history[i].loss);
    REQUIRE_FALSE(train(data, e, tc, 2).params == a.params);
  }
  SECTION("full-batch loss decreases on a tiny set") {
    std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5, 6, 7};
    const auto tiny = data.subset(idx);
    TrainConfig tc;
    tc.epochs = 60;
    tc.batch_size = 8;
    tc.learning_rate = 1e-3;
    const auto r = train(tiny, e, tc, 3);
    for (std::size_t i = 1; i < r.history.size(); ++i) REQUIRE(r.history[i].loss <= r.history[i - 1].loss + 1e-9);
    REQUIRE(r.history.back().loss < r.history.front().loss);
  }
  SECTION("separable data is fitted") {
    TrainConfig tc;
    tc.epochs = 200;
    tc.batch_size = 8;
    tc.learning_rate = 1e-2;
    const auto r = train(data, e, tc, 0);
    REQUIRE(r.history.back().accuracy >= 0.95);
  }
  SECTION("plain SGD moves the weights along the negative gradient") {
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = data.size();
    tc.optimizer = Optimizer::Sgd;
    tc.learning_rate = 0.1;
    const auto start = ModelParams::init(Architecture{1, 5, tc.d_att, tc.hidden}, 4);
    const auto g = loss_and_grad(start, data.trajectories, data.labels, e).grad;
    const auto r = train(data, e, tc, 4);
    REQUIRE((r.params.w1 - (start.w1 - 0.1 * g.w1)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SECTION("invalid input") {
    REQUIRE_THROWS_AS(train(LabeledSet{}, e, TrainConfig{}, 0), ConfigError);
    TrainConfig bad;
    bad.learning_rate = 0;
    REQUIRE_THROWS_AS(train(data, e, bad, 0), ConfigError);
  }
}
