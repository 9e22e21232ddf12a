#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "ecats/io.hpp"
#include "ecats/trajectory.hpp"

using namespace ecats;

namespace {

double total_variation(const Trajectory& xi, std::size_t dim) {
  double tv = 0;
  for (std::size_t t = 1; t < xi.length(); ++t) tv += std::abs(xi.at(t, dim) - xi.at(t - 1, dim));
  return tv;
}

// K for a given sample, re-derived from the generator stream in the same draw order.
double drawn_total_variation(const Mu0Params& p, std::uint64_t seed) {
  Rng rng = make_rng(seed, "mu0");
  std::normal_distribution<double> start(p.m_start, p.sigma_start);
  std::normal_distribution<double> tv(p.m_tv, p.sigma_tv);
  start(rng);
  const double g = tv(rng);
  return g * g;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("ecats_test_" + name);
}

}  // namespace

TEST_CASE("mu0 sampler shape", "[trajectory][mu0]") {
  const auto xi = sample_mu0(Mu0Params{}, 42);
  REQUIRE(xi.length() == 101);
  REQUIRE(xi.dims() == 1);
  REQUIRE(xi.t0() == 0.0);
  REQUIRE(xi.dt() == 1.0);
  REQUIRE(xi.finite());

  Mu0Params p;
  p.a = 2;
  p.b = 7;
  p.delta = 0.5;
  p.n_dims = 3;
  const auto yi = sample_mu0(p, 1);
  REQUIRE(yi.length() == 11);
  REQUIRE(yi.dims() == 3);
  REQUIRE(yi.time(10) == 7.0);
}

TEST_CASE("mu0 sampler is reproducible per seed", "[trajectory][mu0]") {
  REQUIRE(sample_mu0(Mu0Params{}, 9) == sample_mu0(Mu0Params{}, 9));
  REQUIRE_FALSE(sample_mu0(Mu0Params{}, 9) == sample_mu0(Mu0Params{}, 10));
  REQUIRE(sample_mu0_batch(Mu0Params{}, 5, 3) == sample_mu0_batch(Mu0Params{}, 5, 3));
}

TEST_CASE("total variation equals the drawn K", "[trajectory][mu0]") {
  const Mu0Params p;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto xi = sample_mu0(p, seed);
    const double k = drawn_total_variation(p, seed);
    REQUIRE(std::abs(total_variation(xi, 0) - k) <= 1e-12 * (1.0 + k));
  }
}

TEST_CASE("q = 0 gives monotone trajectories", "[trajectory][mu0]") {
  Mu0Params p;
  p.q = 0;
  p.n_dims = 2;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto xi = sample_mu0(p, seed);
    for (std::size_t d = 0; d < 2; ++d) {
      const double dir = xi.at(xi.length() - 1, d) - xi.at(0, d);
      for (std::size_t t = 1; t < xi.length(); ++t) REQUIRE((xi.at(t, d) - xi.at(t - 1, d)) * dir >= 0);
    }
  }
}

TEST_CASE("mu0 parameter validation", "[trajectory][mu0]") {
  Mu0Params p;
  p.b = p.a;
  REQUIRE_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.q = 1.5;
  REQUIRE_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.sigma_tv = 0;
  REQUIRE_THROWS_AS(sample_mu0(p, 0), ConfigError);
}

TEST_CASE("trajectory csv round trip", "[trajectory][csv]") {
  Mu0Params p;
  p.n_dims = 2;
  p.b = 30;
  p.delta = 0.1;
  LabeledSet set;
  auto batch = sample_mu0_batch(p, 6, 77);
  for (std::size_t k = 0; k < batch.size(); ++k) set.push_back(batch[k], static_cast<int>(k % 2), "traj" + std::to_string(k));

  const auto path = temp_path("roundtrip.csv");
  io::save_csv(set, path);
  const auto back = io::load_csv(path);
  REQUIRE(back.size() == 6);
  REQUIRE(back.ids == set.ids);
  REQUIRE(back.labels == set.labels);
  for (std::size_t k = 0; k < 6; ++k) {
    REQUIRE(back.trajectories[k].length() == set.trajectories[k].length());
    REQUIRE(std::abs(back.trajectories[k].dt() - 0.1) <= 1e-12);
    for (std::size_t i = 0; i < set.trajectories[k].values().size(); ++i)
      REQUIRE(std::abs(back.trajectories[k].values()[i] - set.trajectories[k].values()[i]) <= 1e-9);
  }
  std::filesystem::remove(path);
}

TEST_CASE("trajectory csv small file", "[trajectory][csv]") {
  const auto set = io::from_csv(
      "traj_id,time,label,x_0\n"
      "a,0,0,1.5\n"
      "a,1,0,2.5\n"
      "b,0,1,-1\n"
      "b,1,1,3e2\n");
  REQUIRE(set.size() == 2);
  REQUIRE(set.labels == std::vector<int>{0, 1});
  REQUIRE(set.trajectories[1].at(1, 0) == 300.0);
}

TEST_CASE("trajectory csv schema errors carry row numbers", "[trajectory][csv]") {
  auto message = [](const std::string& text) {
    try {
      io::from_csv(text);
    } catch (const IoError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  REQUIRE(message("traj_id,time,label,x_0\n").find("no trajectories") != std::string::npos);
  REQUIRE(message("traj_id,time,x_0\na,0,1\n").find("header") != std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,0,oops\n").find("row 3") != std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,0,2\nb,0,1,1\n").find("fewer than 2") != std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,0,2\nb,0,1,1\nb,1,1,1\nb,2,1,1\n").find("ragged") !=
          std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,1,2\n").find("label changes") != std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,0,2\na,3,0,2\n").find("non-uniform") != std::string::npos);
  REQUIRE(message("traj_id,time,label,x_0\na,0,0,1\na,1,0\n").find("row 3") != std::string::npos);
  REQUIRE_THROWS_AS(io::load_csv("/nonexistent/path.csv"), IoError);
}

TEST_CASE("standardizer", "[trajectory]") {
  const std::vector<Trajectory> data = {Trajectory::from_values({1, 3}), Trajectory::from_values({5, 7})};
  const auto s = Standardizer::fit(data);
  REQUIRE(s.mean[0] == 4.0);
  REQUIRE(s.scale[0] == Catch::Approx(std::sqrt(5.0)));
  const auto z = s.apply(data[0]);
  REQUIRE(s.to_raw(0, z.at(0, 0)) == Catch::Approx(1.0));
}
