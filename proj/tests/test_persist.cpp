#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "ecats/persist.hpp"

using namespace ecats;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ecats_test_persist_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("concept bank round trip", "[persist][bank]") {
  concepts::BankConfig cfg;
  cfg.basis_size = 200;
  cfg.bank_size = 12;
  cfg.embed_dim = 5;
  cfg.max_nodes = 2;
  cfg.mu0.b = 20;
  cfg.seed = 9;
  const auto bank = concepts::build_concept_bank(cfg);
  const auto dir = scratch("bank");
  persist::save_bank(bank, dir, {{"note", "x"}});
  const auto back = persist::load_bank(dir);
  REQUIRE(back.formulas.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) REQUIRE(back.formulas[i] == bank.formulas[i]);
  REQUIRE(back.embeddings == bank.embeddings);
  REQUIRE(back.meta["config"]["seed"] == 9);
  REQUIRE(back.meta["note"] == "x");
  REQUIRE(back.meta["provenance"].size() == bank.size());

  io::write_file(dir / "formulas.txt", "x_0 <= 1\n");
  REQUIRE_THROWS_AS(persist::load_bank(dir), IoError);
  std::filesystem::remove_all(dir);
  REQUIRE_THROWS_AS(persist::load_bank(dir), IoError);
}

TEST_CASE("checkpoint round trip", "[persist][model]") {
  const classifier::Architecture arch{2, 3, 4, 5};
  auto m = classifier::ModelParams::init(arch, 3);
  m.b1(2, 0) = 1.0 / 3.0;
  m.b2(0, 0) = -2.5e-300;
  const auto text = persist::model_to_csv(m);
  REQUIRE(text.rfind("param,row,col,value\nwq,0,0,", 0) == 0);
  REQUIRE(persist::model_from_csv(text, arch) == m);
  REQUIRE(persist::architecture_from_json(persist::to_json(arch)) == arch);

  SECTION("malformed checkpoints") {
    REQUIRE_THROWS_AS(persist::model_from_csv("wq,0,0,1\n", arch), IoError);
    REQUIRE_THROWS_AS(persist::model_from_csv(text, classifier::Architecture{2, 3, 4, 6}), IoError);
    REQUIRE_THROWS_AS(persist::model_from_csv(text + "wz,0,0,1\n", arch), IoError);
    REQUIRE_THROWS_AS(persist::model_from_csv(text + "wq,9,0,1\n", arch), IoError);
  }
}

TEST_CASE("json helpers", "[persist]") {
  const Standardizer s{{1.5, -2.0}, {0.25, 3.0}};
  REQUIRE(persist::standardizer_from_json(persist::to_json(s)) == s);
  const auto path = scratch("meta.json");
  persist::write_json(path, {{"a", 1}});
  REQUIRE(persist::read_json(path)["a"] == 1);
  io::write_file(path, "{not json");
  REQUIRE_THROWS_AS(persist::read_json(path), IoError);
  std::filesystem::remove(path);

  std::vector<classifier::EpochRecord> h = {{1, 0.5, 0.75}, {2, 0.25, 1.0}};
  REQUIRE(persist::train_log_csv(h, 2) == "run,epoch,loss,accuracy\n2,1,0.5,0.75\n2,2,0.25,1\n");
}
