#pragma once

// On-disk formats: concept banks (formulas.txt + embeddings.csv + bank.json),
// model checkpoints (long-form CSV + JSON architecture), training logs and
// JSON metadata sidecars. Needs nlohmann/json (vendor/json.hpp).

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecats/classifier.hpp"
#include "ecats/concepts.hpp"
#include "ecats/error.hpp"
#include "ecats/io.hpp"
#include "ecats/stl_text.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::persist {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline json read_json(const fs::path& path) {
  const std::string text = io::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { io::write_file(path, j.dump(2) + "\n"); }

inline json to_json(const Mu0Params& p) {
  return {{"a", p.a},         {"b", p.b},           {"delta", p.delta}, {"m_start", p.m_start},
          {"sigma_start", p.sigma_start}, {"m_tv", p.m_tv}, {"sigma_tv", p.sigma_tv}, {"q", p.q},
          {"n_dims", p.n_dims}};
}

inline json to_json(const concepts::BankConfig& c) {
  return {{"max_nodes", c.max_nodes}, {"max_vars", c.max_vars}, {"count_operator_nodes", c.count_operator_nodes},
          {"tau", c.tau},             {"bank_size", c.bank_size}, {"basis_size", c.basis_size},
          {"embed_dim", c.embed_dim}, {"clamp", c.clamp},         {"mu0", to_json(c.mu0)},
          {"seed", c.seed}};
}

inline json to_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

inline Standardizer standardizer_from_json(const json& j) {
  try {
    Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
    if (s.mean.size() != s.scale.size()) throw IoError("standardizer: mean and scale differ in length");
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("standardizer: ") + e.what());
  }
}

inline json to_json(const classifier::Architecture& a) {
  return {{"input_dims", a.input_dims}, {"embed_dim", a.embed_dim}, {"d_att", a.d_att}, {"hidden", a.hidden}};
}

inline classifier::Architecture architecture_from_json(const json& j) {
  try {
    return {j.at("input_dims").get<std::size_t>(), j.at("embed_dim").get<std::size_t>(),
            j.at("d_att").get<std::size_t>(), j.at("hidden").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw IoError(std::string("architecture: ") + e.what());
  }
}

// ---- concept bank ----

struct StoredBank {
  std::vector<stl::Formula> formulas;
  Eigen::MatrixXd embeddings;
  json meta;
};

/// Writes formulas.txt (one per line, exact thresholds), embeddings.csv and
/// bank.json (config, counts, provenance, plus `extra`).
inline void save_bank(const concepts::ConceptBank& bank, const fs::path& dir, const json& extra = json::object()) {
  std::string text;
  for (const auto& f : bank.formulas) text += stl::render(f) + "\n";
  io::write_file(dir / "formulas.txt", text);
  io::write_file(dir / "embeddings.csv", io::matrix_to_csv(bank.embeddings));
  json prov = json::array();
  for (const auto& p : bank.provenance) {
    json iv = json::array();
    for (const auto& i : p.params.intervals) iv.push_back(stl::detail::render_interval(i));
    prov.push_back({{"template", stl::render(bank.templates.at(p.template_id).skeleton)},
                    {"thresholds", p.params.thresholds},
                    {"intervals", iv}});
  }
  json meta = {{"config", to_json(bank.config)},
               {"size", bank.size()},
               {"dim", bank.dim()},
               {"templates", bank.templates.size()},
               {"candidates", bank.candidate_count},
               {"pool_size", bank.pool_size},
               {"spectral_mass", bank.spectral_mass},
               {"provenance", prov}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_json(dir / "bank.json", meta);
}

inline StoredBank load_bank(const fs::path& dir) {
  StoredBank b;
  for (const auto& line : io::lines(io::read_file(dir / "formulas.txt")))
    if (!io::trim(line).empty()) b.formulas.push_back(stl::parse(line));
  b.embeddings = io::matrix_from_csv(io::read_file(dir / "embeddings.csv"), (dir / "embeddings.csv").string());
  b.meta = read_json(dir / "bank.json");
  if (static_cast<std::size_t>(b.embeddings.rows()) != b.formulas.size())
    throw IoError("'" + dir.string() + "': " + std::to_string(b.formulas.size()) + " formulas but " +
                  std::to_string(b.embeddings.rows()) + " embedding rows");
  return b;
}

// ---- model checkpoint ----

/// Long form `param,row,col,value` with shortest round-trip numbers.
inline std::string model_to_csv(const classifier::ModelParams& m) {
  std::string out = "param,row,col,value\n";
  const auto ts = m.tensors();
  for (std::size_t t = 0; t < ts.size(); ++t)
    for (Eigen::Index i = 0; i < ts[t]->rows(); ++i)
      for (Eigen::Index j = 0; j < ts[t]->cols(); ++j)
        out += std::string(classifier::ModelParams::names[t]) + "," + std::to_string(i) + "," + std::to_string(j) + "," +
               io::fmt((*ts[t])(i, j)) + "\n";
  return out;
}

inline classifier::ModelParams model_from_csv(const std::string& text, const classifier::Architecture& arch) {
  auto m = classifier::ModelParams::zeros(arch);
  auto ts = m.tensors();
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> seen;
  for (auto* t : ts) seen.push_back(Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(t->rows(), t->cols(), false));
  const auto all = io::lines(text);
  if (all.empty() || io::trim(all.front()) != "param,row,col,value") throw IoError("checkpoint: missing header");
  for (std::size_t r = 1; r < all.size(); ++r) {
    if (io::trim(all[r]).empty()) continue;
    const auto cells = io::split(all[r]);
    const std::string where = "checkpoint line " + std::to_string(r + 1);
    if (cells.size() != 4) throw IoError(where + ": expected 4 cells");
    std::size_t t = 0;
    while (t < ts.size() && cells[0] != classifier::ModelParams::names[t]) ++t;
    if (t == ts.size()) throw IoError(where + ": unknown parameter '" + std::string(cells[0]) + "'");
    double row, col, v;
    if (!io::parse_double(cells[1], row) || !io::parse_double(cells[2], col) || !io::parse_double(cells[3], v))
      throw IoError(where + ": non-numeric cell");
    const auto i = static_cast<Eigen::Index>(row), j = static_cast<Eigen::Index>(col);
    if (row < 0 || col < 0 || i >= ts[t]->rows() || j >= ts[t]->cols())
      throw IoError(where + ": index outside " + classifier::ModelParams::names[t]);
    (*ts[t])(i, j) = v;
    seen[t](i, j) = true;
  }
  for (std::size_t t = 0; t < ts.size(); ++t)
    if (!seen[t].all()) throw IoError(std::string("checkpoint: entries of ") + classifier::ModelParams::names[t] + " missing");
  return m;
}

inline std::string train_log_csv(std::span<const classifier::EpochRecord> history, std::size_t run = 0) {
  std::string out = "run,epoch,loss,accuracy\n";
  for (const auto& h : history)
    out += std::to_string(run) + "," + std::to_string(h.epoch) + "," + io::fmt(h.loss) + "," + io::fmt(h.accuracy) + "\n";
  return out;
}

}  // namespace ecats::persist
