// ecats: generate data, build a concept bank, train, evaluate and explain.
//
// Exit codes: 0 ok, 1 computation failure, 2 usage or I/O error.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ecats/classifier.hpp"
#include "ecats/concepts.hpp"
#include "ecats/datasets.hpp"
#include "ecats/explain.hpp"
#include "ecats/io.hpp"
#include "ecats/persist.hpp"
#include "ecats/pipeline.hpp"
#include "ecats/random.hpp"
#include "ecats/stl_text.hpp"
#include "ecats/stl_transform.hpp"

namespace fs = std::filesystem;
using json = ecats::persist::json;
using namespace ecats;

namespace {

// JSON config files: top-level keys for global options, one object per
// subcommand for its own options. Command-line flags win over the file.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    return dump(app, default_also).dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> out;
    collect(j, {}, out);
    return out;
  }

  static json dump(const CLI::App* app, bool default_also) {
    json j = json::object();
    for (const CLI::Option* o : app->get_options()) {
      const std::string name = o->get_single_name();
      if (name.empty() || name == "help" || name == "config" || !o->get_configurable()) continue;
      std::string v;
      if (o->count() > 0)
        v = o->as<std::string>();
      else if (default_also && !o->get_default_str().empty())
        v = o->get_default_str();
      else if (default_also && o->get_type_size() == 0)
        v = "false";
      else
        continue;
      j[name] = scalar(v);
    }
    for (const CLI::App* sub : app->get_subcommands([](const CLI::App* s) { return s->parsed(); }))
      j[sub->get_name()] = dump(sub, default_also);
    return j;
  }

 private:
  static json scalar(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    double d;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec == std::errc() && p == v.data() + v.size()) return json::parse(v);
    return v;
  }

  static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    if (!j.is_object()) throw CLI::FileError("config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        collect(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_boolean())
        item.inputs = {it->get<bool>() ? "true" : "false"};
      else if (it->is_string())
        item.inputs = {it->get<std::string>()};
      else if (it->is_number())
        item.inputs = {it->dump()};
      else if (it->is_array())
        for (const auto& v : *it) item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      else
        throw CLI::FileError("config: unsupported value for '" + it.key() + "'");
      out.push_back(std::move(item));
    }
  }
};

struct Global {
  std::uint64_t seed = 0;
  bool quiet = false;
};

struct Seeds {
  std::uint64_t data, bank, train;
  explicit Seeds(std::uint64_t s)
      : data(derive_seed(s, "data")), bank(derive_seed(s, "bank")), train(derive_seed(s, "train")) {}
  json to_json(std::uint64_t global) const {
    return {{"seed", global}, {"streams", {{"data", data}, {"bank", bank}, {"train", train}}}};
  }
};

class Logger {
 public:
  explicit Logger(bool quiet) : quiet_(quiet) {}
  void operator()(const std::string& s) const {
    if (!quiet_) std::cerr << s << "\n";
  }
  std::function<void(const std::string&)> fn() const {
    return [this](const std::string& s) { (*this)(s); };
  }

 private:
  bool quiet_;
};

json metadata(const CLI::App& root, const std::string& command, const Global& g) {
  json m = {{"command", command}};
  const json seeds = Seeds(g.seed).to_json(g.seed);
  for (const auto& [k, v] : seeds.items()) m[k] = v;
  m["config"] = JsonConfig::dump(&root, true);
  return m;
}

// Writes `content` to `path` plus a `<path>.meta.json` sidecar.
void write_with_meta(const fs::path& path, std::string_view content, const json& meta) {
  io::write_file(path, content);
  persist::write_json(path.string() + ".meta.json", meta);
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file or directory: '" + p.string() + "'");
}

LabeledSet load_data(const fs::path& p) {
  require_file(p);
  auto set = io::load_csv(p);
  set.validate();
  return set;
}

persist::StoredBank load_bank(const fs::path& p) {
  require_file(p);
  return persist::load_bank(p);
}

// Reloaded training run: split, standardizer and per-seed checkpoints.
struct StoredModel {
  json meta;
  classifier::Architecture arch;
  Standardizer standardizer;
  pipeline::Split split;
  std::vector<classifier::ModelParams> runs;
};

StoredModel load_model(const fs::path& dir) {
  require_file(dir / "model.json");
  StoredModel m;
  m.meta = persist::read_json(dir / "model.json");
  try {
    m.arch = persist::architecture_from_json(m.meta.at("architecture"));
    m.standardizer = persist::standardizer_from_json(m.meta.at("standardizer"));
    m.split.train = m.meta.at("split").at("train").get<std::vector<std::size_t>>();
    m.split.test = m.meta.at("split").at("test").get<std::vector<std::size_t>>();
    for (const auto& r : m.meta.at("runs")) {
      const fs::path f = dir / r.at("checkpoint").get<std::string>();
      require_file(f);
      m.runs.push_back(persist::model_from_csv(io::read_file(f), m.arch));
    }
  } catch (const json::exception& e) {
    throw IoError("'" + (dir / "model.json").string() + "': " + e.what());
  }
  if (m.runs.empty()) throw IoError("'" + (dir / "model.json").string() + "': no runs");
  return m;
}

void check_indices(const pipeline::Split& s, std::size_t n) {
  for (auto v : {&s.train, &s.test})
    for (std::size_t i : *v)
      if (i >= n) throw IoError("model split refers to trajectory " + std::to_string(i) + " but the data has " + std::to_string(n));
}

std::string raw(const stl::Formula& f, const Standardizer& st) {
  return stl::render(stl::affine_thresholds(f, st.mean, st.scale));
}

// ---- commands ----

struct GenData {
  std::string dataset = "cruise";
  std::size_t n = 0;  // 0 = dataset default
  std::size_t length = 48;
  std::size_t outliers = 7;
  std::string out = "data.csv";
};

int gen_data(const GenData& a, const Global& g, const CLI::App& root, const Logger& log) {
  const Seeds seeds(g.seed);
  datasets::Generated gen;
  if (a.dataset == "cruise") {
    datasets::CruiseConfig c;
    if (a.n) c.n_traj = a.n;
    c.length = a.length;
    c.outliers = a.outliers;
    gen = datasets::gen_cruise(c, seeds.data);
  } else {
    datasets::MaritimeConfig c;
    if (a.n) c.n_traj = a.n;
    c.length = a.length;
    gen = datasets::gen_maritime(c, seeds.data);
  }
  json meta = metadata(root, "gen-data", g);
  meta["dataset"] = a.dataset;
  meta["trajectories"] = gen.set.size();
  meta["outlier_ids"] = json::array();
  meta["modes"] = json::array();
  for (std::size_t k = 0; k < gen.set.size(); ++k) {
    if (!gen.outlier.empty() && gen.outlier[k]) meta["outlier_ids"].push_back(gen.set.ids[k]);
    if (!gen.mode.empty()) meta["modes"].push_back(gen.mode[k]);
  }
  write_with_meta(a.out, io::to_csv(gen.set), meta);
  log("wrote " + std::to_string(gen.set.size()) + " trajectories to " + a.out);
  return 0;
}

struct BuildBank {
  std::string data;
  std::size_t dims = 1, length = 48;
  std::size_t max_nodes = 3;
  double tau = 0.9;
  std::size_t bank_size = 256;
  std::size_t basis_size = stl_kernel::kDefaultBasisSize;
  std::size_t embed_dim = 30;
  std::string out = "bank";
};

int build_bank(const BuildBank& a, const Global& g, const CLI::App& root, const Logger& log) {
  concepts::BankConfig cfg;
  cfg.max_nodes = a.max_nodes;
  cfg.tau = a.tau;
  cfg.bank_size = a.bank_size;
  cfg.basis_size = a.basis_size;
  cfg.embed_dim = a.embed_dim;
  cfg.seed = Seeds(g.seed).bank;
  if (!a.data.empty()) {
    cfg = pipeline::bank_config_for(load_data(a.data), cfg);
  } else {
    if (a.length < 4) throw ConfigError("build-bank: --length must be >= 4");
    cfg.max_vars = cfg.mu0.n_dims = a.dims;
    cfg.mu0.a = 0;
    cfg.mu0.b = static_cast<double>(a.length - 1);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto bank = concepts::build_concept_bank(cfg, nullptr, log.fn());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json extra = metadata(root, "build-bank", g);
  extra["seconds"] = secs;
  persist::save_bank(bank, a.out, extra);
  log("bank: " + std::to_string(bank.size()) + " concepts, embedding dimension " + std::to_string(bank.dim()) +
      ", written to " + a.out);
  return 0;
}

struct Train {
  std::string data, bank, out = "model";
  std::size_t epochs = 50;
  double lr = 1e-5;
  std::size_t seeds = 5;
  std::size_t batch = 32;
  std::string optimizer = "adam";
  std::size_t d_att = 32, hidden = 64;
  double test_fraction = 0.3;
};

classifier::TrainConfig train_config(const Train& a) {
  classifier::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch;
  tc.optimizer = a.optimizer == "sgd" ? classifier::Optimizer::Sgd : classifier::Optimizer::Adam;
  tc.d_att = a.d_att;
  tc.hidden = a.hidden;
  tc.validate();
  return tc;
}

int train(const Train& a, const Global& g, const CLI::App& root, const Logger& log) {
  const auto data = load_data(a.data);
  const auto bank = load_bank(a.bank);
  const auto tc = train_config(a);
  const Seeds seeds(g.seed);
  const auto split = pipeline::stratified_split(data.labels, a.test_fraction, seeds.train);
  const auto train_raw = data.subset(split.train);
  const auto st = Standardizer::fit(train_raw.trajectories);
  const auto train_set = st.apply(train_raw), test_set = st.apply(data.subset(split.test));
  const auto summary =
      pipeline::train_and_evaluate(train_set, test_set, bank.embeddings, tc, a.seeds, seeds.train, log.fn());

  const fs::path out = a.out;
  const classifier::Architecture arch{data.trajectories.front().dims(), static_cast<std::size_t>(bank.embeddings.cols()),
                                      tc.d_att, tc.hidden};
  json runs = json::array();
  std::string train_log;
  for (std::size_t k = 0; k < summary.runs.size(); ++k) {
    const auto& r = summary.runs[k];
    const std::string file = "run_" + std::to_string(k) + ".csv";
    io::write_file(out / file, persist::model_to_csv(r.result.params));
    runs.push_back({{"seed", r.seed}, {"checkpoint", file}, {"train_accuracy", r.train_accuracy}, {"test_accuracy", r.test_accuracy}});
    const auto log_part = persist::train_log_csv(r.result.history, k);
    train_log += k ? log_part.substr(log_part.find('\n') + 1) : log_part;
  }
  json meta = metadata(root, "train", g);
  meta["data"] = a.data;
  meta["bank"] = a.bank;
  meta["architecture"] = persist::to_json(arch);
  meta["standardizer"] = persist::to_json(st);
  meta["split"] = {{"test_fraction", a.test_fraction}, {"train", split.train}, {"test", split.test}};
  meta["runs"] = runs;
  persist::write_json(out / "model.json", meta);
  write_with_meta(out / "train_log.csv", train_log, metadata(root, "train", g));
  log("mean test accuracy " + std::to_string(summary.mean_test_accuracy) + " +- " +
      std::to_string(summary.std_test_accuracy) + " over " + std::to_string(a.seeds) + " seed(s)");
  return 0;
}

struct Eval {
  std::string data, bank, model, out = "metrics.json";
};

int eval(const Eval& a, const Global& g, const CLI::App& root, const Logger& log) {
  const auto data = load_data(a.data);
  const auto bank = load_bank(a.bank);
  const auto model = load_model(a.model);
  check_indices(model.split, data.size());
  const auto std_all = model.standardizer.apply(data);
  const auto train_set = std_all.subset(model.split.train), test_set = std_all.subset(model.split.test);
  json runs = json::array();
  std::vector<double> acc;
  for (std::size_t k = 0; k < model.runs.size(); ++k) {
    const auto& p = model.runs[k];
    const double tr = classifier::accuracy(classifier::predict(p, train_set.trajectories, bank.embeddings), train_set.labels);
    const double te = test_set.size()
                          ? classifier::accuracy(classifier::predict(p, test_set.trajectories, bank.embeddings), test_set.labels)
                          : 0.0;
    acc.push_back(te);
    runs.push_back({{"run", k}, {"train_accuracy", tr}, {"test_accuracy", te}});
  }
  double mean = 0, var = 0;
  for (double v : acc) mean += v;
  mean /= static_cast<double>(acc.size());
  for (double v : acc) var += (v - mean) * (v - mean);
  const double sd = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
  json m = {{"test_accuracy_mean", mean}, {"test_accuracy_std", sd}, {"runs", runs},
            {"test_size", test_set.size()}, {"train_size", train_set.size()}};
  m["meta"] = metadata(root, "eval", g);
  persist::write_json(a.out, m);
  char buf[128];
  std::snprintf(buf, sizeof buf, "test accuracy %.2f%% +- %.2f over %zu run(s)", 100 * mean, 100 * sd, acc.size());
  log(buf);
  return 0;
}

struct Explain {
  std::string data, bank, model, out = "explain";
  std::string traj_id;
  std::vector<int> classes;
  std::size_t run = 0;
  std::size_t k_top = 3;
  double sim = 0.9;
  double outlier_fraction = explain::kDefaultOutlierFraction;
};

json shift_json(const explain::ShiftResult& r, const Standardizer& st) {
  json j = {{"formula", raw(r.formula, st)}, {"negated", r.negated}};
  j["epsilon"] = r.epsilon ? json(*r.epsilon) : json(nullptr);
  j["signs"] = {{"target_positive", r.signs.target_positive}, {"target_negative", r.signs.target_negative},
                {"target_zero", r.signs.target_zero},         {"other_positive", r.signs.other_positive},
                {"other_negative", r.signs.other_negative},   {"other_zero", r.signs.other_zero}};
  return j;
}

std::vector<Trajectory> others(const LabeledSet& s, int label) {
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s.labels[k] != label) out.push_back(s.trajectories[k]);
  return out;
}

void write_report(const fs::path& dir, const std::string& stem, const stl::Formula& raw_phi, const LabeledSet& data,
                  int label, const json& meta, json& out) {
  const auto rows = explain::robustness_report(raw_phi, data);
  write_with_meta(dir / (stem + ".csv"), explain::report_csv(rows), meta);
  write_with_meta(dir / (stem + ".svg"), explain::report_svg(rows, stl::render(raw_phi)), meta);
  const auto s = explain::separation(rows, label);
  out["separation"] = {{"own_positive", s.own}, {"other_negative", s.other}};
  out["report"] = stem + ".csv";
}

int explain_cmd(const Explain& a, const Global& g, const CLI::App& root, const Logger& log) {
  const auto data = load_data(a.data);
  const auto bank = load_bank(a.bank);
  const auto model = load_model(a.model);
  if (a.run >= model.runs.size()) throw ConfigError("explain: --run " + std::to_string(a.run) + " but the model has " +
                                                    std::to_string(model.runs.size()) + " run(s)");
  const auto& st = model.standardizer;
  const auto std_all = st.apply(data);
  const auto pred = classifier::predict(model.runs[a.run], std_all.trajectories, bank.embeddings);
  const explain::Concepts cs{bank.formulas, bank.embeddings};
  const fs::path dir = a.out;
  json meta = metadata(root, "explain", g);
  json out = {{"meta", meta}};

  if (!a.traj_id.empty()) {
    std::size_t k = 0;
    while (k < data.size() && data.ids[k] != a.traj_id) ++k;
    if (k == data.size()) throw ConfigError("explain: no trajectory with id '" + a.traj_id + "'");
    const int y = pred[k].label;
    const auto l = explain::explain_local(pred[k].attention, std_all.trajectories[k], cs, a.k_top, a.sim, y, a.traj_id);
    const auto target = std_all.of_class(y), other = others(std_all, y);
    json j = {{"trajectory_id", a.traj_id}, {"label", data.labels[k]}, {"predicted", y},
              {"probability", pred[k].probability}};
    j["entries"] = json::array();
    for (const auto& e : l.entries)
      j["entries"].push_back({{"concept", e.concept_index}, {"formula", raw(e.formula, st)}, {"attention", e.attention},
                              {"robustness", stl::robustness(stl::affine_thresholds(e.formula, st.mean, st.scale),
                                                             data.trajectories[k])}});
    j["conjunction"] = raw(l.formula, st);
    stl::Formula final_f = l.formula;
    if (!target.empty() && !other.empty()) {
      const auto grid = explain::epsilon_grid(target, other);
      const auto r = explain::postprocess(l.formula, target, other, grid, a.outlier_fraction);
      j["postprocess"] = shift_json(r, st);
      final_f = r.formula;
    }
    j["formula"] = raw(final_f, st);
    write_report(dir, "local_" + a.traj_id, stl::affine_thresholds(final_f, st.mean, st.scale), data, y, meta, j);
    out["local"] = j;
    log(a.traj_id + " (predicted " + std::to_string(y) + "): " + j["formula"].get<std::string>());
  } else {
    std::vector<explain::LocalExplanation> locals;
    for (std::size_t k = 0; k < data.size(); ++k)
      locals.push_back(explain::explain_local(pred[k].attention, std_all.trajectories[k], cs, a.k_top, a.sim,
                                              data.labels[k], data.ids[k]));
    std::vector<int> classes = a.classes;
    if (classes.empty()) {
      std::set<int> s(data.labels.begin(), data.labels.end());
      classes.assign(s.begin(), s.end());
    }
    out["global"] = json::array();
    for (int y : classes) {
      const auto target = std_all.of_class(y), other = others(std_all, y);
      if (target.empty()) throw ConfigError("explain: no trajectories of class " + std::to_string(y));
      if (other.empty()) throw ConfigError("explain: class " + std::to_string(y) + " is the only class in the data");
      const auto gl = explain::explain_global(locals, y, cs, target, other, a.sim, {}, a.outlier_fraction);
      json j = {{"class", y}, {"trajectories", gl.trajectories}, {"formula", raw(gl.formula, st)}};
      j["batch"] = json::array();
      for (std::size_t i = 0; i < gl.batch.size(); ++i)
        j["batch"].push_back({{"concept", gl.batch[i]}, {"formula", raw(bank.formulas[gl.batch[i]], st)},
                              {"count", gl.batch_counts[i]}});
      j["survivors"] = json::array();
      for (std::size_t i = 0; i < gl.survivors.size(); ++i) {
        auto s = shift_json(gl.processed[i], st);
        s["concept"] = gl.survivors[i];
        j["survivors"].push_back(s);
      }
      write_report(dir, "global_class_" + std::to_string(y), stl::affine_thresholds(gl.formula, st.mean, st.scale), data,
                   y, meta, j);
      log("class " + std::to_string(y) + ": " + j["formula"].get<std::string>());
      out["global"].push_back(j);
    }
  }
  persist::write_json(dir / "explanation.json", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-based STL explanations for trajectory classification"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Global seed; data, bank and training use named sub-streams of it")->capture_default_str();
  app.add_flag("-q,--quiet", g.quiet, "Only report errors");

  GenData gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic labeled trajectory set (CSV)");
  c_gen->add_option("--dataset", gd.dataset, "cruise or maritime")
      ->check(CLI::IsMember({"cruise", "maritime"}))
      ->capture_default_str();
  c_gen->add_option("--n", gd.n, "Number of trajectories (0 = dataset default)")->capture_default_str();
  c_gen->add_option("--length", gd.length, "Samples per trajectory")->capture_default_str();
  c_gen->add_option("--outliers", gd.outliers, "Borderline trajectories (cruise only)")->capture_default_str();
  c_gen->add_option("-o,--out", gd.out, "Output CSV")->capture_default_str();

  BuildBank bb;
  auto* c_bank = app.add_subcommand("build-bank", "Build the STL concept bank");
  c_bank->add_option("--data", bb.data, "Trajectory CSV fixing dimensions and horizon");
  c_bank->add_option("--dims", bb.dims, "Signal dimensions when --data is absent")->capture_default_str();
  c_bank->add_option("--length", bb.length, "Trajectory length when --data is absent")->capture_default_str();
  c_bank->add_option("--max-nodes", bb.max_nodes, "Maximum formula size")->capture_default_str();
  c_bank->add_option("--tau", bb.tau, "Signature filter cosine-distance threshold")->capture_default_str();
  c_bank->add_option("--bank-size", bb.bank_size, "Concepts to select")->capture_default_str();
  c_bank->add_option("--basis-size", bb.basis_size, "Monte Carlo kernel basis size")->capture_default_str();
  c_bank->add_option("--embed-dim", bb.embed_dim, "Kernel PCA dimension")->capture_default_str();
  c_bank->add_option("-o,--out", bb.out, "Output directory")->capture_default_str();

  Train tr;
  auto* c_train = app.add_subcommand("train", "Train the attention classifier, one model per seed");
  c_train->add_option("--data", tr.data, "Trajectory CSV")->required();
  c_train->add_option("--bank", tr.bank, "Concept bank directory")->required();
  c_train->add_option("--epochs", tr.epochs)->capture_default_str();
  c_train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  c_train->add_option("--seeds", tr.seeds, "Independent training runs")->capture_default_str();
  c_train->add_option("--batch", tr.batch, "Minibatch size")->capture_default_str();
  c_train->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  c_train->add_option("--d-att", tr.d_att, "Attention width")->capture_default_str();
  c_train->add_option("--hidden", tr.hidden, "MLP hidden units")->capture_default_str();
  c_train->add_option("--test-fraction", tr.test_fraction, "Held-out fraction per class")->capture_default_str();
  c_train->add_option("-o,--out", tr.out, "Output directory")->capture_default_str();

  Eval ev;
  auto* c_eval = app.add_subcommand("eval", "Accuracy of every run on the held-out split");
  c_eval->add_option("--data", ev.data, "Trajectory CSV used for training")->required();
  c_eval->add_option("--bank", ev.bank, "Concept bank directory")->required();
  c_eval->add_option("--model", ev.model, "Model directory")->required();
  c_eval->add_option("-o,--out", ev.out, "Metrics JSON")->capture_default_str();

  Explain ex;
  auto* c_explain = app.add_subcommand("explain", "Local (--traj-id) or global (--class) explanations");
  c_explain->add_option("--data", ex.data, "Trajectory CSV")->required();
  c_explain->add_option("--bank", ex.bank, "Concept bank directory")->required();
  c_explain->add_option("--model", ex.model, "Model directory")->required();
  auto* o_id = c_explain->add_option("--traj-id", ex.traj_id, "Explain one trajectory");
  c_explain->add_option("--class", ex.classes, "Explain these classes (default: all)")->excludes(o_id);
  c_explain->add_option("--run", ex.run, "Which training run to explain")->capture_default_str();
  c_explain->add_option("--k-top", ex.k_top, "Concepts kept per local explanation")->capture_default_str();
  c_explain->add_option("--sim", ex.sim, "Kernel-similarity filter threshold")->capture_default_str();
  c_explain->add_option("--outlier-fraction", ex.outlier_fraction, "Sign errors tolerated by post-processing")
      ->capture_default_str();
  c_explain->add_option("-o,--out", ex.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const Logger log(g.quiet);
  try {
    if (c_gen->parsed()) return gen_data(gd, g, app, log);
    if (c_bank->parsed()) return build_bank(bb, g, app, log);
    if (c_train->parsed()) return train(tr, g, app, log);
    if (c_eval->parsed()) return eval(ev, g, app, log);
    if (c_explain->parsed()) return explain_cmd(ex, g, app, log);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
