#pragma once

// Concept bank construction: template enumeration, parameter instantiation,
// signature-based deduplication and Latin hypercube selection in the kernel
// embedding space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecats/error.hpp"
#include "ecats/kernel.hpp"
#include "ecats/random.hpp"
#include "ecats/stl.hpp"
#include "ecats/stl_text.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::concepts {

using stl::Formula;
using stl::Interval;

/// A formula skeleton. Atom thresholds and interval bounds are parameter
/// slots, numbered in pre-order (the skeleton stores 0 and [0,0]).
struct Template {
  Formula skeleton;
  std::size_t threshold_slots = 0;
  std::size_t interval_slots = 0;

  std::size_t param_arity() const noexcept { return threshold_slots + interval_slots; }
};

namespace detail {

inline void count_slots(const Formula& f, std::size_t& thresholds, std::size_t& intervals) {
  f.visit(stl::overloaded{
      [&](const stl::node::True&) {},
      [&](const stl::node::Atom&) { ++thresholds; },
      [&](const stl::node::Not& n) { count_slots(n.arg, thresholds, intervals); },
      [&](const stl::node::And& n) {
        count_slots(n.lhs, thresholds, intervals);
        count_slots(n.rhs, thresholds, intervals);
      },
      [&](const stl::node::Or& n) {
        count_slots(n.lhs, thresholds, intervals);
        count_slots(n.rhs, thresholds, intervals);
      },
      [&](const stl::node::Eventually& n) {
        ++intervals;
        count_slots(n.arg, thresholds, intervals);
      },
      [&](const stl::node::Globally& n) {
        ++intervals;
        count_slots(n.arg, thresholds, intervals);
      },
      [&](const stl::node::Until& n) {
        ++intervals;
        count_slots(n.lhs, thresholds, intervals);
        count_slots(n.rhs, thresholds, intervals);
      },
  });
}

inline Template make_template(const Formula& f) {
  Template t{f};
  count_slots(f, t.threshold_slots, t.interval_slots);
  return t;
}

}  // namespace detail

/// Template enumeration. Templates of size m are unary operators
/// (F, G, not) over size m-1 templates and binary operators (and, or, U) over
/// pairs of sizes l <= r. With `count_operator_nodes` the binary operator takes
/// a node itself (l + r = m - 1), so every template has node_count <= max_nodes;
/// otherwise l + r = m. Structural duplicates are removed, first occurrence wins.
inline std::vector<Template> enumerate_templates(std::size_t max_nodes, std::size_t max_vars,
                                                 bool count_operator_nodes = true) {
  if (max_nodes < 1) throw ConfigError("enumerate_templates: max_nodes must be >= 1");
  if (max_vars < 1) throw ConfigError("enumerate_templates: max_vars must be >= 1");
  const Interval slot{0, 0};
  std::vector<std::vector<Formula>> by_size(max_nodes + 1);
  for (std::size_t i = 0; i < max_vars; ++i) {
    by_size[1].push_back(stl::le(i, 0));
    by_size[1].push_back(stl::ge(i, 0));
  }
  for (std::size_t m = 2; m <= max_nodes; ++m) {
    auto& out = by_size[m];
    for (const auto& f : by_size[m - 1]) {
      out.push_back(stl::eventually(slot, f));
      out.push_back(stl::globally(slot, f));
      out.push_back(stl::lnot(f));
    }
    const std::size_t total = count_operator_nodes ? m - 1 : m;
    for (std::size_t l = 1; 2 * l <= total; ++l) {
      const std::size_t r = total - l;
      const auto& left = by_size[l];
      const auto& right = by_size[r];
      for (std::size_t a = 0; a < left.size(); ++a) {
        for (std::size_t b = 0; b < right.size(); ++b) {
          // and/or are commutative: with equal sizes take each unordered pair once.
          if (l != r || a <= b) {
            out.push_back(stl::land(left[a], right[b]));
            out.push_back(stl::lor(left[a], right[b]));
          }
          out.push_back(stl::until(slot, left[a], right[b]));
          if (l != r) out.push_back(stl::until(slot, right[b], left[a]));
        }
      }
    }
  }
  std::vector<Template> templates;
  for (std::size_t m = 1; m <= max_nodes; ++m)
    for (const auto& f : by_size[m]) {
      const bool twin = std::any_of(templates.begin(), templates.end(),
                                    [&](const Template& t) { return t.skeleton == f; });
      if (!twin) templates.push_back(detail::make_template(f));
    }
  return templates;
}

/// Candidate values per parameter slot kind.
struct ParameterGrid {
  std::vector<std::vector<double>> thresholds;  // per variable
  std::vector<Interval> intervals;
};

inline const std::vector<double>& default_quantiles() {
  static const std::vector<double> q = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95};
  return q;
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ConfigError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Interval grid {0, T/4, T/2, 3T/4} x {T/4, T/2, 3T/4, T-1, unbounded}, lo <= hi.
inline std::vector<Interval> default_interval_grid(std::size_t length) {
  if (length < 4) throw ConfigError("interval grid needs trajectories of at least 4 samples");
  const int T = static_cast<int>(length);
  const std::vector<int> los = {0, T / 4, T / 2, 3 * T / 4};
  const std::vector<int> his = {T / 4, T / 2, 3 * T / 4, T - 1};
  std::vector<Interval> out;
  for (int lo : los) {
    for (int hi : his)
      if (lo <= hi && std::none_of(out.begin(), out.end(), [&](const Interval& i) { return i.lo == lo && i.hi == hi; }))
        out.emplace_back(lo, hi);
    out.push_back(Interval::from(lo));
  }
  return out;
}

/// Threshold grids from per-variable quantiles of the pooled probe values.
inline ParameterGrid make_grid(std::span<const Trajectory> probes,
                               std::span<const double> quantiles = default_quantiles()) {
  if (probes.empty()) throw ConfigError("make_grid: empty probe set");
  const std::size_t n = probes.front().dims();
  ParameterGrid g;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> pooled;
    for (const auto& xi : probes) {
      const auto c = xi.channel(i);
      pooled.insert(pooled.end(), c.begin(), c.end());
    }
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> values;
    for (double q : quantiles) values.push_back(quantile_sorted(pooled, q));
    g.thresholds.push_back(std::move(values));
  }
  g.intervals = default_interval_grid(probes.front().length());
  return g;
}

/// One parameter configuration p for a template.
struct ParamSet {
  std::vector<double> thresholds;
  std::vector<Interval> intervals;
};

/// phi(p): the template with its slots filled in pre-order.
inline Formula apply(const Template& t, const ParamSet& p) {
  if (p.thresholds.size() != t.threshold_slots || p.intervals.size() != t.interval_slots)
    throw ShapeError("apply: parameter count does not match the template");
  std::size_t ti = 0, ii = 0;
  std::function<Formula(const Formula&)> fill = [&](const Formula& f) -> Formula {
    return f.visit(stl::overloaded{
        [&](const stl::node::True&) { return f; },
        [&](const stl::node::Atom& a) { return stl::atom(a.var, a.cmp, p.thresholds[ti++]); },
        [&](const stl::node::Not& n) { return stl::lnot(fill(n.arg)); },
        [&](const stl::node::And& n) {
          auto l = fill(n.lhs);
          return stl::land(l, fill(n.rhs));
        },
        [&](const stl::node::Or& n) {
          auto l = fill(n.lhs);
          return stl::lor(l, fill(n.rhs));
        },
        [&](const stl::node::Eventually& n) {
          const Interval i = p.intervals[ii++];
          return stl::eventually(i, fill(n.arg));
        },
        [&](const stl::node::Globally& n) {
          const Interval i = p.intervals[ii++];
          return stl::globally(i, fill(n.arg));
        },
        [&](const stl::node::Until& n) {
          const Interval i = p.intervals[ii++];
          auto l = fill(n.lhs);
          return stl::until(i, l, fill(n.rhs));
        },
    });
  };
  return fill(t.skeleton);
}

namespace detail {

inline void atom_vars(const Formula& f, std::vector<std::size_t>& out) {
  f.visit(stl::overloaded{
      [&](const stl::node::Atom& a) { out.push_back(a.var); },
      [&](const stl::node::Not& n) { atom_vars(n.arg, out); },
      [&](const stl::node::And& n) {
        atom_vars(n.lhs, out);
        atom_vars(n.rhs, out);
      },
      [&](const stl::node::Or& n) {
        atom_vars(n.lhs, out);
        atom_vars(n.rhs, out);
      },
      [&](const stl::node::Eventually& n) { atom_vars(n.arg, out); },
      [&](const stl::node::Globally& n) { atom_vars(n.arg, out); },
      [&](const stl::node::Until& n) {
        atom_vars(n.lhs, out);
        atom_vars(n.rhs, out);
      },
      [&](const auto&) {},
  });
}

}  // namespace detail

/// Cartesian product of grid values over the template's slots (thresholds
/// vary fastest). Every grid interval already satisfies lo <= hi.
inline std::vector<ParamSet> instantiate_params(const Template& t, const ParameterGrid& grid) {
  std::vector<std::size_t> vars;
  detail::atom_vars(t.skeleton, vars);
  std::vector<std::size_t> radix;
  for (std::size_t v : vars) {
    if (v >= grid.thresholds.size() || grid.thresholds[v].empty())
      throw ConfigError("instantiate: empty threshold grid for x_" + std::to_string(v));
    radix.push_back(grid.thresholds[v].size());
  }
  for (std::size_t k = 0; k < t.interval_slots; ++k) {
    if (grid.intervals.empty()) throw ConfigError("instantiate: empty interval grid");
    radix.push_back(grid.intervals.size());
  }
  std::vector<ParamSet> out;
  std::vector<std::size_t> digit(radix.size(), 0);
  while (true) {
    ParamSet p;
    for (std::size_t k = 0; k < vars.size(); ++k) p.thresholds.push_back(grid.thresholds[vars[k]][digit[k]]);
    for (std::size_t k = 0; k < t.interval_slots; ++k) p.intervals.push_back(grid.intervals[digit[vars.size() + k]]);
    out.push_back(std::move(p));
    std::size_t k = 0;
    while (k < radix.size() && ++digit[k] == radix[k]) digit[k++] = 0;
    if (k == radix.size()) break;
  }
  return out;
}

inline std::vector<Formula> instantiate(const Template& t, const ParameterGrid& grid) {
  std::vector<Formula> out;
  for (const auto& p : instantiate_params(t, grid)) out.push_back(apply(t, p));
  return out;
}

/// Signature rows S(i, j) = clamp(rho(phi_i, xi_j)).
inline Eigen::MatrixXd signature_matrix(std::span<const Formula> candidates, std::span<const Trajectory> probes,
                                        double clamp = stl_kernel::kDefaultClamp) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(candidates.size()), static_cast<Eigen::Index>(probes.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i)
    s.row(static_cast<Eigen::Index>(i)) = stl_kernel::robustness_vector(candidates[i], probes, clamp).transpose();
  return s;
}

struct FilterResult {
  std::vector<std::size_t> kept;     // indices into the candidate list, in order
  std::vector<std::size_t> dropped_zero;  // zero-norm signatures
};

/// Greedy signature filter over precomputed rows: keep row i iff its cosine
/// distance to every row kept so far is strictly greater than tau.
inline FilterResult signature_filter_rows(const Eigen::MatrixXd& rows, double tau) {
  if (!(tau >= 0)) throw ConfigError("signature_filter: tau must be >= 0");
  FilterResult r;
  Eigen::MatrixXd unit(rows.cols(), 0);
  std::vector<Eigen::VectorXd> kept_units;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (norm == 0.0) {
      r.dropped_zero.push_back(static_cast<std::size_t>(i));
      continue;
    }
    const Eigen::VectorXd u = rows.row(i).transpose() / norm;
    bool keep = true;
    for (const auto& k : kept_units)
      if (1.0 - k.dot(u) <= tau) {
        keep = false;
        break;
      }
    if (keep) {
      kept_units.push_back(u);
      r.kept.push_back(static_cast<std::size_t>(i));
    }
  }
  return r;
}

inline std::vector<Formula> signature_filter(std::span<const Formula> candidates, std::span<const Trajectory> probes,
                                             double tau, double clamp = stl_kernel::kDefaultClamp) {
  if (probes.empty()) throw ConfigError("signature_filter: empty probe set");
  const auto r = signature_filter_rows(signature_matrix(candidates, probes, clamp), tau);
  std::vector<Formula> out;
  for (std::size_t i : r.kept) out.push_back(candidates[i]);
  return out;
}

struct LhsResult {
  std::vector<std::size_t> indices;  // selected concepts, exactly m distinct
  Eigen::MatrixXd points;            // m x d Latin hypercube sample
};

/// Latin hypercube sample of m points in the bounding box of the embeddings,
/// each mapped to its nearest concept; collisions are resolved by giving the
/// colliding point its nearest unused concept.
inline LhsResult lhs_select(const Eigen::MatrixXd& embeddings, std::size_t m, std::uint64_t seed) {
  const auto c = static_cast<std::size_t>(embeddings.rows());
  const Eigen::Index d = embeddings.cols();
  if (m < 1) throw ConfigError("lhs_select: m must be >= 1");
  if (m > c) throw ConfigError("lhs_select: requested " + std::to_string(m) + " concepts but only " +
                               std::to_string(c) + " are available");
  Rng rng = make_rng(seed, "lhs");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  LhsResult r;
  r.points.resize(static_cast<Eigen::Index>(m), d);
  const Eigen::VectorXd lo = embeddings.colwise().minCoeff().transpose();
  const Eigen::VectorXd hi = embeddings.colwise().maxCoeff().transpose();
  for (Eigen::Index k = 0; k < d; ++k) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t p = 0; p < m; ++p) {
      const double u = (static_cast<double>(perm[p]) + unif(rng)) / static_cast<double>(m);
      r.points(static_cast<Eigen::Index>(p), k) = lo[k] + u * (hi[k] - lo[k]);
    }
  }
  auto nearest = [&](Eigen::Index p, const std::vector<bool>* used) {
    std::size_t best = c;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c; ++i) {
      if (used && (*used)[i]) continue;
      const double dist = (embeddings.row(static_cast<Eigen::Index>(i)) - r.points.row(p)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = i;
      }
    }
    return best;
  };
  std::vector<bool> used(c, false);
  std::vector<Eigen::Index> collided;
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t i = nearest(static_cast<Eigen::Index>(p), nullptr);
    if (used[i]) {
      collided.push_back(static_cast<Eigen::Index>(p));
      continue;
    }
    used[i] = true;
    r.indices.push_back(i);
  }
  for (Eigen::Index p : collided) {
    const std::size_t i = nearest(p, &used);
    used[i] = true;
    r.indices.push_back(i);
  }
  return r;
}

struct BankConfig {
  std::size_t max_nodes = 3;
  std::size_t max_vars = 1;
  bool count_operator_nodes = true;
  double tau = 0.9;
  std::size_t bank_size = 256;
  std::size_t basis_size = stl_kernel::kDefaultBasisSize;
  std::size_t embed_dim = 30;
  double clamp = stl_kernel::kDefaultClamp;
  Mu0Params mu0;
  std::uint64_t seed = 0;
};

/// Where a bank formula came from.
struct Provenance {
  std::size_t template_id = 0;
  ParamSet params;
};

struct ConceptBank {
  std::vector<Formula> formulas;
  Eigen::MatrixXd embeddings;  // C x d
  std::vector<Provenance> provenance;
  BankConfig config;
  std::vector<Template> templates;
  ParameterGrid grid;
  std::size_t candidate_count = 0;
  std::size_t pool_size = 0;  // survivors of the signature filter
  double spectral_mass = 0.0;

  std::size_t size() const noexcept { return formulas.size(); }
  Eigen::Index dim() const noexcept { return embeddings.cols(); }
};

/// Everything build_concept_bank computed on the way, for inspection.
struct BankPool {
  std::vector<Formula> formulas;
  std::vector<Provenance> provenance;
  stl_kernel::SignatureBasis basis;
  stl_kernel::KpcaModel model;
  std::vector<std::size_t> selected;  // rows of the pool chosen by LHS
  Eigen::MatrixXd lhs_points;
};

/// enumerate -> instantiate -> signature filter per template -> gram + kPCA
/// over the surviving pool -> LHS selection. The greedy filter visits each
/// template's candidates in a seeded shuffled order, so wide and narrow
/// intervals compete on equal terms. When fewer concepts survive than
/// requested the whole pool becomes the bank and `log` gets a warning.
inline ConceptBank build_concept_bank(const BankConfig& cfg, BankPool* pool_out = nullptr,
                                      const std::function<void(const std::string&)>& log = {}) {
  auto note = [&](const std::string& s) {
    if (log) log(s);
  };
  if (cfg.bank_size < 1) throw ConfigError("build_concept_bank: bank size must be >= 1");
  ConceptBank bank;
  bank.config = cfg;
  Mu0Params mu0 = cfg.mu0;
  mu0.n_dims = cfg.max_vars;
  auto basis = stl_kernel::SignatureBasis::sample(mu0, cfg.basis_size, derive_seed(cfg.seed, "basis"), cfg.clamp);
  bank.templates = enumerate_templates(cfg.max_nodes, cfg.max_vars, cfg.count_operator_nodes);
  bank.grid = make_grid(basis.trajectories);

  BankPool pool;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t t = 0; t < bank.templates.size(); ++t) {
    auto params = instantiate_params(bank.templates[t], bank.grid);
    Rng order = make_rng(cfg.seed, "candidates", t);
    std::shuffle(params.begin(), params.end(), order);
    std::vector<Formula> cands;
    for (const auto& p : params) cands.push_back(apply(bank.templates[t], p));
    bank.candidate_count += cands.size();
    const Eigen::MatrixXd s = signature_matrix(cands, basis.trajectories, cfg.clamp);
    const auto kept = signature_filter_rows(s, cfg.tau);
    if (!kept.dropped_zero.empty())
      note("warning: template " + stl::render(bank.templates[t].skeleton) + ": dropped " +
           std::to_string(kept.dropped_zero.size()) + " candidate(s) with zero robustness on every probe");
    for (std::size_t i : kept.kept) {
      pool.formulas.push_back(cands[i]);
      pool.provenance.push_back({t, params[i]});
      rows.push_back(s.row(static_cast<Eigen::Index>(i)).transpose());
    }
  }
  bank.pool_size = pool.formulas.size();
  note(std::to_string(bank.templates.size()) + " templates, " + std::to_string(bank.candidate_count) +
       " candidates, " + std::to_string(bank.pool_size) + " after signature filtering");

  Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  const auto g = stl_kernel::gram_from_features(std::move(features), true, cfg.clamp);
  auto d = static_cast<Eigen::Index>(cfg.embed_dim);
  const Eigen::Index rank = stl_kernel::kpca_fit(g, 1).rank();
  if (d > rank) {
    note("warning: embedding dimension " + std::to_string(d) + " exceeds the numerical rank of the pool Gram matrix; using " +
         std::to_string(rank));
    d = rank;
  }
  pool.model = stl_kernel::kpca_fit(g, d);
  bank.spectral_mass = pool.model.spectral_mass(d);

  std::size_t m = cfg.bank_size;
  if (m > bank.pool_size) {
    note("warning: bank size " + std::to_string(m) + " exceeds the " + std::to_string(bank.pool_size) +
         " concepts that survive signature filtering; using all of them");
    m = bank.pool_size;
  }
  const auto sel = lhs_select(pool.model.embeddings, m, cfg.seed);
  bank.embeddings.resize(static_cast<Eigen::Index>(m), pool.model.embeddings.cols());
  for (std::size_t k = 0; k < m; ++k) {
    bank.formulas.push_back(pool.formulas[sel.indices[k]]);
    bank.provenance.push_back(pool.provenance[sel.indices[k]]);
    bank.embeddings.row(static_cast<Eigen::Index>(k)) = pool.model.embeddings.row(static_cast<Eigen::Index>(sel.indices[k]));
  }
  if (pool_out) {
    pool.basis = std::move(basis);
    pool.selected = sel.indices;
    pool.lhs_points = sel.points;
    *pool_out = std::move(pool);
  }
  return bank;
}

}  // namespace ecats::concepts
