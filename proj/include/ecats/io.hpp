#pragma once

// File helpers and CSV persistence for labeled trajectory sets.
//
// Trajectory CSV: header `traj_id,time,label,x_0[,x_1,...]`, one row per
// sample, rows grouped by traj_id with strictly increasing, evenly spaced
// times and a constant label per trajectory.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ecats/error.hpp"
#include "ecats/trajectory.hpp"

namespace ecats::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Shortest text that parses back to the identical double.
inline std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

inline std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(std::move(line));
  }
  return out;
}

inline std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += fmt(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline Eigen::MatrixXd matrix_from_csv(const std::string& text, const std::string& what = "matrix") {
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  for (const auto& line : lines(text)) {
    ++row_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (auto cell : split(line)) {
      double v;
      if (!parse_double(cell, v)) throw IoError(what + ": non-numeric cell in row " + std::to_string(row_no));
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(what + ": ragged row " + std::to_string(row_no));
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

inline std::string to_csv(const LabeledSet& set) {
  set.validate();
  const std::size_t n = set.empty() ? 1 : set.trajectories.front().dims();
  std::string out = "traj_id,time,label";
  for (std::size_t i = 0; i < n; ++i) out += ",x_" + std::to_string(i);
  out += '\n';
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto& xi = set.trajectories[k];
    for (std::size_t t = 0; t < xi.length(); ++t) {
      out += set.ids[k] + ',' + fmt(xi.time(t)) + ',' + std::to_string(set.labels[k]);
      for (std::size_t i = 0; i < n; ++i) out += ',' + fmt(xi.at(t, i));
      out += '\n';
    }
  }
  return out;
}

inline LabeledSet from_csv(const std::string& text) {
  auto all = lines(text);
  if (all.empty()) throw IoError("trajectory csv: missing header");
  auto header = split(all.front());
  if (header.size() < 4 || trim(header[0]) != "traj_id" || trim(header[1]) != "time" || trim(header[2]) != "label")
    throw IoError("trajectory csv: header must start with traj_id,time,label,x_0 (row 1)");
  const std::size_t n = header.size() - 3;
  for (std::size_t i = 0; i < n; ++i)
    if (trim(header[3 + i]) != "x_" + std::to_string(i))
      throw IoError("trajectory csv: missing column x_" + std::to_string(i) + " (row 1)");

  struct Group {
    std::string id;
    int label = 0;
    std::vector<double> times;
    std::vector<double> values;
    std::size_t first_row = 0;
  };
  std::vector<Group> groups;
  for (std::size_t r = 1; r < all.size(); ++r) {
    const std::size_t row_no = r + 1;
    if (trim(all[r]).empty()) continue;
    auto cells = split(all[r]);
    if (cells.size() != header.size())
      throw IoError("trajectory csv: expected " + std::to_string(header.size()) + " columns in row " +
                    std::to_string(row_no));
    std::string id(trim(cells[0]));
    double time, label;
    if (!parse_double(cells[1], time)) throw IoError("trajectory csv: non-numeric time in row " + std::to_string(row_no));
    if (!parse_double(cells[2], label) || (label != 0.0 && label != 1.0))
      throw IoError("trajectory csv: label must be 0 or 1 in row " + std::to_string(row_no));
    if (groups.empty() || groups.back().id != id) {
      for (const auto& g : groups)
        if (g.id == id) throw IoError("trajectory csv: rows of traj_id '" + id + "' are not contiguous (row " + std::to_string(row_no) + ")");
      groups.push_back({id, static_cast<int>(label), {}, {}, row_no});
    } else if (groups.back().label != static_cast<int>(label)) {
      throw IoError("trajectory csv: label changes within traj_id '" + id + "' in row " + std::to_string(row_no));
    }
    auto& g = groups.back();
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      if (!parse_double(cells[3 + i], v) || !std::isfinite(v))
        throw IoError("trajectory csv: non-numeric cell x_" + std::to_string(i) + " in row " + std::to_string(row_no));
      g.values.push_back(v);
    }
    g.times.push_back(time);
  }
  if (groups.empty()) throw IoError("trajectory csv: no trajectories");

  LabeledSet set;
  for (const auto& g : groups) {
    const std::size_t len = g.times.size();
    if (len < 2) throw IoError("trajectory csv: traj_id '" + g.id + "' has fewer than 2 samples (row " + std::to_string(g.first_row) + ")");
    if (len != groups.front().times.size())
      throw IoError("trajectory csv: ragged trajectory lengths at traj_id '" + g.id + "' (row " + std::to_string(g.first_row) + ")");
    const double dt = g.times[1] - g.times[0];
    if (!(dt > 0)) throw IoError("trajectory csv: time not strictly increasing (row " + std::to_string(g.first_row + 1) + ")");
    for (std::size_t t = 1; t < len; ++t) {
      const double step = g.times[t] - g.times[t - 1];
      if (!(step > 0) || std::abs(step - dt) > 1e-6 * dt)
        throw IoError("trajectory csv: non-uniform time step (row " + std::to_string(g.first_row + t) + ")");
    }
    // Recover the step from the endpoints to avoid accumulating text rounding.
    const double dt_fit = (g.times.back() - g.times.front()) / static_cast<double>(len - 1);
    Trajectory xi(len, n, dt_fit, g.times.front());
    for (std::size_t t = 0; t < len; ++t)
      for (std::size_t i = 0; i < n; ++i) xi.at(t, i) = g.values[t * n + i];
    set.push_back(std::move(xi), g.label, g.id);
  }
  try {
    set.validate();
  } catch (const ShapeError& e) {
    throw IoError(std::string("trajectory csv: ") + e.what());
  }
  return set;
}

inline LabeledSet load_csv(const std::filesystem::path& path) { return from_csv(read_file(path)); }
inline void save_csv(const LabeledSet& set, const std::filesystem::path& path) { write_file(path, to_csv(set)); }

}  // namespace ecats::io
