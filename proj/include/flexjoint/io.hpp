#pragma once

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "flexjoint/analysis.hpp"
#include "flexjoint/bayes_opt.hpp"
#include "flexjoint/control.hpp"
#include "flexjoint/fuzzy.hpp"
#include "flexjoint/metrics.hpp"
#include "flexjoint/plant.hpp"

// Text formats: key = value files, CSV tables. Numbers are written in the
// shortest form that parses back to the same double.
namespace flexjoint::io {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

inline constexpr std::string_view kNone = "none";

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kNone);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_optional(std::string_view s) {
  if (trim(s) == kNone) return std::nullopt;
  auto v = parse_double(s);
  if (!v) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// ---- key = value files ----

struct KeyValue {
  std::string key;
  double value = 0.0;
  int line = 0;
};

// Blank lines and '#' comments are skipped; duplicate keys are rejected.
inline std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& source) {
  std::vector<KeyValue> out;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int ln = static_cast<int>(i) + 1;
    std::string_view line = lines[i];
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == line.npos) throw ParseError(source, ln, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError(source, ln, "empty key");
    const auto v = parse_double(line.substr(eq + 1));
    if (!v) throw ParseError(source, ln, "bad number for '" + key + "'");
    if (!std::isfinite(*v)) throw ParseError(source, ln, "non-finite value for '" + key + "'");
    for (const auto& kv : out) {
      if (kv.key == key) throw ParseError(source, ln, "duplicate key '" + key + "'");
    }
    out.push_back({key, *v, ln});
  }
  return out;
}

struct GainsFile {
  control::GainSet gains;
  fuzzy::FlrBounds flr;
  std::vector<std::string> notes;
};

inline constexpr std::array<std::string_view, 4> kGainKeys = {"kp1", "kd1", "kp2", "kd2"};
inline constexpr std::array<std::string_view, 8> kFlrKeys = {"dkp1_lo", "dkp1_hi", "dkd1_lo", "dkd1_hi",
                                                             "dkp2_lo", "dkp2_hi", "dkd2_lo", "dkd2_hi"};

inline std::array<fuzzy::GainRange*, 4> flr_pairs(fuzzy::FlrBounds& b) { return {&b.dkp1, &b.dkd1, &b.dkp2, &b.dkd2}; }
inline std::array<const fuzzy::GainRange*, 4> flr_pairs(const fuzzy::FlrBounds& b) {
  return {&b.dkp1, &b.dkd1, &b.dkp2, &b.dkd2};
}

// Pairs with lo > hi are kept as written (the regulator places NB at lo);
// a note is recorded for each, and analysis uses the ordered interval.
inline GainsFile parse_gains(const std::string& text, const std::string& source = "gains") {
  GainsFile f;
  std::array<double*, 4> gain_slots = {&f.gains.kp1, &f.gains.kd1, &f.gains.kp2, &f.gains.kd2};
  std::array<bool, 4> seen{};
  auto pairs = flr_pairs(f.flr);
  for (const auto& kv : parse_key_values(text, source)) {
    bool known = false;
    for (std::size_t i = 0; i < kGainKeys.size(); ++i) {
      if (kv.key == kGainKeys[i]) {
        if (kv.value < 0.0) throw ParseError(source, kv.line, "gain '" + kv.key + "' must be >= 0");
        *gain_slots[i] = kv.value;
        seen[i] = true;
        known = true;
      }
    }
    for (std::size_t i = 0; i < kFlrKeys.size(); ++i) {
      if (kv.key == kFlrKeys[i]) {
        (i % 2 == 0 ? pairs[i / 2]->lo : pairs[i / 2]->hi) = kv.value;
        known = true;
      }
    }
    if (!known) throw ParseError(source, kv.line, "unknown key '" + kv.key + "'");
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ParseError(source, 0, "missing key '" + std::string(kGainKeys[i]) + "'");
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i]->reversed()) {
      const std::string name(kFlrKeys[2 * i].substr(0, 4));
      f.notes.push_back(name + ": lo > hi (" + format_double(pairs[i]->lo) + " > " + format_double(pairs[i]->hi) +
                        "); ordered interval [" + format_double(pairs[i]->lower()) + ", " +
                        format_double(pairs[i]->upper()) + "] used for analysis");
    }
  }
  return f;
}

inline GainsFile load_gains(const std::string& path) { return parse_gains(read_file(path), path); }

inline std::string format_gains(const control::GainSet& g, const fuzzy::FlrBounds& flr) {
  std::string out;
  const std::array<double, 4> gv = {g.kp1, g.kd1, g.kp2, g.kd2};
  for (std::size_t i = 0; i < gv.size(); ++i) out += std::string(kGainKeys[i]) + " = " + format_double(gv[i]) + "\n";
  const auto pairs = flr_pairs(flr);
  for (std::size_t i = 0; i < kFlrKeys.size(); ++i) {
    const double v = i % 2 == 0 ? pairs[i / 2]->lo : pairs[i / 2]->hi;
    out += std::string(kFlrKeys[i]) + " = " + format_double(v) + "\n";
  }
  return out;
}

// Single-loop baseline: keys kp and kd, both required.
inline control::SingleGains parse_single_gains(const std::string& text, const std::string& source = "single") {
  control::SingleGains g;
  bool kp = false;
  bool kd = false;
  for (const auto& kv : parse_key_values(text, source)) {
    if (kv.value < 0.0) throw ParseError(source, kv.line, "gain '" + kv.key + "' must be >= 0");
    if (kv.key == "kp") {
      g.kp = kv.value;
      kp = true;
    } else if (kv.key == "kd") {
      g.kd = kv.value;
      kd = true;
    } else {
      throw ParseError(source, kv.line, "unknown key '" + kv.key + "'");
    }
  }
  if (!kp) throw ParseError(source, 0, "missing key 'kp'");
  if (!kd) throw ParseError(source, 0, "missing key 'kd'");
  return g;
}

inline control::SingleGains load_single_gains(const std::string& path) {
  return parse_single_gains(read_file(path), path);
}

inline std::string format_single_gains(const control::SingleGains& g) {
  return "kp = " + format_double(g.kp) + "\nkd = " + format_double(g.kd) + "\n";
}

inline constexpr std::array<std::string_view, 7> kPlantKeys = {"m", "g", "l", "I_l", "I_m", "k", "mu"};

// Missing keys keep their default values.
inline plant::PlantParams parse_plant(const std::string& text, const std::string& source = "plant") {
  plant::PlantParams p;
  std::array<double*, 7> slots = {&p.m, &p.g, &p.l, &p.I_l, &p.I_m, &p.k, &p.mu};
  for (const auto& kv : parse_key_values(text, source)) {
    bool known = false;
    for (std::size_t i = 0; i < kPlantKeys.size(); ++i) {
      if (kv.key == kPlantKeys[i]) {
        *slots[i] = kv.value;
        known = true;
      }
    }
    if (!known) throw ParseError(source, kv.line, "unknown key '" + kv.key + "'");
  }
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  return p;
}

inline plant::PlantParams load_plant(const std::string& path) { return parse_plant(read_file(path), path); }

inline std::string format_plant(const plant::PlantParams& p) {
  const std::array<double, 7> v = {p.m, p.g, p.l, p.I_l, p.I_m, p.k, p.mu};
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += std::string(kPlantKeys[i]) + " = " + format_double(v[i]) + "\n";
  return out;
}

// Four rows of four numbers separated by whitespace or commas.
inline Eigen::Matrix4d parse_matrix4(const std::string& text, const std::string& source = "matrix") {
  Eigen::Matrix4d A;
  int row = 0;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (const auto hash = line.find('#'); hash != line.npos) line.resize(hash);
    for (char& c : line) {
      if (c == ',' || c == '\t') c = ' ';
    }
    std::istringstream ss(line);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) {
      const auto v = parse_double(tok);
      if (!v) throw ParseError(source, static_cast<int>(i) + 1, "bad number '" + tok + "'");
      vals.push_back(*v);
    }
    if (vals.empty()) continue;
    if (vals.size() != 4) throw ParseError(source, static_cast<int>(i) + 1, "expected 4 entries per row");
    if (row == 4) throw ParseError(source, static_cast<int>(i) + 1, "more than 4 rows");
    for (int c = 0; c < 4; ++c) A(row, c) = vals[static_cast<std::size_t>(c)];
    ++row;
  }
  if (row != 4) throw ParseError(source, static_cast<int>(lines.size()), "expected 4 rows");
  return A;
}

inline Eigen::Matrix4d load_matrix4(const std::string& path) { return parse_matrix4(read_file(path), path); }

// ---- CSV ----

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline Table parse_csv(const std::string& text, const std::string& source = "csv") {
  Table t;
  const auto lines = lines_of(text);
  if (lines.empty()) throw ParseError(source, 1, "missing header");
  t.header = split(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto cells = split(lines[i]);
    if (cells.size() != t.header.size()) throw ParseError(source, static_cast<int>(i) + 1, "column count mismatch");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + "\n";
}

inline const std::vector<std::string>& trajectory_header() {
  static const std::vector<std::string> h = {"t",  "x1", "x2", "x3", "x4", "x1d", "x3d", "u",
                                             "e1", "e2", "e3", "e4", "kp1_eff", "kd1_eff", "kp2_eff", "kd2_eff"};
  return h;
}

inline std::string format_trajectory(const control::Trajectory& traj) {
  std::string out = join(trajectory_header());
  for (const auto& r : traj.records) {
    out += join({format_double(r.t), format_double(r.state.x1), format_double(r.state.x2), format_double(r.state.x3),
                 format_double(r.state.x4), format_double(r.x1d), format_double(r.x3d), format_double(r.u),
                 format_double(r.e1), format_double(r.e2), format_double(r.e3), format_double(r.e4),
                 format_double(r.effective.kp1), format_double(r.effective.kd1), format_double(r.effective.kp2),
                 format_double(r.effective.kd2)});
  }
  return out;
}

inline double cell_double(const std::string& cell, const std::string& source, int line) {
  const auto v = parse_double(cell);
  if (!v) throw ParseError(source, line, "bad number '" + cell + "'");
  return *v;
}

inline void expect_header(const Table& t, const std::vector<std::string>& want, const std::string& source) {
  if (t.header != want) throw ParseError(source, 1, "unexpected header");
}

inline std::vector<control::Record> parse_trajectory(const std::string& text, const std::string& source = "trajectory") {
  const Table t = parse_csv(text, source);
  expect_header(t, trajectory_header(), source);
  std::vector<control::Record> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::array<double, 16> v{};
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = cell_double(t.rows[i][c], source, static_cast<int>(i) + 2);
    out.push_back({v[0], {v[1], v[2], v[3], v[4]}, v[5], v[6], v[7], v[8], v[9], v[10], v[11],
                   {v[12], v[13], v[14], v[15]}});
  }
  return out;
}

inline const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h = {"cost", "overshoot_pct", "settling_time_s", "steady_state_error", "rms_error"};
  return h;
}

inline std::string format_metrics(const metrics::Metrics& m) {
  return join(metrics_header()) + join({format_optional(m.cost), format_optional(m.overshoot_pct),
                                        format_optional(m.settling_time), format_double(m.steady_state_error),
                                        format_double(m.rms_error)});
}

inline metrics::Metrics parse_metrics(const std::string& text, const std::string& source = "metrics") {
  const Table t = parse_csv(text, source);
  expect_header(t, metrics_header(), source);
  if (t.rows.size() != 1) throw ParseError(source, 2, "expected one row");
  const auto& r = t.rows.front();
  try {
    return {parse_optional(r[0]), parse_optional(r[1]), parse_optional(r[2]), parse_optional(r[3]).value(),
            parse_optional(r[4]).value()};
  } catch (const std::exception& e) {
    throw ParseError(source, 2, e.what());
  }
}

inline std::string format_history(const tuning::Domain& domain, const std::vector<tuning::Episode>& history) {
  std::vector<std::string> header = {"episode"};
  for (const auto& d : domain.dims) header.push_back(d.name);
  header.insert(header.end(), {"y", "best_y"});
  std::string out = join(header);
  for (const auto& ep : history) {
    std::vector<std::string> row = {std::to_string(ep.episode)};
    for (Eigen::Index j = 0; j < ep.x.size(); ++j) row.push_back(format_double(ep.x(j)));
    row.push_back(format_double(ep.y));
    row.push_back(format_double(ep.best_y));
    out += join(row);
  }
  return out;
}

inline std::vector<tuning::Episode> parse_history(const std::string& text, const std::string& source = "history") {
  const Table t = parse_csv(text, source);
  if (t.header.size() < 3 || t.header.front() != "episode" || t.header[t.header.size() - 2] != "y" ||
      t.header.back() != "best_y") {
    throw ParseError(source, 1, "unexpected header");
  }
  const std::size_t dims = t.header.size() - 3;
  std::vector<tuning::Episode> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const int ln = static_cast<int>(i) + 2;
    const auto& r = t.rows[i];
    tuning::Episode ep;
    ep.episode = static_cast<int>(cell_double(r[0], source, ln));
    ep.x.resize(static_cast<Eigen::Index>(dims));
    for (std::size_t j = 0; j < dims; ++j) ep.x(static_cast<Eigen::Index>(j)) = cell_double(r[1 + j], source, ln);
    ep.y = cell_double(r[dims + 1], source, ln);
    ep.best_y = cell_double(r[dims + 2], source, ln);
    ep.failed = ep.y == tuning::kFailurePenalty;
    out.push_back(std::move(ep));
  }
  return out;
}

struct AblationRow {
  std::string controller;
  std::optional<double> cost;
  std::optional<double> overshoot;
  std::optional<double> settling;
  std::string status;  // "ok" or "diverged"
  bool operator==(const AblationRow&) const = default;
};

inline const std::vector<std::string>& ablation_header() {
  static const std::vector<std::string> h = {"controller", "cost", "overshoot_pct", "settling_time_s", "status"};
  return h;
}

inline std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::string out = join(ablation_header());
  for (const auto& r : rows) {
    out += join({r.controller, format_optional(r.cost), format_optional(r.overshoot), format_optional(r.settling),
                 r.status});
  }
  return out;
}

inline std::vector<AblationRow> parse_ablation(const std::string& text, const std::string& source = "ablation") {
  const Table t = parse_csv(text, source);
  expect_header(t, ablation_header(), source);
  std::vector<AblationRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    try {
      out.push_back({r[0], parse_optional(r[1]), parse_optional(r[2]), parse_optional(r[3]), r[4]});
    } catch (const std::exception& e) {
      throw ParseError(source, static_cast<int>(i) + 2, e.what());
    }
  }
  return out;
}

// One row per eigenvalue, pole or condition. Fields that do not apply are
// written as "none".
struct AnalysisRow {
  std::string kind;  // eigenvalue, block_eigenvalue, pole, charpoly, condition
  std::string set;   // nominal, worst_case, input
  std::string name;
  std::optional<double> real;
  std::optional<double> imag;
  std::optional<double> lhs;
  std::optional<double> rhs;
  std::string satisfied = std::string(kNone);
  bool operator==(const AnalysisRow&) const = default;
};

inline const std::vector<std::string>& analysis_header() {
  static const std::vector<std::string> h = {"kind", "set", "name", "real", "imag", "lhs", "rhs", "satisfied"};
  return h;
}

inline std::string format_analysis(const std::vector<AnalysisRow>& rows) {
  std::string out = join(analysis_header());
  for (const auto& r : rows) {
    out += join({r.kind, r.set, r.name, format_optional(r.real), format_optional(r.imag), format_optional(r.lhs),
                 format_optional(r.rhs), r.satisfied});
  }
  return out;
}

inline std::vector<AnalysisRow> parse_analysis(const std::string& text, const std::string& source = "analysis") {
  const Table t = parse_csv(text, source);
  expect_header(t, analysis_header(), source);
  std::vector<AnalysisRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    try {
      out.push_back({r[0], r[1], r[2], parse_optional(r[3]), parse_optional(r[4]), parse_optional(r[5]),
                     parse_optional(r[6]), r[7]});
    } catch (const std::exception& e) {
      throw ParseError(source, static_cast<int>(i) + 2, e.what());
    }
  }
  return out;
}

inline void append_spectrum(std::vector<AnalysisRow>& rows, const std::string& kind, const std::string& set,
                            const analysis::Spectrum& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    rows.push_back({kind, set, "lambda" + std::to_string(i + 1), s[i].real(), s[i].imag(), {}, {}, std::string(kNone)});
  }
}

inline void append_verdict(std::vector<AnalysisRow>& rows, const std::string& set, const analysis::Verdict& v) {
  for (const auto& c : v.conditions) {
    rows.push_back({"condition", set, c.name, {}, {}, c.lhs, c.rhs, c.satisfied ? "true" : "false"});
  }
}

}  // namespace flexjoint::io
