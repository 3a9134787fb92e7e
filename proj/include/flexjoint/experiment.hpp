#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flexjoint/analysis.hpp"
#include "flexjoint/bayes_opt.hpp"
#include "flexjoint/control.hpp"
#include "flexjoint/io.hpp"
#include "flexjoint/metrics.hpp"
#include "flexjoint/objectives.hpp"
#include "flexjoint/plant.hpp"

// Whole experiments: one simulation, the ablation table, a tuning stage,
// and the stability report. Used by the command-line tool.
namespace flexjoint::experiment {

inline constexpr std::string_view kDisturbanceRng = "splitmix64 counter hash (seed, stream, index)";
inline constexpr std::string_view kTunerRng = "mt19937_64, 53-bit uniform";

struct ExperimentConfig {
  plant::PlantParams plant;
  plant::SimConfig sim;
  control::ControllerKind controller = control::ControllerKind::fuzzy_cascaded;
  control::GainSet gains = control::GainSet::tuned();
  fuzzy::FlrBounds flr = control::tuned_flr_bounds();
  control::SingleGains single;
  control::Reference reference = control::Reference::square();
  plant::DisturbanceModel disturbance = plant::DisturbanceModel::uniform(10.0, 1);
  std::string out = ".";

  control::Controller make_controller(control::ControllerKind kind) const {
    if (kind == control::ControllerKind::single_pd) return control::Controller::single(single);
    return {kind, gains, flr};
  }
  control::Controller make_controller() const { return make_controller(controller); }
};

inline std::string_view reference_name(control::ReferenceKind k) {
  switch (k) {
    case control::ReferenceKind::square: return "square";
    case control::ReferenceKind::sine: return "sine";
    case control::ReferenceKind::constant: return "constant";
  }
  return "square";
}

inline std::optional<control::ReferenceKind> parse_reference(std::string_view s) {
  for (auto k : {control::ReferenceKind::square, control::ReferenceKind::sine, control::ReferenceKind::constant}) {
    if (reference_name(k) == s) return k;
  }
  return std::nullopt;
}

inline std::string_view hold_name(plant::DisturbanceHold h) {
  return h == plant::DisturbanceHold::per_sim_step ? "per-sim-step" : "per-control-step";
}

inline std::optional<plant::DisturbanceHold> parse_hold(std::string_view s) {
  if (s == "per-sim-step") return plant::DisturbanceHold::per_sim_step;
  if (s == "per-control-step") return plant::DisturbanceHold::per_control_step;
  return std::nullopt;
}

// Resolved configuration as key = value lines, written next to every output.
class Metadata {
 public:
  Metadata& add(std::string key, std::string value) {
    lines_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Metadata& add(std::string key, double value) { return add(std::move(key), io::format_double(value)); }

  std::string text() const {
    std::string out;
    for (const auto& [k, v] : lines_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

inline Metadata describe(const ExperimentConfig& c, std::string_view command) {
  Metadata m;
  m.add("command", std::string(command));
  const auto& p = c.plant;
  m.add("plant.m", p.m).add("plant.g", p.g).add("plant.l", p.l).add("plant.I_l", p.I_l).add("plant.I_m", p.I_m);
  m.add("plant.k", p.k).add("plant.mu", p.mu);
  m.add("sim.sim_dt", c.sim.sim_dt).add("sim.control_dt", c.sim.control_dt).add("sim.horizon", c.sim.horizon);
  m.add("sim.integrator", "forward-euler, zero-order hold");
  m.add("controller", std::string(control::controller_name(c.controller)));
  m.add("gains.kp1", c.gains.kp1).add("gains.kd1", c.gains.kd1).add("gains.kp2", c.gains.kp2);
  m.add("gains.kd2", c.gains.kd2);
  const auto pairs = io::flr_pairs(c.flr);
  for (std::size_t i = 0; i < io::kFlrKeys.size(); ++i) {
    m.add("flr." + std::string(io::kFlrKeys[i]), i % 2 == 0 ? pairs[i / 2]->lo : pairs[i / 2]->hi);
  }
  m.add("single.kp", c.single.kp).add("single.kd", c.single.kd);
  m.add("reference", std::string(reference_name(c.reference.kind)));
  if (c.reference.kind == control::ReferenceKind::constant) m.add("reference.value", c.reference.value);
  const bool on = c.disturbance.kind == plant::DisturbanceKind::uniform;
  m.add("disturbance", on ? "uniform" : "off");
  m.add("disturbance.amplitude", c.disturbance.amplitude);
  m.add("disturbance.hold", std::string(hold_name(c.disturbance.hold)));
  m.add("seed", std::to_string(c.disturbance.seed));
  m.add("disturbance.rng", std::string(kDisturbanceRng));
  return m;
}

struct SimulationRun {
  control::Trajectory trajectory;
  std::optional<metrics::Metrics> metrics;
  std::string metrics_error;
};

// Divergence propagates as control::DivergenceError.
inline SimulationRun run_simulation(const ExperimentConfig& c) {
  SimulationRun run;
  run.trajectory = control::simulate(c.plant, c.sim, c.make_controller(), c.reference, c.disturbance);
  try {
    run.metrics = metrics::compute(run.trajectory, c.reference, c.sim.control_dt);
  } catch (const metrics::DegenerateMetrics& e) {
    run.metrics_error = e.what();
  }
  return run;
}

inline constexpr std::array<control::ControllerKind, 5> kAblationOrder = {
    control::ControllerKind::fuzzy_cascaded, control::ControllerKind::cascaded_pd,
    control::ControllerKind::fuzzy1_pd2, control::ControllerKind::pd1_fuzzy2, control::ControllerKind::single_pd};

// Every row sees the same disturbance sequence; a diverged row is reported
// with status "diverged" and no numbers.
inline std::vector<io::AblationRow> run_ablation(const ExperimentConfig& c) {
  std::vector<io::AblationRow> rows;
  for (auto kind : kAblationOrder) {
    io::AblationRow row;
    row.controller = std::string(control::controller_name(kind));
    try {
      const auto traj = control::simulate(c.plant, c.sim, c.make_controller(kind), c.reference, c.disturbance);
      const auto m = metrics::compute(traj, c.reference, c.sim.control_dt);
      row.cost = m.cost;
      row.overshoot = m.overshoot_pct;
      row.settling = m.settling_time;
      row.status = "ok";
    } catch (const control::DivergenceError&) {
      row.status = "diverged";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class TuneStage { pd, flr, single };

inline std::string_view stage_name(TuneStage s) {
  switch (s) {
    case TuneStage::pd: return "pd";
    case TuneStage::flr: return "flr";
    case TuneStage::single: return "single";
  }
  return "pd";
}

inline std::optional<TuneStage> parse_stage(std::string_view s) {
  for (auto k : {TuneStage::pd, TuneStage::flr, TuneStage::single}) {
    if (stage_name(k) == s) return k;
  }
  return std::nullopt;
}

struct TuneRun {
  tuning::Domain domain;
  tuning::SmboResult result;
  control::GainSet gains;  // stage pd: best; stage flr: the frozen base
  fuzzy::FlrBounds flr;
  control::SingleGains single;
};

// Episodes use the square reference and the configured disturbance. Stage
// flr keeps c.gains fixed and searches the eight range labels.
inline TuneRun run_tuning(TuneStage stage, const ExperimentConfig& c, const tuning::TunerConfig& tc,
                          const std::function<void(const tuning::Episode&)>& on_episode = {}) {
  tuning::EpisodeSetup setup{c.plant, c.sim, control::Reference::square(), c.disturbance};
  TuneRun run;
  tuning::CostFunction cost;
  switch (stage) {
    case TuneStage::pd:
      run.domain = tuning::pd_domain();
      cost = tuning::pd_cost(setup);
      break;
    case TuneStage::flr:
      run.domain = tuning::flr_domain();
      cost = tuning::flr_cost(setup, c.gains);
      break;
    case TuneStage::single:
      run.domain = tuning::single_pd_domain();
      cost = tuning::single_pd_cost(setup);
      break;
  }
  run.result = tuning::smbo(cost, run.domain, tc, on_episode);
  const Eigen::VectorXd& x = run.result.best_x;
  switch (stage) {
    case TuneStage::pd: run.gains = tuning::gains_from(x); break;
    case TuneStage::flr:
      run.gains = c.gains;
      run.flr = tuning::flr_from(x);
      break;
    case TuneStage::single: run.single = {x(0), x(1)}; break;
  }
  return run;
}

inline void describe_tuner(Metadata& m, TuneStage stage, const tuning::TunerConfig& tc) {
  m.add("tune.stage", std::string(stage_name(stage)));
  m.add("tune.episodes", std::to_string(tc.episodes));
  m.add("tune.n_init", std::to_string(tc.n_init));
  m.add("tune.h", tc.h);
  m.add("tuner_seed", std::to_string(tc.seed));
  m.add("tuner.rng", std::string(kTunerRng));
  m.add("tune.kernel", "squared exponential, per-dimension length scales");
  m.add("tune.gp_restarts", std::to_string(tc.gp.restarts));
  m.add("tune.candidates", std::to_string(tc.acquisition.candidates));
  m.add("tune.refine_starts", std::to_string(tc.acquisition.refine_starts));
  m.add("tune.failure_penalty", tuning::kFailurePenalty);
}

struct AnalysisReport {
  std::vector<io::AnalysisRow> rows;
  std::string text;
  bool pass = true;
};

namespace detail {

inline std::string format_complex(const analysis::Complex& z) {
  std::string s = io::format_double(z.real());
  if (z.imag() >= 0.0) s += " + " + io::format_double(z.imag()) + "i";
  else s += " - " + io::format_double(-z.imag()) + "i";
  return s;
}

inline void spectrum_text(std::string& out, const std::string& title, const analysis::Spectrum& s) {
  out += title + ":\n";
  for (const auto& z : s) out += "  " + format_complex(z) + "\n";
}

inline void verdict_text(std::string& out, const std::string& title, const analysis::Verdict& v) {
  out += title + ": " + (v.stable() ? "stable" : "violated") + "\n";
  for (const auto& c : v.conditions) {
    out += "  " + c.name + ": " + io::format_double(c.lhs) + " vs " + io::format_double(c.rhs) + " -> " +
           (c.satisfied ? "ok" : "FAIL") + "\n";
  }
}

inline void matrix_text(std::string& out, const Eigen::Matrix4d& A) {
  for (int r = 0; r < 4; ++r) {
    out += " ";
    for (int c = 0; c < 4; ++c) out += " " + io::format_double(A(r, c));
    out += "\n";
  }
}

// Dense and (if the pattern allows) block spectra of one matrix.
inline bool matrix_section(AnalysisReport& rep, const std::string& set, const Eigen::Matrix4d& A) {
  const analysis::LinearClosedLoop j{A};
  rep.text += "[" + set + "] error Jacobian:\n";
  matrix_text(rep.text, A);
  const auto dense = analysis::eigenvalues(A);
  spectrum_text(rep.text, "eigenvalues", dense);
  io::append_spectrum(rep.rows, "eigenvalue", set, dense);
  if (j.has_error_pattern()) {
    const auto block = analysis::block_eigenvalues(j);
    io::append_spectrum(rep.rows, "block_eigenvalue", set, block);
    rep.text += "closed-form block eigenvalues agree to " +
                io::format_double(analysis::spectrum_distance(dense, block)) + "\n";
  }
  const auto poly = analysis::characteristic_polynomial(A);
  const auto r = analysis::roots(poly);
  io::append_spectrum(rep.rows, "charpoly_root", set, r);
  const bool ok = analysis::max_real_part(dense) < 0.0;
  rep.text += std::string("max real part ") + io::format_double(analysis::max_real_part(dense)) + " -> " +
              (ok ? "asymptotically stable" : "not asymptotically stable") + "\n\n";
  return ok;
}

}  // namespace detail

// Stability report for a gain set with optional FLR ranges.
inline AnalysisReport analyze_gains(const plant::PlantParams& p, const control::GainSet& gains,
                                    const fuzzy::FlrBounds& flr, const analysis::StabilityBounds& L) {
  AnalysisReport rep;
  rep.text += "gains: kp1 = " + io::format_double(gains.kp1) + ", kd1 = " + io::format_double(gains.kd1) +
              ", kp2 = " + io::format_double(gains.kp2) + ", kd2 = " + io::format_double(gains.kd2) + "\n\n";
  rep.pass &= detail::matrix_section(rep, "nominal", analysis::error_jacobian(p, gains).A);

  const auto poly = analysis::closed_loop_charpoly(p, gains);
  for (int i = 0; i < 5; ++i) {
    rep.rows.push_back({"charpoly", "nominal", "c" + std::to_string(i), poly.c[static_cast<std::size_t>(i)], {}, {}, {},
                        std::string(io::kNone)});
  }
  const auto poles = analysis::roots(poly);
  io::append_spectrum(rep.rows, "pole", "nominal", poles);
  rep.text += "x1 transfer-function denominator (g = 0):\n  s^4";
  const char* pw[] = {"", " s^3", " s^2", " s", ""};
  for (int i = 1; i < 5; ++i) {
    rep.text += " + " + io::format_double(poly.c[static_cast<std::size_t>(i)]) + pw[i];
  }
  rep.text += "\n";
  detail::spectrum_text(rep.text, "poles", poles);
  const bool poles_ok = analysis::max_real_part(poles) < 0.0;
  rep.pass &= poles_ok;
  rep.text += "distance to error-Jacobian spectrum: " +
              io::format_double(analysis::spectrum_distance(poles, analysis::eigenvalues(analysis::error_jacobian(p, gains)))) +
              "\n\n";

  const auto t1 = analysis::check_theorem1(gains, p, L);
  detail::verdict_text(rep.text, "gain conditions", t1);
  io::append_verdict(rep.rows, "nominal", t1);
  rep.pass &= t1.stable();

  if (!flr.zero()) {
    const auto wc = analysis::worst_case_gains(gains, flr);
    rep.text += "\nworst-case gains (base + ordered lower bound): kp1 = " + io::format_double(wc.kp1) +
                ", kd1 = " + io::format_double(wc.kd1) + ", kp2 = " + io::format_double(wc.kp2) +
                ", kd2 = " + io::format_double(wc.kd2) + "\n\n";
    rep.pass &= detail::matrix_section(rep, "worst_case", analysis::error_jacobian(p, wc).A);
    const auto fv = analysis::check_flr_conditions(gains, flr, p, L);
    detail::verdict_text(rep.text, "FLR worst-case conditions", fv);
    io::append_verdict(rep.rows, "worst_case", fv);
    rep.pass &= fv.stable();
  }
  rep.text += std::string("\nverdict: ") + (rep.pass ? "stable" : "unstable") + "\n";
  return rep;
}

// Spectrum of a matrix read from file.
inline AnalysisReport analyze_matrix(const Eigen::Matrix4d& A) {
  AnalysisReport rep;
  rep.pass = detail::matrix_section(rep, "input", A);
  rep.text += std::string("verdict: ") + (rep.pass ? "stable" : "unstable") + "\n";
  return rep;
}

}  // namespace flexjoint::experiment
