// flexjoint: simulate, tune, analyze and ablate the cascaded PD controller
// of a single-link flexible-joint arm.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "flexjoint/flexjoint.hpp"

namespace fj = flexjoint;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kDiverged = 2, kUnstable = 3 };

struct Common {
  std::string plant_file;
  double sim_dt = 0.005;
  double control_dt = 0.05;
  double horizon = 10.0;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct SimFlags {
  std::string controller = "fuzzy-cascaded";
  std::string reference = "square";
  double ref_value = 1.0;
  std::string disturbance = "uniform";
  double amplitude = 10.0;
  std::string hold = "per-sim-step";
  std::string gains_file;
  std::optional<double> single_kp;
  std::optional<double> single_kd;
  std::string single_file;
};

struct TuneFlags {
  std::string stage = "pd";
  int episodes = 150;
  int n_init = 10;
  std::uint64_t tuner_seed = 1;
  double h = fj::tuning::kDefaultExploration;
  std::string base_gains;
};

struct AnalyzeFlags {
  std::string gains_file;
  std::string jacobian_file;
  double l11 = 0.0;
  double l12 = 0.0;
  double l21 = 0.0;
  double l22 = 0.0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--plant", c.plant_file, "plant parameter file (key = value; m g l I_l I_m k mu)");
  app->add_option("--sim-dt", c.sim_dt, "Euler step [s]")->capture_default_str();
  app->add_option("--control-dt", c.control_dt, "control update period [s]")->capture_default_str();
  app->add_option("--horizon", c.horizon, "episode length [s]")->capture_default_str();
  app->add_option("--seed", c.seed, "disturbance seed")->capture_default_str();
  app->add_option("--out", c.out, "output directory")->capture_default_str();
}

void add_sim(CLI::App* app, SimFlags& s, bool with_controller) {
  if (with_controller) {
    app->add_option("--controller", s.controller, "single-pd | cascaded | fuzzy-cascaded | fuzzy1-pd2 | pd1-fuzzy2")
        ->capture_default_str();
    app->add_option("--reference", s.reference, "square | sine | constant")->capture_default_str();
    app->add_option("--ref-value", s.ref_value, "level of the constant reference [rad]")->capture_default_str();
  }
  app->add_option("--disturbance", s.disturbance, "off | uniform")->capture_default_str();
  app->add_option("--amplitude", s.amplitude, "disturbance half-width [rad/s^2]")->capture_default_str();
  app->add_option("--hold", s.hold, "per-sim-step | per-control-step")->capture_default_str();
  app->add_option("--gains", s.gains_file, "gains file (kp1 kd1 kp2 kd2 and FLR ranges)");
  app->add_option("--single-gains", s.single_file, "single PD gains file (kp, kd)");
  app->add_option("--single-kp", s.single_kp, "single PD proportional gain");
  app->add_option("--single-kd", s.single_kd, "single PD derivative gain");
}

fj::experiment::ExperimentConfig resolve(const Common& c, const SimFlags& s) {
  fj::experiment::ExperimentConfig cfg;
  if (!c.plant_file.empty()) cfg.plant = fj::io::load_plant(c.plant_file);
  cfg.sim = {c.sim_dt, c.control_dt, c.horizon};
  try {
    cfg.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.out = c.out;

  const auto kind = fj::control::parse_controller(s.controller);
  if (!kind) throw UsageError("unknown controller '" + s.controller + "'");
  cfg.controller = *kind;
  const auto ref = fj::experiment::parse_reference(s.reference);
  if (!ref) throw UsageError("unknown reference '" + s.reference + "'");
  cfg.reference = {*ref, *ref == fj::control::ReferenceKind::constant ? s.ref_value : cfg.reference.value};

  const auto hold = fj::experiment::parse_hold(s.hold);
  if (!hold) throw UsageError("unknown hold '" + s.hold + "'");
  if (s.disturbance == "off") {
    cfg.disturbance = fj::plant::DisturbanceModel::off();
    cfg.disturbance.amplitude = s.amplitude;
  } else if (s.disturbance == "uniform") {
    cfg.disturbance = fj::plant::DisturbanceModel::uniform(s.amplitude, c.seed, *hold);
  } else {
    throw UsageError("unknown disturbance '" + s.disturbance + "'");
  }
  cfg.disturbance.seed = c.seed;
  cfg.disturbance.hold = *hold;
  try {
    cfg.disturbance.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (!s.gains_file.empty()) {
    const auto g = fj::io::load_gains(s.gains_file);
    for (const auto& note : g.notes) std::cerr << "note: " << s.gains_file << ": " << note << "\n";
    cfg.gains = g.gains;
    cfg.flr = g.flr;
  }
  if (!s.single_file.empty()) cfg.single = fj::io::load_single_gains(s.single_file);
  if (s.single_kp) cfg.single.kp = *s.single_kp;
  if (s.single_kd) cfg.single.kd = *s.single_kd;
  return cfg;
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

int cmd_simulate(const fj::experiment::ExperimentConfig& cfg) {
  auto meta = fj::experiment::describe(cfg, "simulate");
  fj::io::write_file(out_path(cfg.out, "config.txt"), meta.text());
  fj::experiment::SimulationRun run;
  try {
    run = fj::experiment::run_simulation(cfg);
  } catch (const fj::control::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  }
  fj::io::write_file(out_path(cfg.out, "trajectory.csv"), fj::io::format_trajectory(run.trajectory));
  if (!run.metrics) {
    std::cerr << "error: " << run.metrics_error << "\n";
    return kUsage;
  }
  fj::io::write_file(out_path(cfg.out, "metrics.csv"), fj::io::format_metrics(*run.metrics));
  const auto& m = *run.metrics;
  std::cout << "controller " << fj::control::controller_name(cfg.controller) << "\n"
            << "cost " << fj::io::format_optional(m.cost) << "\n"
            << "overshoot_pct " << fj::io::format_optional(m.overshoot_pct) << "\n"
            << "settling_time_s " << fj::io::format_optional(m.settling_time) << " (2% band)\n"
            << "steady_state_error " << fj::io::format_double(m.steady_state_error) << "\n"
            << "rms_error " << fj::io::format_double(m.rms_error) << "\n";
  return kOk;
}

int cmd_ablate(const fj::experiment::ExperimentConfig& cfg) {
  auto meta = fj::experiment::describe(cfg, "ablate");
  fj::io::write_file(out_path(cfg.out, "config.txt"), meta.text());
  const auto rows = fj::experiment::run_ablation(cfg);
  const std::string csv = fj::io::format_ablation(rows);
  fj::io::write_file(out_path(cfg.out, "ablation.csv"), csv);
  std::cout << csv;
  return kOk;
}

int cmd_tune(fj::experiment::ExperimentConfig cfg, const TuneFlags& t) {
  const auto stage = fj::experiment::parse_stage(t.stage);
  if (!stage) throw UsageError("unknown stage '" + t.stage + "'");
  if (*stage == fj::experiment::TuneStage::flr) {
    if (t.base_gains.empty()) throw UsageError("stage flr needs --base-gains (a stage pd gains file)");
    cfg.gains = fj::io::load_gains(t.base_gains).gains;
  }
  fj::tuning::TunerConfig tc;
  tc.episodes = t.episodes;
  tc.n_init = t.n_init;
  tc.seed = t.tuner_seed;
  tc.h = t.h;
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto meta = fj::experiment::describe(cfg, "tune");
  fj::experiment::describe_tuner(meta, *stage, tc);
  fj::io::write_file(out_path(cfg.out, "config.txt"), meta.text());

  const auto run = fj::experiment::run_tuning(*stage, cfg, tc, [](const fj::tuning::Episode& ep) {
    if (ep.failed) std::cerr << "episode " << ep.episode << " failed: " << ep.error << "\n";
  });
  fj::io::write_file(out_path(cfg.out, "history.csv"), fj::io::format_history(run.domain, run.result.history));
  std::string gains_text;
  if (*stage == fj::experiment::TuneStage::single) {
    gains_text = fj::io::format_single_gains(run.single);
  } else {
    gains_text = fj::io::format_gains(run.gains, run.flr);
  }
  fj::io::write_file(out_path(cfg.out, "gains.txt"), gains_text);
  std::cout << "best_y " << fj::io::format_double(run.result.best_y) << "\n" << gains_text;
  return kOk;
}

int cmd_analyze(const Common& c, const AnalyzeFlags& a) {
  fj::plant::PlantParams p;
  if (!c.plant_file.empty()) p = fj::io::load_plant(c.plant_file);
  const fj::analysis::StabilityBounds L{a.l11, a.l12, a.l21, a.l22};
  try {
    L.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  fj::experiment::AnalysisReport rep;
  if (!a.jacobian_file.empty()) {
    if (!a.gains_file.empty()) throw UsageError("--jacobian and --gains are exclusive");
    rep = fj::experiment::analyze_matrix(fj::io::load_matrix4(a.jacobian_file));
  } else {
    fj::io::GainsFile g{fj::control::GainSet::tuned(), fj::control::tuned_flr_bounds(), {}};
    if (!a.gains_file.empty()) g = fj::io::load_gains(a.gains_file);
    for (const auto& note : g.notes) std::cerr << "note: " << a.gains_file << ": " << note << "\n";
    rep = fj::experiment::analyze_gains(p, g.gains, g.flr, L);
  }
  fj::io::write_file(out_path(c.out, "analysis.csv"), fj::io::format_analysis(rep.rows));
  std::cout << rep.text;
  return rep.pass ? kOk : kUnstable;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexjoint: cascaded fuzzy PD control of a flexible-joint arm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  SimFlags sim;
  TuneFlags tune;
  AnalyzeFlags an;

  auto* simulate = app.add_subcommand("simulate", "run one episode, write trajectory.csv and metrics.csv");
  add_common(simulate, common);
  add_sim(simulate, sim, true);

  auto* ablate = app.add_subcommand("ablate", "cost table of the five controller variants");
  add_common(ablate, common);
  add_sim(ablate, sim, false);

  auto* tunec = app.add_subcommand("tune", "Bayesian optimization of gains or FLR ranges");
  add_common(tunec, common);
  add_sim(tunec, sim, false);
  tunec->add_option("--stage", tune.stage, "pd | flr | single")->capture_default_str();
  tunec->add_option("--episodes", tune.episodes, "total cost evaluations")->capture_default_str();
  tunec->add_option("--n-init", tune.n_init, "Latin-hypercube initial samples")->capture_default_str();
  tunec->add_option("--tuner-seed", tune.tuner_seed, "optimizer seed")->capture_default_str();
  tunec->add_option("--exploration", tune.h, "UCB coefficient h")->capture_default_str();
  tunec->add_option("--base-gains", tune.base_gains, "stage pd gains file (required for --stage flr)");

  auto* analyze = app.add_subcommand("analyze", "eigenvalues, poles and gain conditions");
  add_common(analyze, common);
  analyze->add_option("--gains", an.gains_file, "gains file; defaults to the built-in tuned set");
  analyze->add_option("--jacobian", an.jacobian_file, "4x4 error Jacobian file");
  analyze->add_option("--l11", an.l11, "bound on |dd1/de1|")->capture_default_str();
  analyze->add_option("--l12", an.l12, "bound on |dd1/de2|")->capture_default_str();
  analyze->add_option("--l21", an.l21, "bound on |dd2/de3|")->capture_default_str();
  analyze->add_option("--l22", an.l22, "bound on |dd2/de4|")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(resolve(common, sim));
    if (*ablate) {
      sim.controller = "fuzzy-cascaded";
      return cmd_ablate(resolve(common, sim));
    }
    if (*tunec) return cmd_tune(resolve(common, sim), tune);
    if (*analyze) return cmd_analyze(common, an);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fj::io::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fj::control::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
