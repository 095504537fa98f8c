#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quadloco/config.hpp"
#include "quadloco/error.hpp"
#include "quadloco/scenario.hpp"
#include "quadloco/sim.hpp"
#include "quadloco/terrain.hpp"
#include "quadloco/traj_opt.hpp"

namespace fs = std::filesystem;
using namespace quadloco;

namespace {

constexpr int kUsage = 2;

int exit_code(Stage stage) {
  switch (stage) {
    case Stage::kConfig: return kUsage;
    case Stage::kTerrain: return 10;
    case Stage::kBodyPlan: return 11;
    case Stage::kFootstep: return 12;
    case Stage::kQp: return 20;
    case Stage::kDynamics: return 30;
    case Stage::kSimulation: return 40;
  }
  return 1;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string terrain;
  std::string scenario;
  std::string start;
  std::string goal;
  std::optional<double> eps0;
  std::optional<double> margin;
  std::optional<double> dt;
  std::optional<std::uint64_t> seed;
  int trials = 1;
  std::string mode;
  std::string out = ".";
  std::string plan;
  std::vector<std::string> inputs;
};

body::BodyState parse_pose(const std::string& text, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + " expects x,y[,theta]");
    }
  }
  if (v.size() < 2 || v.size() > 3) throw UsageError(std::string(flag) + " expects x,y[,theta]");
  return {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
}

Config build_config(const Options& o) {
  std::vector<std::pair<std::string, std::string>> flags;
  const auto number = [](double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  };
  if (o.eps0) flags.emplace_back("body.eps0", number(*o.eps0));
  if (o.margin) flags.emplace_back("traj.margin", number(*o.margin));
  if (o.dt) flags.emplace_back("traj.dt", number(*o.dt));
  if (!o.mode.empty()) flags.emplace_back("traj.mode", o.mode);
  return layered_config(o.config, flags);
}

sim::Scenario build_scenario(const Options& o, const std::string& name_or_file) {
  sim::Scenario sc;
  const auto names = sim::builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_file) != names.end()) {
    sc = sim::builtin_scenario(name_or_file);
  } else if (!name_or_file.empty() && fs::is_regular_file(name_or_file)) {
    std::ifstream in(name_or_file);
    const terrain::HeightGrid grid = terrain::read_heightgrid(in);
    sc.name = fs::path(name_or_file).stem().string();
    sc.kind = sim::TerrainKind::kFile;
    sc.terrain_file = name_or_file;
    sc.geometry = grid.geometry();
    if (o.start.empty() || o.goal.empty()) throw UsageError("a terrain file needs --start and --goal");
  } else if (name_or_file.empty()) {
    throw UsageError("give a builtin scenario or --terrain");
  } else {
    std::string list;
    for (const auto& n : names) list += " " + n;
    throw UsageError("unknown scenario '" + name_or_file + "' (builtin:" + list + ")");
  }
  if (!o.start.empty()) sc.start = parse_pose(o.start, "--start");
  if (!o.goal.empty()) sc.goal = parse_pose(o.goal, "--goal");
  try {
    sc.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return sc;
}

void print_trajectory_summary(std::ostream& os, const traj::OptimizationResult& r) {
  os << "phases " << r.phases.phases.size() << " (" << r.phases.quad_phase_count() << " four-leg)"
     << ", duration " << r.phases.total_duration() << " s"
     << ", min ZMP slack " << r.min_slack << " m"
     << ", junction residual " << r.max_junction_residual << ", QP solves " << r.qp_solves << '\n';
}

int cmd_plan(const Options& o) {
  const Config cfg = build_config(o);
  const std::string source = !o.terrain.empty() ? o.terrain : o.scenario;
  const sim::Scenario sc = build_scenario(o, source);
  sim::SimConfig sc_cfg = cfg.sim;
  sc_cfg.artifact_dir = o.out;
  const sim::PlanBundle b = sim::plan_footholds(sc, sc_cfg);
  std::cout << "actions " << b.actions.actions.size() << ", cost " << b.actions.total_cost << ", epsilon "
            << b.actions.epsilon << ", footholds " << b.footholds.steps.size() << '\n'
            << "wrote plan.txt, footholds.txt, costmap.txt and terrain.txt to " << o.out << '\n';
  return 0;
}

int cmd_optimize(const Options& o) {
  const Config cfg = build_config(o);
  if (o.inputs.size() != 1) throw UsageError("optimize takes exactly one foothold file");
  std::ifstream in(o.inputs.front());
  if (!in) throw UsageError("cannot open '" + o.inputs.front() + "'");
  const footstep::FootholdPlan steps = footstep::read_footholds(in);
  body::ActionPlan actions;
  if (!o.plan.empty()) {
    std::ifstream pin(o.plan);
    if (!pin) throw UsageError("cannot open '" + o.plan + "'");
    actions = body::read_plan(pin, cfg.sim.body.lattice);
  }
  const traj::OptimizationResult r =
      traj::optimize(steps, cfg.sim.traj, sim::initial_rest(steps), sim::final_rest(actions, steps, cfg.sim.traj));

  std::error_code ec;
  fs::create_directories(o.out, ec);
  const fs::path dir(o.out);
  {
    std::ofstream f(dir / "coefficients.txt");
    traj::write_coefficients(f, r.trajectory);
  }
  {
    std::ofstream f(dir / "trajectory.txt");
    traj::write_trajectory_table(f, r.trajectory, r.phases, cfg.sim.rate);
  }
  {
    std::ofstream f(dir / "paths.csv");
    sim::write_paths_csv(f, r, cfg.sim.rate);
  }
  {
    std::ofstream f(dir / "polygons.csv");
    sim::write_polygons_csv(f, r.phases);
  }
  {
    std::ofstream f(dir / "slack.txt");
    print_trajectory_summary(f, r);
  }
  print_trajectory_summary(std::cout, r);
  return 0;
}

int cmd_simulate(const Options& o) {
  const Config cfg = build_config(o);
  if (o.trials < 1) throw UsageError("--trials must be at least 1");
  const std::string source = !o.inputs.empty() ? o.inputs.front() : (!o.terrain.empty() ? o.terrain : o.scenario);
  if (o.inputs.size() > 1) throw UsageError("simulate takes one scenario");
  const sim::Scenario sc = build_scenario(o, source);

  sim::SimConfig sc_cfg = cfg.sim;
  sc_cfg.artifact_dir = o.out;
  const sim::PlanBundle plan = sim::plan_scenario(sc, sc_cfg);
  sc_cfg.artifact_dir.clear();

  const bool noisy = o.trials > 1 || o.seed.has_value();
  const std::uint64_t seed0 = o.seed.value_or(1);
  std::vector<sim::RunReport> reports;
  for (int i = 0; i < o.trials; ++i) {
    std::optional<sim::NoiseModel> noise;
    if (noisy) {
      noise = cfg.noise;
      noise->seed = seed0 + static_cast<std::uint64_t>(i);
    }
    const sim::RunResult run = sim::execute(plan, sc_cfg, noise);
    const fs::path dir = o.trials == 1 ? fs::path(o.out) : fs::path(o.out) / ("trial_" + std::to_string(i));
    sim::export_run(dir, run, sc_cfg);
    reports.push_back(run.report);
    std::cout << sc.name << " trial " << i << ": " << (run.report.success ? "success" : "FAILED")
              << (run.report.failure.empty() ? "" : " (" + run.report.failure + ")") << ", duration "
              << run.report.duration << " s, speed " << 100.0 * run.report.traversal_speed << " cm/s, min slack "
              << run.report.min_zmp_slack << ", max torque " << run.report.max_torque << " N m\n";
  }
  const auto rows = sim::summarize(reports);
  {
    std::ofstream f(fs::path(o.out) / "summary.txt");
    sim::write_summary(f, rows);
  }
  sim::write_summary(std::cout, rows);
  const bool all_ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.success; });
  return all_ok ? 0 : exit_code(Stage::kSimulation);
}

int cmd_report(const Options& o) {
  std::vector<fs::path> files;
  for (const auto& in : o.inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().filename() == "report.json") files.push_back(e.path());
      }
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else {
      throw UsageError("no such report '" + in + "'");
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no report.json files found");
  std::vector<sim::RunReport> reports;
  for (const auto& f : files) {
    std::ifstream in(f);
    reports.push_back(sim::read_report_json(in));
  }
  const auto rows = sim::summarize(reports);
  sim::write_summary(std::cout, rows);
  if (o.out != ".") {
    std::ofstream f(o.out);
    if (!f) throw UsageError("cannot write '" + o.out + "'");
    sim::write_summary(f, rows);
  }
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its keys")->check(CLI::ExistingFile);
  cmd->add_option("--eps0", o.eps0, "initial ARA* inflation");
  cmd->add_option("--margin-d", o.margin, "support polygon shrink margin [m]");
  cmd->add_option("--dt", o.dt, "ZMP constraint sampling step [s]");
  cmd->add_option("--mode", o.mode, "stability constraints")->check(CLI::IsMember({"zmp", "static"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain-aware quadruped locomotion: plan, optimize and simulate."};
  app.require_subcommand(1);
  Options o;

  auto* plan = app.add_subcommand("plan", "plan body actions and footholds over a terrain");
  add_common(plan, o);
  plan->add_option("--terrain", o.terrain, "heightgrid file");
  plan->add_option("--scenario", o.scenario, "builtin scenario supplying terrain, start and goal");
  plan->add_option("--start", o.start, "start pose x,y[,theta]");
  plan->add_option("--goal", o.goal, "goal pose x,y[,theta]");
  plan->add_option("--out", o.out, "output directory");

  auto* optimize = app.add_subcommand("optimize", "optimize the CoG trajectory for a foothold plan");
  add_common(optimize, o);
  optimize->add_option("footholds", o.inputs, "foothold plan file")->required();
  optimize->add_option("--plan", o.plan, "action plan file; the CoG then comes to rest over its final pose");
  optimize->add_option("--out", o.out, "output directory");

  auto* simulate = app.add_subcommand("simulate", "run the full pipeline on a scenario");
  add_common(simulate, o);
  simulate->add_option("scenario", o.inputs, "builtin scenario name or heightgrid file");
  simulate->add_option("--terrain", o.terrain, "heightgrid file");
  simulate->add_option("--start", o.start, "start pose x,y[,theta]");
  simulate->add_option("--goal", o.goal, "goal pose x,y[,theta]");
  simulate->add_option("--seed", o.seed, "noise seed; enables tracking noise");
  simulate->add_option("--trials", o.trials, "noisy trials with consecutive seeds");
  simulate->add_option("--out", o.out, "output directory");

  auto* report = app.add_subcommand("report", "aggregate run reports into a summary table");
  report->add_option("reports", o.inputs, "report.json files or directories")->required();
  report->add_option("--out", o.out, "summary file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (plan->parsed()) return cmd_plan(o);
    if (optimize->parsed()) return cmd_optimize(o);
    if (simulate->parsed()) return cmd_simulate(o);
    return cmd_report(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.stage()) << "]: " << e.what() << '\n';
    return exit_code(e.stage());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
