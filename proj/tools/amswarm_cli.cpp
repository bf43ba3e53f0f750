#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "amswarm/sweep.hpp"

namespace fs = std::filesystem;
using namespace amswarm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options shared by the mission-running subcommands.
struct CommonOptions {
  std::string mode = "standard";
  double gamma = 1.0;
  int threads = 1;
  bool deterministic = false;
  bool cold_start = false;

  int K = PlanningConfig{}.K;
  double dt = PlanningConfig{}.dt;
  int n = PlanningConfig{}.n;
  double w_goal = PlanningConfig{}.w_goal;
  double w_smooth = PlanningConfig{}.w_smooth;
  int kappa = PlanningConfig{}.kappa;
  double v_max = PlanningConfig{}.v_max;
  double f_min = PlanningConfig{}.f_min;
  double f_max = PlanningConfig{}.f_max;
  int maxiter = SolverConfig{}.max_iterations;
  double threshold = SolverConfig{}.threshold;
  double time_limit = SimConfig{}.time_limit;
  double goal_tol_pos = SimConfig{}.goal_tol_pos;
  double goal_tol_vel = SimConfig{}.goal_tol_vel;

  void add(CLI::App* app, bool with_gamma = true) {
    app->add_option("--mode", mode, "collision constraints: standard or bf")->check(CLI::IsMember({"standard", "bf"}));
    if (with_gamma) app->add_option("--gamma", gamma, "barrier gamma in [0, 1] (bf mode)")->check(CLI::Range(0.0, 1.0));
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app->add_flag("--deterministic", deterministic, "force single-threaded execution");
    app->add_flag("--cold-start", cold_start, "do not warm start solves from the previous plan");
    app->add_option("--horizon", K, "planning horizon K (steps)");
    app->add_option("--dt", dt, "step size (s)");
    app->add_option("--degree", n, "Bernstein degree n");
    app->add_option("--w-goal", w_goal, "goal weight");
    app->add_option("--w-smooth", w_smooth, "smoothness weight");
    app->add_option("--kappa", kappa, "goal-cost steps at the end of the horizon");
    app->add_option("--v-max", v_max, "speed bound (m/s)");
    app->add_option("--f-min", f_min, "minimum thrust acceleration (m/s^2)");
    app->add_option("--f-max", f_max, "maximum thrust acceleration (m/s^2)");
    app->add_option("--maxiter", maxiter, "AM iteration limit");
    app->add_option("--threshold", threshold, "AM residual threshold");
    app->add_option("--time-limit", time_limit, "mission time limit (s)");
    app->add_option("--goal-tol-pos", goal_tol_pos, "goal position tolerance (m)");
    app->add_option("--goal-tol-vel", goal_tol_vel, "goal speed tolerance (m/s)");
  }

  int worker_threads() const { return deterministic ? 1 : threads; }

  CollisionMode collision_mode(double g) const {
    if (mode == "standard") {
      if (g != 1.0) throw UsageError("--gamma requires --mode bf");
      return CollisionMode::standard();
    }
    return CollisionMode::barrier(g);
  }

  PlanningConfig planning() const {
    PlanningConfig p;
    p.K = K;
    p.dt = dt;
    p.n = n;
    p.w_goal = w_goal;
    p.w_smooth = w_smooth;
    p.kappa = kappa;
    p.v_max = v_max;
    p.f_min = f_min;
    p.f_max = f_max;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }

  SolverConfig solver() const {
    SolverConfig s;
    s.max_iterations = maxiter;
    s.threshold = threshold;
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return s;
  }

  SimConfig sim() const {
    SimConfig s;
    s.time_limit = time_limit;
    s.goal_tol_pos = goal_tol_pos;
    s.goal_tol_vel = goal_tol_vel;
    s.threads = 1;
    s.warm_start = !cold_start;
    if (!(time_limit > 0) || !(goal_tol_pos >= 0) || !(goal_tol_vel >= 0)) {
      throw UsageError("time limit must be positive and goal tolerances non-negative");
    }
    return s;
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v;
    if (!(is >> v) || !is.eof()) throw UsageError(std::string("bad ") + what + " list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

// "A:B" is the half-open range [A, B); a single number N means [0, N).
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
      const auto n = std::stoull(text, &used);
      if (used != text.size()) throw UsageError("");
      return {0, n};
    }
    const auto a = std::stoull(text.substr(0, colon), &used);
    if (used != colon) throw UsageError("");
    const std::string rest = text.substr(colon + 1);
    const auto b = std::stoull(rest, &used);
    if (used != rest.size()) throw UsageError("");
    return {a, b};
  } catch (const std::exception&) {
    throw UsageError("bad seed range '" + text + "' (expected N or A:B)");
  }
}

Workspace parse_workspace(const std::string& text) {
  const auto dims = parse_list<double>(text, "workspace");
  if (dims.size() != 3) throw UsageError("--workspace expects X,Y,Z");
  try {
    return centered_workspace(dims[0], dims[1], dims[2]);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

void print_summary(const MissionReport& r) {
  std::cout << (r.success ? "success" : r.collision ? "collision" : "timeout") << "  mission_time=" << r.mission_time
            << "s  rounds=" << r.rounds << "  solves=" << r.total_solves() << " (non-converged "
            << r.nonconverged_solves() << ")  median_compute_us=" << r.median_compute_us() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alternating-minimization quadrotor swarm planner: missions, sweeps and scenarios"};
  app.require_subcommand(1);

  // run
  CommonOptions run_opts;
  std::string run_scenario, run_out = "report.json", run_dump;
  auto* run = app.add_subcommand("run", "run one mission from a scenario file");
  run->add_option("scenario", run_scenario, "scenario JSON file")->required();
  run->add_option("-o,--out", run_out, "report JSON path");
  run->add_option("--dump", run_dump, "per-round trajectory CSV path");
  run_opts.add(run);

  // sweep
  CommonOptions sweep_opts;
  std::string sweep_sizes = "10", sweep_seeds = "100", sweep_gammas = "1", sweep_ws = "4,4,2", sweep_out = "sweep_out";
  int sweep_obstacles = 16;
  bool sweep_dumps = false;
  auto* sweep = app.add_subcommand("sweep", "run sizes x seeds x gammas random transitions");
  sweep->add_option("--sizes", sweep_sizes, "comma-separated swarm sizes");
  sweep->add_option("--seeds", sweep_seeds, "seed range N (= 0:N) or A:B");
  sweep->add_option("--gammas", sweep_gammas, "comma-separated gamma values (bf mode)");
  sweep->add_option("--obstacles", sweep_obstacles, "cylinder count")->check(CLI::NonNegativeNumber);
  sweep->add_option("--workspace", sweep_ws, "workspace dimensions X,Y,Z in meters");
  sweep->add_option("-o,--out", sweep_out, "output directory");
  sweep->add_flag("--dumps", sweep_dumps, "write each trial's scenario and trajectory");
  sweep_opts.add(sweep, false);

  // antipodal
  CommonOptions anti_opts;
  std::string anti_sizes = "2,4,6,8", anti_out = "antipodal_out";
  double anti_radius = 1.5, anti_height = 1.0;
  bool anti_dumps = false;
  auto* anti = app.add_subcommand("antipodal", "antipodal position exchange at several swarm sizes");
  anti->add_option("--sizes", anti_sizes, "comma-separated swarm sizes");
  anti->add_option("--radius", anti_radius, "circle radius (m)")->check(CLI::PositiveNumber);
  anti->add_option("--height", anti_height, "flight height (m)")->check(CLI::PositiveNumber);
  anti->add_option("-o,--out", anti_out, "output directory");
  anti->add_flag("--dumps", anti_dumps, "write each run's scenario and trajectory");
  anti_opts.add(anti);

  // validate-scenario
  std::string val_scenario;
  auto* val = app.add_subcommand("validate-scenario", "check a scenario file against the scenario invariants");
  val->add_option("scenario", val_scenario, "scenario JSON file")->required();

  // generate
  std::uint64_t gen_seed = 0;
  int gen_agents = 10, gen_obstacles = 16;
  std::string gen_ws = "4,4,2", gen_out;
  auto* gen = app.add_subcommand("generate", "write a random scenario file");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--agents", gen_agents, "agent count")->check(CLI::PositiveNumber);
  gen->add_option("--obstacles", gen_obstacles, "cylinder count")->check(CLI::NonNegativeNumber);
  gen->add_option("--workspace", gen_ws, "workspace dimensions X,Y,Z in meters");
  gen->add_option("-o,--out", gen_out, "scenario JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) {
      const CollisionMode mode = run_opts.collision_mode(run_opts.gamma);
      const Scenario scenario = load_scenario(run_scenario);
      SimConfig sim = run_opts.sim();
      sim.threads = run_opts.worker_threads();
      sim.record_trajectory = !run_dump.empty();
      const PlanningConfig planning = run_opts.planning();
      const MissionReport report = run_mission(scenario, planning, run_opts.solver(), mode, sim);
      nlohmann::json j = report_json(report);
      j["mode"] = mode.name();
      j["gamma"] = mode.gamma;
      j["scenario"] = run_scenario;
      write_json(j, run_out);
      if (!run_dump.empty()) write_trajectory_csv(report, planning.dt, run_dump);
      print_summary(report);
      return kExitOk;
    }

    if (*sweep) {
      SweepSpec spec;
      spec.sizes = parse_list<int>(sweep_sizes, "size");
      std::tie(spec.seed_begin, spec.seed_end) = parse_seed_range(sweep_seeds);
      spec.gammas = parse_list<double>(sweep_gammas, "gamma");
      spec.barrier = sweep_opts.mode == "bf";
      spec.obstacles = sweep_obstacles;
      spec.workspace = parse_workspace(sweep_ws);
      spec.threads = sweep_opts.worker_threads();
      if (sweep_dumps) spec.dump_dir = (fs::path(sweep_out) / "trials").string();
      try {
        spec.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      fs::create_directories(sweep_out);
      std::size_t done = 0;
      const std::size_t total = spec.trial_count();
      const auto rows = run_sweep(spec, sweep_opts.planning(), sweep_opts.solver(), sweep_opts.sim(), [&](const TrialRow& r) {
        ++done;
        std::cerr << "[" << done << "/" << total << "] n=" << r.size << " seed=" << r.seed << " gamma=" << r.gamma << " "
                  << (!r.error.empty() ? "error: " + r.error : r.success ? "success" : r.collision ? "collision" : "timeout")
                  << "\n";
      });
      write_trials_csv(rows, (fs::path(sweep_out) / "trials.csv").string());
      write_json(aggregate_json(rows), fs::path(sweep_out) / "aggregate.json");
      std::cout << aggregate_json(rows).dump(2) << "\n";
      return kExitOk;
    }

    if (*anti) {
      const CollisionMode mode = anti_opts.collision_mode(anti_opts.gamma);
      const auto sizes = parse_list<int>(anti_sizes, "size");
      SimConfig sim = anti_opts.sim();
      sim.threads = anti_opts.worker_threads();
      sim.record_trajectory = anti_dumps;
      const PlanningConfig planning = anti_opts.planning();
      const SolverConfig solver = anti_opts.solver();
      fs::create_directories(anti_out);
      std::vector<TrialRow> rows;
      for (int n : sizes) {
        const Scenario scenario = antipodal(n, anti_radius, anti_height);
        const MissionReport report = run_mission(scenario, planning, solver, mode, sim);
        rows.push_back(trial_row(n, 0, mode.gamma, mode, report));
        const std::string stem = "antipodal_n" + std::to_string(n);
        if (anti_dumps) {
          save_scenario(scenario, (fs::path(anti_out) / (stem + "_scenario.json")).string());
          write_trajectory_csv(report, planning.dt, (fs::path(anti_out) / (stem + "_trajectory.csv")).string());
        }
        write_json(report_json(report), fs::path(anti_out) / (stem + "_report.json"));
        std::cout << "n=" << n << "  ";
        print_summary(report);
      }
      write_trials_csv(rows, (fs::path(anti_out) / "trials.csv").string());
      write_json(aggregate_json(rows), fs::path(anti_out) / "aggregate.json");
      return kExitOk;
    }

    if (*val) {
      const Scenario scenario = load_scenario(val_scenario);
      const auto errors = validation_errors(scenario);
      if (errors.empty()) {
        std::cout << "valid: " << scenario.agents.size() << " agents, " << scenario.obstacles.size() << " obstacles\n";
        return kExitOk;
      }
      for (const auto& e : errors) std::cerr << e << "\n";
      return kExitRuntime;
    }

    if (*gen) {
      const Scenario scenario = generate_random(gen_seed, gen_agents, gen_obstacles, parse_workspace(gen_ws));
      const fs::path out(gen_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      save_scenario(scenario, gen_out);
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
