#include "amswarm/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace amswarm {

Workspace centered_workspace(double x, double y, double z) {
  if (!(x > 0 && y > 0 && z > 0)) throw std::invalid_argument("workspace dimensions must be positive");
  return {Vec3(-0.5 * x, -0.5 * y, 0.0), Vec3(0.5 * x, 0.5 * y, z)};
}

void SweepSpec::validate() const {
  if (sizes.empty()) throw std::invalid_argument("sweep: no swarm sizes");
  for (int n : sizes)
    if (n < 1) throw std::invalid_argument("sweep: swarm sizes must be positive");
  if (seed_end <= seed_begin) throw std::invalid_argument("sweep: empty seed range");
  if (obstacles < 0) throw std::invalid_argument("sweep: negative obstacle count");
  if (gammas.empty()) throw std::invalid_argument("sweep: no gamma values");
  for (double g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("sweep: gamma must lie in [0, 1]");
    if (!barrier && g != 1.0) throw std::invalid_argument("sweep: standard mode only supports gamma = 1");
  }
  if (threads < 1) throw std::invalid_argument("sweep: threads must be at least 1");
}

const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> cols{
      "size",          "seed",           "gamma",           "mode",
      "success",       "collision",      "timeout",         "mission_time",
      "mean_compute_us", "max_compute_us", "median_compute_us", "min_inter_agent_metric",
      "min_obstacle_metric", "min_inter_agent_distance", "min_obstacle_distance", "nonconverged_solves",
      "total_solves",  "error"};
  return cols;
}

TrialRow trial_row(int size, std::uint64_t seed, double gamma, const CollisionMode& mode, const MissionReport& r) {
  TrialRow row;
  row.size = size;
  row.seed = seed;
  row.gamma = gamma;
  row.mode = mode.name();
  row.success = r.success;
  row.collision = r.collision;
  row.timeout = r.timeout;
  row.mission_time = r.mission_time;
  row.mean_compute_us = r.mean_compute_us();
  row.max_compute_us = r.max_compute_us();
  row.median_compute_us = r.median_compute_us();
  row.min_inter_agent_metric = r.min_inter_agent_metric_overall();
  row.min_obstacle_metric = r.min_obstacle_metric_overall();
  row.min_inter_agent_distance = r.min_inter_agent_distance_overall();
  row.min_obstacle_distance = r.min_obstacle_distance_overall();
  row.nonconverged_solves = r.nonconverged_solves();
  row.total_solves = r.total_solves();
  return row;
}

std::string trial_stem(int size, std::uint64_t seed, double gamma) {
  std::ostringstream os;
  os << "n" << size << "_seed" << seed << "_gamma" << gamma;
  return os.str();
}

std::vector<TrialRow> run_sweep(const SweepSpec& spec, const PlanningConfig& planning, const SolverConfig& solver,
                                const SimConfig& sim, const std::function<void(const TrialRow&)>& on_trial) {
  spec.validate();
  struct Job {
    int size;
    std::uint64_t seed;
    double gamma;
  };
  std::vector<Job> jobs;
  for (int n : spec.sizes)
    for (std::uint64_t s = spec.seed_begin; s < spec.seed_end; ++s)
      for (double g : spec.gammas) jobs.push_back({n, s, g});
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return std::tie(a.size, a.seed, a.gamma) < std::tie(b.size, b.seed, b.gamma);
  });
  if (!spec.dump_dir.empty()) std::filesystem::create_directories(spec.dump_dir);

  SimConfig trial_sim = sim;
  trial_sim.threads = 1;
  trial_sim.record_trajectory = sim.record_trajectory || !spec.dump_dir.empty();

  std::vector<TrialRow> rows(jobs.size());
  const int n_jobs = static_cast<int>(jobs.size());
#pragma omp parallel for num_threads(spec.threads) schedule(dynamic, 1)
  for (int t = 0; t < n_jobs; ++t) {
    const Job& job = jobs[t];
    const CollisionMode mode = spec.barrier ? CollisionMode::barrier(job.gamma) : CollisionMode::standard();
    TrialRow row;
    try {
      const Scenario scenario = generate_random(job.seed, job.size, spec.obstacles, spec.workspace);
      const MissionReport report = run_mission(scenario, planning, solver, mode, trial_sim);
      row = trial_row(job.size, job.seed, job.gamma, mode, report);
      if (!spec.dump_dir.empty()) {
        const std::string stem = (std::filesystem::path(spec.dump_dir) / trial_stem(job.size, job.seed, job.gamma)).string();
        save_scenario(scenario, stem + "_scenario.json");
        write_trajectory_csv(report, planning.dt, stem + "_trajectory.csv");
      }
    } catch (const std::exception& e) {
      row.size = job.size;
      row.seed = job.seed;
      row.gamma = job.gamma;
      row.mode = mode.name();
      row.error = e.what();
    }
    rows[t] = row;
    if (on_trial) {
#pragma omp critical(amswarm_sweep_progress)
      on_trial(row);
    }
  }
  return rows;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

void write_trials_csv(const std::vector<TrialRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.precision(17);
  const auto& cols = trial_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : rows) {
    out << r.size << "," << r.seed << "," << r.gamma << "," << r.mode << "," << r.success << "," << r.collision << ","
        << r.timeout << "," << r.mission_time << "," << r.mean_compute_us << "," << r.max_compute_us << ","
        << r.median_compute_us << "," << r.min_inter_agent_metric << "," << r.min_obstacle_metric << ","
        << r.min_inter_agent_distance << "," << r.min_obstacle_distance << "," << r.nonconverged_solves << ","
        << r.total_solves << "," << csv_escape(r.error) << "\n";
  }
}

std::vector<TrialRow> read_trials_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (split_csv_line(line) != trial_columns()) throw std::runtime_error("unexpected trials CSV header in '" + path + "'");
  std::vector<TrialRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != trial_columns().size()) throw std::runtime_error("malformed trials row: " + line);
    TrialRow r;
    r.size = std::stoi(c[0]);
    r.seed = std::stoull(c[1]);
    r.gamma = std::stod(c[2]);
    r.mode = c[3];
    r.success = c[4] == "1";
    r.collision = c[5] == "1";
    r.timeout = c[6] == "1";
    r.mission_time = std::stod(c[7]);
    r.mean_compute_us = std::stod(c[8]);
    r.max_compute_us = std::stod(c[9]);
    r.median_compute_us = std::stod(c[10]);
    r.min_inter_agent_metric = std::stod(c[11]);
    r.min_obstacle_metric = std::stod(c[12]);
    r.min_inter_agent_distance = std::stod(c[13]);
    r.min_obstacle_distance = std::stod(c[14]);
    r.nonconverged_solves = std::stoi(c[15]);
    r.total_solves = std::stoi(c[16]);
    r.error = c[17];
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json aggregate_json(const std::vector<TrialRow>& rows) {
  struct Acc {
    int trials = 0, successes = 0, errors = 0, finished = 0;
    double mission = 0, mission_success = 0, mean_compute = 0, max_compute = 0;
    double agent_metric = 0, obstacle_metric = 0, agent_dist = 0, obstacle_dist = 0;
    int agent_n = 0, obstacle_n = 0;
  };
  std::map<std::pair<int, double>, Acc> groups;
  for (const auto& r : rows) {
    Acc& a = groups[{r.size, r.gamma}];
    ++a.trials;
    if (!r.error.empty()) {
      ++a.errors;
      continue;
    }
    ++a.finished;
    a.successes += r.success ? 1 : 0;
    a.mission += r.mission_time;
    if (r.success) a.mission_success += r.mission_time;
    a.mean_compute += r.mean_compute_us;
    a.max_compute = std::max(a.max_compute, r.max_compute_us);
    if (std::isfinite(r.min_inter_agent_metric)) {
      a.agent_metric += r.min_inter_agent_metric;
      a.agent_dist += r.min_inter_agent_distance;
      ++a.agent_n;
    }
    if (std::isfinite(r.min_obstacle_metric)) {
      a.obstacle_metric += r.min_obstacle_metric;
      a.obstacle_dist += r.min_obstacle_distance;
      ++a.obstacle_n;
    }
  }
  auto mean = [](double sum, int n) { return n > 0 ? nlohmann::json(sum / n) : nlohmann::json(nullptr); };
  auto out = nlohmann::json::array();
  for (const auto& [key, a] : groups) {
    out.push_back({{"size", key.first},
                   {"gamma", key.second},
                   {"trials", a.trials},
                   {"errors", a.errors},
                   {"success_rate", a.trials > 0 ? double(a.successes) / a.trials : 0.0},
                   {"mean_mission_time", mean(a.mission, a.finished)},
                   {"mean_mission_time_success", mean(a.mission_success, a.successes)},
                   {"mean_compute_us", mean(a.mean_compute, a.finished)},
                   {"max_compute_us", a.max_compute},
                   {"mean_min_inter_agent_metric", mean(a.agent_metric, a.agent_n)},
                   {"mean_min_obstacle_metric", mean(a.obstacle_metric, a.obstacle_n)},
                   {"mean_min_inter_agent_distance", mean(a.agent_dist, a.agent_n)},
                   {"mean_min_obstacle_distance", mean(a.obstacle_dist, a.obstacle_n)}});
  }
  return {{"groups", out}};
}

}  // namespace amswarm
