#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "amswarm/sim.hpp"

namespace amswarm {

/// Box centered on the origin in x/y with its floor at z = 0.
Workspace centered_workspace(double x, double y, double z);

struct SweepSpec {
  std::vector<int> sizes{10};
  std::uint64_t seed_begin = 0;
  std::uint64_t seed_end = 100;  // exclusive
  int obstacles = 16;
  std::vector<double> gammas{1.0};
  bool barrier = false;  // false: standard constraints, gammas must all be 1
  Workspace workspace = centered_workspace(4.0, 4.0, 2.0);
  int threads = 1;  // trials run in parallel, each one serial
  std::string dump_dir;  // per-trial scenario + trajectory files when non-empty

  void validate() const;
  std::size_t trial_count() const { return sizes.size() * (seed_end - seed_begin) * gammas.size(); }
};

/// One trial of a sweep. Distances are minima over the whole mission;
/// *_metric columns use the declared-collision envelope (>= 1 is clear).
struct TrialRow {
  int size = 0;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  std::string mode;
  bool success = false;
  bool collision = false;
  bool timeout = false;
  double mission_time = 0.0;
  double mean_compute_us = 0.0;
  double max_compute_us = 0.0;
  double median_compute_us = 0.0;
  double min_inter_agent_metric = 0.0;
  double min_obstacle_metric = 0.0;
  double min_inter_agent_distance = 0.0;
  double min_obstacle_distance = 0.0;
  int nonconverged_solves = 0;
  int total_solves = 0;
  std::string error;  // non-empty when the trial could not run
};

/// Fixed CSV column order of write_trials_csv.
const std::vector<std::string>& trial_columns();

TrialRow trial_row(int size, std::uint64_t seed, double gamma, const CollisionMode& mode, const MissionReport& report);

/// Runs sizes x seeds x gammas. Failures are recorded in the row's error
/// column and the sweep continues. Rows come back sorted by (size, seed, gamma).
std::vector<TrialRow> run_sweep(const SweepSpec& spec, const PlanningConfig& planning, const SolverConfig& solver,
                                const SimConfig& sim, const std::function<void(const TrialRow&)>& on_trial = {});

void write_trials_csv(const std::vector<TrialRow>& rows, const std::string& path);
std::vector<TrialRow> read_trials_csv(const std::string& path);

/// Per (size, gamma) group: trials, success rate, mean mission time (all
/// trials and successful ones), mean/max compute and mean minimum distances.
nlohmann::json aggregate_json(const std::vector<TrialRow>& rows);

/// File stem used for a trial's dump files.
std::string trial_stem(int size, std::uint64_t seed, double gamma);

}  // namespace amswarm
