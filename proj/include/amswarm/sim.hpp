#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "amswarm/problem.hpp"
#include "amswarm/scenario.hpp"
#include "amswarm/solver.hpp"

namespace amswarm {

struct SimConfig {
  double goal_tol_pos = 0.1;  // m
  double goal_tol_vel = 0.2;  // m/s
  double time_limit = 20.0;   // s
  int threads = 1;            // agent-level solver threads; 1 is fully serial
  bool warm_start = true;     // seed each solve with the previous plan shifted by one step
  bool record_trajectory = false;
  /// Planning workspace is the scenario box grown by this much on every side.
  double workspace_inflation = 0.05;
  bool validate_scenario = true;  // false lets tests inject states the validator would reject
};

/// A planned trajectory as published to the other agents.
struct PublishedPlan {
  MatX3 positions;   // K x 3
  MatX3 velocities;  // K x 3
};

struct WorldState {
  int round = 0;
  std::vector<AgentSnapshot> agents;
  std::vector<PublishedPlan> plans;
  std::vector<Obstacle> obstacles;  // positions at the current time
  double elapsed = 0.0;             // round * dt
};

enum class ViolationKind { AgentAgent, AgentObstacle };

struct CollisionEvent {
  int round = 0;
  ViolationKind kind = ViolationKind::AgentAgent;
  int first = -1;   // agent index
  int second = -1;  // agent or obstacle index
  double metric = 0.0;  // squared collision-envelope metric, < 1
};

/// Executed state of every agent at one round, for replay and post-hoc checks.
struct RoundRecord {
  int round = 0;
  MatX3 position;      // N x 3
  MatX3 velocity;      // N x 3
  MatX3 acceleration;  // N x 3
};

struct SolveRecord {
  int iterations = 0;
  bool converged = false;
  int constraints = 0;
  double compute_us = 0.0;
};

struct MissionReport {
  bool success = false;
  bool collision = false;
  bool timeout = false;
  int rounds = 0;             // rounds whose state was checked
  double mission_time = 0.0;  // s, final round * dt
  // Indexed [agent][planning round].
  std::vector<std::vector<SolveRecord>> solves;
  // One entry per checked round. The *_metric series are sqrt of the collision
  // test value (>= 1 means clear); the *_distance series are Euclidean.
  std::vector<double> min_inter_agent_metric;
  std::vector<double> min_obstacle_metric;
  std::vector<double> min_inter_agent_distance;
  std::vector<double> min_obstacle_distance;
  std::vector<CollisionEvent> collision_events;
  std::vector<RoundRecord> trajectory;  // filled when SimConfig::record_trajectory

  int nonconverged_solves() const;
  int total_solves() const;
  /// Per-agent solve times across all rounds, in microseconds.
  std::vector<double> compute_times_us() const;
  double mean_compute_us() const;
  double max_compute_us() const;
  double median_compute_us() const;
  /// Minimum over all rounds; +inf when undefined (fewer than two agents / no obstacles).
  double min_inter_agent_metric_overall() const;
  double min_obstacle_metric_overall() const;
  double min_inter_agent_distance_overall() const;
  double min_obstacle_distance_overall() const;
};

/// Declared-collision test on executed states: pairs with
/// ||Theta_coll^-1 (p_i - p_j)||^2 < 1 and agents inside an obstacle's
/// physical envelope grown by Theta_coll.
std::vector<CollisionEvent> check_collision(const MatX3& positions, const std::vector<Obstacle>& obstacles,
                                            const Shape& collision_shape, int round = 0);

bool check_goal_reached(const AgentSnapshot& snapshot, const Vec3& goal, double tol_pos = 0.1, double tol_vel = 0.2);

/// Previous plan advanced one step, terminal sample held.
MatX3 shift_plan(const MatX3& plan);

/// Planning config for a scenario: workspace bounds taken from the scenario box.
PlanningConfig planning_config_for(const Scenario& scenario, const PlanningConfig& base, double inflation = 0.05);

/// Synchronous receding-horizon mission. Each round checks collisions, then
/// the goal criterion, then the time limit, and otherwise lets every agent
/// plan against the other agents' previous plans and advance one step.
MissionReport run_mission(const Scenario& scenario, const PlanningConfig& planning, const SolverConfig& solver,
                          const CollisionMode& mode, const SimConfig& sim = {});

/// Structured report. Timing fields are omitted when include_timing is false,
/// which is the byte-stable form used for determinism checks.
nlohmann::json report_json(const MissionReport& report, bool include_timing = true);

/// CSV with columns round,time,agent,x,y,z,vx,vy,vz,ax,ay,az.
void write_trajectory_csv(const MissionReport& report, double dt, const std::string& path);
std::vector<RoundRecord> read_trajectory_csv(const std::string& path);

struct ReplayCheck {
  bool collision_free = true;
  bool goals_reached = false;  // on the final recorded round
  int final_round = 0;
  std::vector<CollisionEvent> events;
};

/// Re-evaluates collisions and the goal criterion on a recorded trajectory.
ReplayCheck recheck_trajectory(const Scenario& scenario, const std::vector<RoundRecord>& rounds, double dt,
                               const Shape& collision_shape, double tol_pos = 0.1, double tol_vel = 0.2);

}  // namespace amswarm
