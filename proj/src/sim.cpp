#include "amswarm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amswarm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_metric(const Vec3& diff, const Shape& shape) { return diff.cwiseQuotient(shape.axes()).squaredNorm(); }

}  // namespace

int MissionReport::nonconverged_solves() const {
  int n = 0;
  for (const auto& agent : solves)
    for (const auto& s : agent) n += s.converged ? 0 : 1;
  return n;
}

int MissionReport::total_solves() const {
  int n = 0;
  for (const auto& agent : solves) n += static_cast<int>(agent.size());
  return n;
}

std::vector<double> MissionReport::compute_times_us() const {
  std::vector<double> out;
  for (const auto& agent : solves)
    for (const auto& s : agent) out.push_back(s.compute_us);
  return out;
}

double MissionReport::mean_compute_us() const {
  const auto t = compute_times_us();
  if (t.empty()) return 0.0;
  double sum = 0.0;
  for (double v : t) sum += v;
  return sum / static_cast<double>(t.size());
}

double MissionReport::max_compute_us() const {
  const auto t = compute_times_us();
  return t.empty() ? 0.0 : *std::max_element(t.begin(), t.end());
}

double MissionReport::median_compute_us() const {
  auto t = compute_times_us();
  if (t.empty()) return 0.0;
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

namespace {

double series_min(const std::vector<double>& v) {
  double m = kInf;
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace

double MissionReport::min_inter_agent_metric_overall() const { return series_min(min_inter_agent_metric); }
double MissionReport::min_obstacle_metric_overall() const { return series_min(min_obstacle_metric); }
double MissionReport::min_inter_agent_distance_overall() const { return series_min(min_inter_agent_distance); }
double MissionReport::min_obstacle_distance_overall() const { return series_min(min_obstacle_distance); }

std::vector<CollisionEvent> check_collision(const MatX3& positions, const std::vector<Obstacle>& obstacles,
                                            const Shape& collision_shape, int round) {
  std::vector<CollisionEvent> out;
  const int N = static_cast<int>(positions.rows());
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double m = squared_metric((positions.row(i) - positions.row(j)).transpose(), collision_shape);
      if (m < 1.0) out.push_back({round, ViolationKind::AgentAgent, i, j, m});
    }
  }
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < static_cast<int>(obstacles.size()); ++j) {
      const auto& o = obstacles[j];
      const double m = squared_metric(positions.row(i).transpose() - o.center, o.keep_out().inflated(collision_shape));
      if (m < 1.0) out.push_back({round, ViolationKind::AgentObstacle, i, j, m});
    }
  }
  return out;
}

bool check_goal_reached(const AgentSnapshot& snapshot, const Vec3& goal, double tol_pos, double tol_vel) {
  return (snapshot.position - goal).norm() <= tol_pos && snapshot.velocity.norm() <= tol_vel;
}

MatX3 shift_plan(const MatX3& plan) {
  const Eigen::Index K = plan.rows();
  MatX3 out(K, 3);
  if (K == 0) return out;
  out.topRows(K - 1) = plan.bottomRows(K - 1);
  out.row(K - 1) = plan.row(K - 1);
  return out;
}

PlanningConfig planning_config_for(const Scenario& scenario, const PlanningConfig& base, double inflation) {
  PlanningConfig cfg = base;
  const Workspace ws = scenario.workspace.inflated(inflation);
  cfg.workspace_min = ws.min;
  cfg.workspace_max = ws.max;
  return cfg;
}

namespace {

struct RoundMetrics {
  double agent_metric = kInf;
  double obstacle_metric = kInf;
  double agent_distance = kInf;
  double obstacle_distance = kInf;
};

// Euclidean distance from p to an agent or to an obstacle's physical surface
// (approximated by center distance minus the radius for cylinders, and minus
// the smallest semi-axis for ellipsoids).
RoundMetrics round_metrics(const MatX3& positions, const std::vector<Obstacle>& obstacles, const Shape& coll) {
  RoundMetrics m;
  const int N = static_cast<int>(positions.rows());
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const Vec3 d = (positions.row(i) - positions.row(j)).transpose();
      m.agent_metric = std::min(m.agent_metric, coll.metric(d));
      m.agent_distance = std::min(m.agent_distance, d.norm());
    }
    for (const auto& o : obstacles) {
      const Vec3 d = positions.row(i).transpose() - o.center;
      m.obstacle_metric = std::min(m.obstacle_metric, o.keep_out().inflated(coll).metric(d));
      const double surface = o.kind == ObstacleKind::Cylinder ? d.head<2>().norm() - o.shape.a
                                                              : d.norm() - o.shape.axes().minCoeff();
      m.obstacle_distance = std::min(m.obstacle_distance, surface);
    }
  }
  return m;
}

}  // namespace

MissionReport run_mission(const Scenario& scenario, const PlanningConfig& planning_base, const SolverConfig& solver,
                          const CollisionMode& mode, const SimConfig& sim) {
  if (sim.validate_scenario) validate(scenario);
  const PlanningConfig planning = planning_config_for(scenario, planning_base, sim.workspace_inflation);
  planning.validate();
  solver.validate();
  if (sim.threads < 1) throw std::invalid_argument("run_mission: threads must be at least 1");

  const int N = static_cast<int>(scenario.agents.size());
  const int K = planning.K;
  const double dt = planning.dt;
  const int max_rounds = static_cast<int>(std::floor(sim.time_limit / dt + 1e-9));
  const auto basis = std::make_shared<const BasisSet<double>>(build_basis<double>(K, planning.n, dt));

  WorldState world;
  world.obstacles = scenario.obstacles;
  for (const auto& a : scenario.agents) {
    AgentSnapshot s;
    s.position = a.start;
    s.goal = a.goal;
    world.agents.push_back(s);
    PublishedPlan p;
    p.positions = a.start.transpose().replicate(K, 1);
    p.velocities = MatX3::Zero(K, 3);
    world.plans.push_back(p);
  }
  std::vector<std::optional<TrajectoryCoeffs>> last_coeffs(static_cast<std::size_t>(N));

  MissionReport report;
  report.solves.resize(static_cast<std::size_t>(N));

  for (;;) {
    const int r = world.round;
    MatX3 positions(N, 3);
    for (int i = 0; i < N; ++i) positions.row(i) = world.agents[i].position.transpose();

    const RoundMetrics m = round_metrics(positions, world.obstacles, planning.collision_shape);
    report.min_inter_agent_metric.push_back(m.agent_metric);
    report.min_obstacle_metric.push_back(m.obstacle_metric);
    report.min_inter_agent_distance.push_back(m.agent_distance);
    report.min_obstacle_distance.push_back(m.obstacle_distance);
    if (sim.record_trajectory) {
      RoundRecord rec{r, positions, MatX3(N, 3), MatX3(N, 3)};
      for (int i = 0; i < N; ++i) {
        rec.velocity.row(i) = world.agents[i].velocity.transpose();
        rec.acceleration.row(i) = world.agents[i].acceleration.transpose();
      }
      report.trajectory.push_back(std::move(rec));
    }
    report.rounds = r + 1;
    report.mission_time = r * dt;

    auto events = check_collision(positions, world.obstacles, planning.collision_shape, r);
    if (!events.empty()) {
      report.collision = true;
      report.collision_events = std::move(events);
      break;
    }
    bool all_home = true;
    for (int i = 0; i < N; ++i) {
      all_home = all_home && check_goal_reached(world.agents[i], world.agents[i].goal, sim.goal_tol_pos, sim.goal_tol_vel);
    }
    if (all_home) {
      report.success = true;
      break;
    }
    if (r >= max_rounds) {
      report.timeout = true;
      break;
    }

    // Everyone sees the previous round's plans, advanced to the current time.
    std::vector<NeighborPlan> shared(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      shared[i] = {i, r == 0 ? world.plans[i].positions : shift_plan(world.plans[i].positions)};
    }
    std::vector<ObstaclePrediction> obstacle_preds;
    for (int j = 0; j < static_cast<int>(world.obstacles.size()); ++j) {
      const auto& o = world.obstacles[j];
      obstacle_preds.push_back(
          {j, o.keep_out().inflated(planning.agent_shape), predict_constant_velocity(o.center, o.velocity, K, dt)});
    }

    std::vector<SolveResult> results(static_cast<std::size_t>(N));
    std::vector<int> n_targets(static_cast<std::size_t>(N));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(N));
#pragma omp parallel for num_threads(sim.threads) schedule(dynamic, 1)
    for (int i = 0; i < N; ++i) {
      try {
        std::vector<NeighborPlan> others;
        others.reserve(static_cast<std::size_t>(N - 1));
        for (int j = 0; j < N; ++j)
          if (j != i) others.push_back(shared[j]);
        auto targets = detect_conflicts(shared[i].positions, others, obstacle_preds, planning);
        n_targets[i] = static_cast<int>(targets.size());
        const PlanningProblem problem = assemble(world.agents[i], std::move(targets), basis, planning);
        std::optional<TrajectoryCoeffs> warm;
        if (sim.warm_start && last_coeffs[i]) warm = shift_coefficients(*basis, *last_coeffs[i]);
        results[i] = solve(problem, warm, solver, mode);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    for (int i = 0; i < N; ++i) {
      const auto& res = results[i];
      const auto& d = res.diagnostics;
      report.solves[i].push_back({d.iterations, d.converged, n_targets[i], d.wall_us});
      const auto traj = sample_trajectory(*basis, res.coeffs);
      world.plans[i] = {traj.position, traj.velocity};
      last_coeffs[i] = res.coeffs;
      auto& s = world.agents[i];
      s.position = traj.position.row(1).transpose();
      s.velocity = traj.velocity.row(1).transpose();
      s.acceleration = traj.acceleration.row(1).transpose();
    }
    for (auto& o : world.obstacles) o.center += o.velocity * dt;
    ++world.round;
    world.elapsed = world.round * dt;
  }
  return report;
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json series_json(const std::vector<double>& v) {
  auto j = nlohmann::json::array();
  for (double x : v) j.push_back(finite_or_null(x));
  return j;
}

}  // namespace

nlohmann::json report_json(const MissionReport& r, bool include_timing) {
  nlohmann::json j;
  j["success"] = r.success;
  j["collision"] = r.collision;
  j["timeout"] = r.timeout;
  j["rounds"] = r.rounds;
  j["mission_time"] = r.mission_time;
  j["total_solves"] = r.total_solves();
  j["nonconverged_solves"] = r.nonconverged_solves();
  j["min_inter_agent_metric"] = finite_or_null(r.min_inter_agent_metric_overall());
  j["min_obstacle_metric"] = finite_or_null(r.min_obstacle_metric_overall());
  j["min_inter_agent_distance"] = finite_or_null(r.min_inter_agent_distance_overall());
  j["min_obstacle_distance"] = finite_or_null(r.min_obstacle_distance_overall());
  if (include_timing) {
    j["compute_us"] = {{"mean", r.mean_compute_us()}, {"median", r.median_compute_us()}, {"max", r.max_compute_us()}};
  }
  j["per_round"] = {{"min_inter_agent_metric", series_json(r.min_inter_agent_metric)},
                    {"min_obstacle_metric", series_json(r.min_obstacle_metric)},
                    {"min_inter_agent_distance", series_json(r.min_inter_agent_distance)},
                    {"min_obstacle_distance", series_json(r.min_obstacle_distance)}};
  auto events = nlohmann::json::array();
  for (const auto& e : r.collision_events) {
    events.push_back({{"round", e.round},
                      {"kind", e.kind == ViolationKind::AgentAgent ? "agent" : "obstacle"},
                      {"first", e.first},
                      {"second", e.second},
                      {"metric", e.metric}});
  }
  j["collision_events"] = events;
  auto agents = nlohmann::json::array();
  for (const auto& solves : r.solves) {
    nlohmann::json a;
    auto iters = nlohmann::json::array();
    auto conv = nlohmann::json::array();
    auto cons = nlohmann::json::array();
    auto times = nlohmann::json::array();
    for (const auto& s : solves) {
      iters.push_back(s.iterations);
      conv.push_back(s.converged);
      cons.push_back(s.constraints);
      times.push_back(s.compute_us);
    }
    a["iterations"] = iters;
    a["converged"] = conv;
    a["constraints"] = cons;
    if (include_timing) a["compute_us"] = times;
    agents.push_back(a);
  }
  j["agents"] = agents;
  return j;
}

void write_trajectory_csv(const MissionReport& report, double dt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file '" + path + "'");
  out.precision(17);
  out << "round,time,agent,x,y,z,vx,vy,vz,ax,ay,az\n";
  for (const auto& rec : report.trajectory) {
    for (Eigen::Index i = 0; i < rec.position.rows(); ++i) {
      out << rec.round << "," << rec.round * dt << "," << i;
      for (const MatX3* m : {&rec.position, &rec.velocity, &rec.acceleration})
        for (int a = 0; a < 3; ++a) out << "," << (*m)(i, a);
      out << "\n";
    }
  }
}

std::vector<RoundRecord> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file '" + path + "'");
  std::string line;
  std::getline(in, line);
  struct Row {
    int round, agent;
    double v[9];
  };
  std::vector<Row> rows;
  int max_agent = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw std::runtime_error("malformed trajectory row: " + line);
    Row r{std::stoi(cells[0]), std::stoi(cells[2]), {}};
    for (int k = 0; k < 9; ++k) r.v[k] = std::stod(cells[3 + k]);
    max_agent = std::max(max_agent, r.agent);
    rows.push_back(r);
  }
  std::vector<RoundRecord> out;
  const int N = max_agent + 1;
  for (const auto& r : rows) {
    if (out.empty() || out.back().round != r.round) {
      out.push_back({r.round, MatX3::Zero(N, 3), MatX3::Zero(N, 3), MatX3::Zero(N, 3)});
    }
    auto& rec = out.back();
    for (int a = 0; a < 3; ++a) {
      rec.position(r.agent, a) = r.v[a];
      rec.velocity(r.agent, a) = r.v[3 + a];
      rec.acceleration(r.agent, a) = r.v[6 + a];
    }
  }
  return out;
}

ReplayCheck recheck_trajectory(const Scenario& scenario, const std::vector<RoundRecord>& rounds, double dt,
                               const Shape& collision_shape, double tol_pos, double tol_vel) {
  ReplayCheck out;
  for (const auto& rec : rounds) {
    std::vector<Obstacle> obstacles = scenario.obstacles;
    for (auto& o : obstacles) o.center = o.position_at(rec.round * dt);
    // Brute-force pairwise evaluation, independent of check_collision.
    const Eigen::Index N = rec.position.rows();
    for (Eigen::Index i = 0; i < N; ++i) {
      const Vec3 pi = rec.position.row(i).transpose();
      for (Eigen::Index j = i + 1; j < N; ++j) {
        const Vec3 d = pi - rec.position.row(j).transpose();
        const double m = std::pow(d.x() / collision_shape.a, 2) + std::pow(d.y() / collision_shape.b, 2) +
                         std::pow(d.z() / collision_shape.c, 2);
        if (m < 1.0) out.events.push_back({rec.round, ViolationKind::AgentAgent, int(i), int(j), m});
      }
      for (std::size_t j = 0; j < obstacles.size(); ++j) {
        const Shape env = obstacles[j].keep_out().inflated(collision_shape);
        const Vec3 d = pi - obstacles[j].center;
        const double m = std::pow(d.x() / env.a, 2) + std::pow(d.y() / env.b, 2) + std::pow(d.z() / env.c, 2);
        if (m < 1.0) out.events.push_back({rec.round, ViolationKind::AgentObstacle, int(i), int(j), m});
      }
    }
  }
  out.collision_free = out.events.empty();
  if (!rounds.empty()) {
    const auto& last = rounds.back();
    out.final_round = last.round;
    out.goals_reached = static_cast<std::size_t>(last.position.rows()) == scenario.agents.size();
    for (Eigen::Index i = 0; i < last.position.rows() && out.goals_reached; ++i) {
      const double dp = (last.position.row(i).transpose() - scenario.agents[i].goal).norm();
      const double dv = last.velocity.row(i).norm();
      out.goals_reached = dp <= tol_pos && dv <= tol_vel;
    }
  }
  return out;
}

}  // namespace amswarm
