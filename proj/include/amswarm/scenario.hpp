#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "amswarm/polar.hpp"
#include "amswarm/types.hpp"

namespace amswarm {

/// Semi-axis used along z for cylinders, large enough to act as a 2-D constraint.
inline constexpr double kCylinderHalfHeight = 1e6;

struct Workspace {
  Vec3 min = Vec3(-2.0, -2.0, 0.0);
  Vec3 max = Vec3(2.0, 2.0, 2.0);

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Workspace inflated(double margin) const { return {(min.array() - margin).matrix(), (max.array() + margin).matrix()}; }
  Vec3 size() const { return max - min; }
  bool operator==(const Workspace&) const = default;
};

enum class ObstacleKind { Cylinder, Ellipsoid };

std::string to_string(ObstacleKind kind);
ObstacleKind obstacle_kind_from_string(const std::string& name);

struct Obstacle {
  Vec3 center = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Shape shape;  // physical semi-axes; c is ignored for cylinders
  ObstacleKind kind = ObstacleKind::Cylinder;

  /// Physical keep-out ellipsoid (cylinders get kCylinderHalfHeight along z).
  Shape keep_out() const {
    return kind == ObstacleKind::Cylinder ? Shape{shape.a, shape.b, kCylinderHalfHeight} : shape;
  }
  Vec3 position_at(double t) const { return center + velocity * t; }
  bool operator==(const Obstacle&) const = default;
};

struct AgentSpec {
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  bool operator==(const AgentSpec&) const = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<AgentSpec> agents;
  std::vector<Obstacle> obstacles;
  Workspace workspace;
  bool operator==(const Scenario&) const = default;
};

/// Sampling and validity rules shared by the generator and the validator.
struct ScenarioRules {
  Shape collision_shape{0.13, 0.13, 0.40};
  double separation_margin = 0.1;  // beyond collision_shape, for starts, goals and obstacle clearance
  double boundary_margin = 0.2;    // starts and goals are drawn this far inside the workspace
  double radius_min = 0.1;
  double radius_max = 0.2;
  // Free space between physical cylinder surfaces, wide enough for an agent's
  // planning envelope (2 x 0.17 m) to pass, so no wall or closed pocket forms.
  double obstacle_gap = 0.4;
  int max_attempts = 100000;

  /// Agent-agent shape that start and goal pairs must stay outside of.
  Shape separation_shape() const { return collision_shape.inflated(Shape::sphere(separation_margin)); }
  /// Obstacle envelope that starts and goals must stay outside of.
  Shape clearance_shape(const Obstacle& o) const {
    return o.keep_out().inflated(collision_shape).inflated(Shape::sphere(separation_margin));
  }
};

class OvercrowdedScenario : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario PRNG: 64-bit Mersenne Twister (fully specified by the C++
/// standard) with doubles built from the top 53 bits, so the same seed gives
/// the same scenario everywhere.
class ScenarioRng {
 public:
  explicit ScenarioRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Vec3 uniform(const Vec3& lo, const Vec3& hi) {
    Vec3 out;
    for (int a = 0; a < 3; ++a) out[a] = uniform(lo[a], hi[a]);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

/// Random point-to-point transition among static cylinders. Obstacles are
/// placed first (mid-height, rules.obstacle_gap apart), then starts, then goals, each
/// by rejection sampling against the rules.
Scenario generate_random(std::uint64_t seed, int n_agents, int n_obstacles, const Workspace& workspace,
                         const ScenarioRules& rules = {});

/// Agents evenly spaced on a circle at `height`, each heading to the opposite point.
Scenario antipodal(int n_agents, double radius, double height = 1.0);

/// Human-readable list of violated invariants; empty when valid.
std::vector<std::string> validation_errors(const Scenario& scenario, const ScenarioRules& rules = {});
/// Throws std::invalid_argument listing every violation.
void validate(const Scenario& scenario, const ScenarioRules& rules = {});

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace amswarm
