#include "amswarm/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace amswarm {

std::string to_string(ObstacleKind kind) { return kind == ObstacleKind::Cylinder ? "cylinder" : "ellipsoid"; }

ObstacleKind obstacle_kind_from_string(const std::string& name) {
  if (name == "cylinder") return ObstacleKind::Cylinder;
  if (name == "ellipsoid") return ObstacleKind::Ellipsoid;
  throw std::invalid_argument("unknown obstacle kind '" + name + "'");
}

namespace {

bool separated(const Vec3& p, const Vec3& q, const Shape& shape) { return shape.metric(p - q) >= 1.0; }

bool clear_of_obstacles(const Vec3& p, const std::vector<Obstacle>& obstacles, const ScenarioRules& rules) {
  for (const auto& o : obstacles) {
    if (!separated(p, o.center, rules.clearance_shape(o))) return false;
  }
  return true;
}

template <typename Accept>
Vec3 sample_point(ScenarioRng& rng, const Vec3& lo, const Vec3& hi, int max_attempts, const std::string& what,
                  Accept&& accept) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Vec3 p = rng.uniform(lo, hi);
    if (accept(p)) return p;
  }
  throw OvercrowdedScenario("overcrowded scenario: could not place " + what + " after " +
                            std::to_string(max_attempts) + " attempts");
}

std::string fmt_vec(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v.x() << ", " << v.y() << ", " << v.z() << ")";
  return os.str();
}

}  // namespace

Scenario generate_random(std::uint64_t seed, int n_agents, int n_obstacles, const Workspace& workspace,
                         const ScenarioRules& rules) {
  if (n_agents < 1) throw std::invalid_argument("generate_random: need at least one agent");
  if (n_obstacles < 0) throw std::invalid_argument("generate_random: negative obstacle count");
  if (!(workspace.min.array() < workspace.max.array()).all()) {
    throw std::invalid_argument("generate_random: empty workspace");
  }
  if (!(rules.obstacle_gap >= 0)) throw std::invalid_argument("generate_random: negative obstacle gap");
  if (!(rules.radius_min > 0 && rules.radius_min <= rules.radius_max)) {
    throw std::invalid_argument("generate_random: bad obstacle radius range");
  }
  const Vec3 lo = workspace.min.array() + rules.boundary_margin;
  const Vec3 hi = workspace.max.array() - rules.boundary_margin;
  if (!(lo.array() < hi.array()).all()) throw std::invalid_argument("generate_random: workspace smaller than margins");

  ScenarioRng rng(seed);
  Scenario s;
  s.seed = seed;
  s.workspace = workspace;
  const double mid_z = 0.5 * (workspace.min.z() + workspace.max.z());

  for (int i = 0; i < n_obstacles; ++i) {
    const double r = rng.uniform(rules.radius_min, rules.radius_max);
    const Vec3 olo(workspace.min.x() + r, workspace.min.y() + r, mid_z);
    const Vec3 ohi(workspace.max.x() - r, workspace.max.y() - r, mid_z);
    const Vec3 c = sample_point(rng, olo, ohi, rules.max_attempts, "obstacle " + std::to_string(i), [&](const Vec3& p) {
      for (const auto& o : s.obstacles) {
        if ((p - o.center).head<2>().norm() < r + o.shape.a + rules.obstacle_gap) return false;
      }
      return true;
    });
    s.obstacles.push_back({c, Vec3::Zero(), Shape{r, r, kCylinderHalfHeight}, ObstacleKind::Cylinder});
  }

  const Shape sep = rules.separation_shape();
  std::vector<Vec3> starts;
  for (int i = 0; i < n_agents; ++i) {
    starts.push_back(sample_point(rng, lo, hi, rules.max_attempts, "start " + std::to_string(i), [&](const Vec3& p) {
      if (!clear_of_obstacles(p, s.obstacles, rules)) return false;
      for (const auto& q : starts) {
        if (!separated(p, q, sep)) return false;
      }
      return true;
    }));
  }
  std::vector<Vec3> goals;
  for (int i = 0; i < n_agents; ++i) {
    goals.push_back(sample_point(rng, lo, hi, rules.max_attempts, "goal " + std::to_string(i), [&](const Vec3& p) {
      if (!clear_of_obstacles(p, s.obstacles, rules)) return false;
      for (const auto& q : goals) {
        if (!separated(p, q, sep)) return false;
      }
      return true;
    }));
  }
  for (int i = 0; i < n_agents; ++i) s.agents.push_back({starts[i], goals[i]});
  return s;
}

Scenario antipodal(int n_agents, double radius, double height) {
  if (n_agents < 2) throw std::invalid_argument("antipodal: need at least two agents");
  if (!(radius > 0) || !(height > 0)) throw std::invalid_argument("antipodal: radius and height must be positive");
  Scenario s;
  s.workspace = {Vec3(-(radius + 1.0), -(radius + 1.0), 0.0), Vec3(radius + 1.0, radius + 1.0, 2.0 * height)};
  for (int i = 0; i < n_agents; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n_agents;
    const Vec3 start(radius * std::cos(th), radius * std::sin(th), height);
    const Vec3 goal(-start.x(), -start.y(), height);
    s.agents.push_back({start, goal});
  }
  return s;
}

std::vector<std::string> validation_errors(const Scenario& s, const ScenarioRules& rules) {
  std::vector<std::string> errors;
  const auto& ws = s.workspace;
  if (!(ws.min.array() < ws.max.array()).all()) errors.push_back("workspace min must be below max");
  if (s.agents.empty()) errors.push_back("scenario has no agents");

  auto finite = [](const Vec3& v) { return v.allFinite(); };
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    const std::string tag = "agent " + std::to_string(i);
    if (!finite(a.start) || !finite(a.goal)) {
      errors.push_back(tag + ": non-finite start or goal");
      continue;
    }
    if (!ws.contains(a.start)) errors.push_back(tag + ": start " + fmt_vec(a.start) + " outside workspace");
    if (!ws.contains(a.goal)) errors.push_back(tag + ": goal " + fmt_vec(a.goal) + " outside workspace");
    for (std::size_t j = 0; j < s.obstacles.size(); ++j) {
      const Shape env = rules.clearance_shape(s.obstacles[j]);
      if (!separated(a.start, s.obstacles[j].center, env)) {
        errors.push_back(tag + ": start inside envelope of obstacle " + std::to_string(j));
      }
      if (!separated(a.goal, s.obstacles[j].center, env)) {
        errors.push_back(tag + ": goal inside envelope of obstacle " + std::to_string(j));
      }
    }
  }
  const Shape sep = rules.separation_shape();
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    for (std::size_t j = i + 1; j < s.agents.size(); ++j) {
      const std::string pair = std::to_string(i) + " and " + std::to_string(j);
      if (!separated(s.agents[i].start, s.agents[j].start, sep)) errors.push_back("starts of agents " + pair + " too close");
      if (!separated(s.agents[i].goal, s.agents[j].goal, sep)) errors.push_back("goals of agents " + pair + " too close");
    }
  }
  for (std::size_t j = 0; j < s.obstacles.size(); ++j) {
    const auto& o = s.obstacles[j];
    if (!finite(o.center) || !finite(o.velocity)) errors.push_back("obstacle " + std::to_string(j) + ": non-finite values");
  }
  return errors;
}

void validate(const Scenario& scenario, const ScenarioRules& rules) {
  const auto errors = validation_errors(scenario, rules);
  if (errors.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw std::invalid_argument(msg);
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["agents"] = nlohmann::json::array();
  for (const auto& a : s.agents) j["agents"].push_back({{"start", vec_json(a.start)}, {"goal", vec_json(a.goal)}});
  j["obstacles"] = nlohmann::json::array();
  for (const auto& o : s.obstacles) {
    j["obstacles"].push_back({{"center", vec_json(o.center)},
                              {"velocity", vec_json(o.velocity)},
                              {"shape", {{"a", o.shape.a}, {"b", o.shape.b}, {"c", o.shape.c}}},
                              {"kind", to_string(o.kind)}});
  }
  j["workspace"] = {{"min", vec_json(s.workspace.min)}, {"max", vec_json(s.workspace.max)}};
  return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : 0;
    for (const auto& a : field(j, "agents")) {
      s.agents.push_back({vec_from(field(a, "start"), "start"), vec_from(field(a, "goal"), "goal")});
    }
    if (j.contains("obstacles")) {
      for (const auto& o : j.at("obstacles")) {
        Obstacle ob;
        ob.center = vec_from(field(o, "center"), "center");
        ob.velocity = o.contains("velocity") ? vec_from(o.at("velocity"), "velocity") : Vec3::Zero();
        const auto& sh = field(o, "shape");
        ob.kind = obstacle_kind_from_string(field(o, "kind").get<std::string>());
        const double a = field(sh, "a").get<double>();
        const double b = field(sh, "b").get<double>();
        const double c = sh.contains("c") ? sh.at("c").get<double>() : kCylinderHalfHeight;
        ob.shape = Shape{a, b, c};
        s.obstacles.push_back(ob);
      }
    }
    const auto& ws = field(j, "workspace");
    s.workspace = {vec_from(field(ws, "min"), "workspace.min"), vec_from(field(ws, "max"), "workspace.max")};
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("cannot parse scenario file '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file '" + path + "'");
  out << to_json(scenario).dump(2) << "\n";
}

}  // namespace amswarm
