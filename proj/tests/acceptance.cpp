// Acceptance suite: prints one PASS/FAIL line per criterion, then a summary.
// Exit status is 0 when every criterion was evaluated; pass --strict to make
// it non-zero when any criterion fails. --out PATH also writes the lines to PATH.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "amswarm/sweep.hpp"
#include "oracles.hpp"

using namespace amswarm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  std::string id;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::shared_ptr<const BasisSet<double>> basis_for(const PlanningConfig& c) {
  return std::make_shared<const BasisSet<double>>(build_basis<double>(c.K, c.n, c.dt));
}

Outcome ac1() {
  Outcome o{"AC1", "projection oracle equivalence", false, {}, 0};
  const oracle::AngleGridOracle grid(2000, 1000);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1.5, 1.5), P(0.1, 1.0), D(0.0, 3.0), A(-3.14159, 3.14159), B(0, 3.14159);
  double worst_angle = -1e300, worst_mag = -1e300;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 diff(U(rng), U(rng), U(rng));
    const Shape s = (i % 4 == 0) ? Shape::sphere(P(rng)) : Shape(P(rng), P(rng), P(rng));
    const double d = D(rng);
    const auto ang = project_angles(diff, d, s);
    const double mine = oracle::angle_objective(diff, d, s.axes(), ang.alpha, ang.beta);
    worst_angle = std::max(worst_angle, mine - grid.minimum(diff, d, s.axes()));

    const Vec3 u = oracle::unit(A(rng), B(rng));
    const double lo = D(rng) / 2;
    const double hi = (i % 2) ? lo + D(rng) : std::numeric_limits<double>::infinity();
    const double dm = solve_magnitude(diff, u, s, lo, hi);
    const double dr = oracle::ternary_magnitude(diff, u, s.axes(), lo, hi);
    auto q = [&](double x) { return (diff - x * s.axes().cwiseProduct(u)).squaredNorm(); };
    worst_mag = std::max(worst_mag, q(dm) - q(dr));
  }
  o.pass = worst_angle <= 1e-6 && worst_mag <= 1e-6;
  o.detail = fmt("1000 instances; worst angle gap %.2e, worst magnitude gap %.2e (tol 1e-6)", worst_angle, worst_mag);
  return o;
}

// Random (n=3, K=5) instance with one obstacle and a mid-iteration state.
void small_instance(std::mt19937_64& rng, PlanningProblem& p, SolverState& st) {
  PlanningConfig cfg;
  cfg.K = 5;
  cfg.n = 3;
  cfg.kappa = 2;
  std::uniform_real_distribution<double> U(-1, 1), P(0.2, 0.6);
  AgentSnapshot s;
  s.position = Vec3(U(rng), U(rng), 1 + 0.5 * U(rng));
  s.velocity = 0.5 * Vec3(U(rng), U(rng), U(rng));
  s.acceleration = 0.5 * Vec3(U(rng), U(rng), U(rng));
  s.goal = Vec3(U(rng), U(rng), 1 + 0.5 * U(rng));
  const ConstraintTarget t{TargetKind::Obstacle, 0, Shape(P(rng), P(rng), P(rng)),
                           predict_constant_velocity(Vec3(U(rng), U(rng), 1), Vec3(U(rng), 0, 0), cfg.K, cfg.dt)};
  p = assemble(s, {t}, basis_for(cfg), cfg);
  const SolverConfig sc;
  st = SolverState::cold(p, sc);
  for (int i = 0; i < st.zeta1.size(); ++i) st.zeta1.data()[i] = U(rng);
  for (int i = 0; i < st.lambda.size(); ++i) st.lambda.data()[i] = 10 * U(rng);
  ArrX alpha(cfg.K, 3), beta(cfg.K, 3), d(cfg.K, 3);
  for (int i = 0; i < alpha.size(); ++i) {
    alpha.data()[i] = 3 * U(rng);
    beta.data()[i] = 1.5 + 1.5 * U(rng);
    d.data()[i] = 1.2 + U(rng);
  }
  st.polar = PolarVars::from_angles(alpha, beta, d);
  for (int i = 0; i < st.slack.size(); ++i) st.slack.data()[i] = 1 + U(rng);
  st.rho = sc.rho_at(std::uniform_int_distribution<int>(0, 40)(rng));
}

Outcome ac2() {
  Outcome o{"AC2", "trajectory step matches dense QP oracle", false, {}, 0};
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    PlanningProblem p;
    SolverState st;
    small_instance(rng, p, st);
    const MatX A = p.A(), G = p.G();
    const VecX b = build_b(p, st.polar).reshaped();
    const VecX lam = st.lambda.reshaped(), s = st.slack.reshaped(), h = p.h_vector(), q = p.q_vector();
    const MatX Q = p.Q();
    auto f = [&](const VecX& z) {
      return 0.5 * z.dot(Q * z) + q.dot(z) - lam.dot(z) + 0.5 * st.rho * (A * z - b).squaredNorm() +
             0.5 * st.rho * (G * z - h + s).squaredNorm();
    };
    const auto probe = oracle::probe_quadratic(f, static_cast<int>(Q.rows()));
    const VecX ref = oracle::equality_qp(probe.H, probe.g, p.C(), p.e_vector());
    const VecX mine = step_s1(p, st).zeta1.reshaped();
    worst = std::max(worst, (mine - ref).norm() / std::max(1e-12, ref.norm()));
  }
  o.pass = worst <= 1e-6;
  o.detail = fmt("200 instances (n=3, K=5); worst relative error %.2e (tol 1e-6)", worst);
  return o;
}

Outcome ac3() {
  Outcome o{"AC3", "AM feasibility on single-obstacle instances", false, {}, 0};
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1, 1);
  const SolverConfig sc;
  int converged = 0, clearance_ok = 0, speed_ok = 0, thrust_ok = 0;
  double worst_clear = 1e9, worst_speed = 0, lo_thrust = 1e9, hi_thrust = 0;
  for (int t = 0; t < 100; ++t) {
    AgentSnapshot s;
    s.position = Vec3(-1.5, 0.5 * U(rng), 1.0 + 0.3 * U(rng));
    s.goal = Vec3(1.5, 0.5 * U(rng), 1.0 + 0.3 * U(rng));
    const double r = 0.15 + 0.05 * U(rng);
    const Shape env = Shape(r, r, r * (2.0 + 0.5 * U(rng))).inflated(cfg.agent_shape);
    const Vec3 c(0.3 * U(rng), 0.1 * U(rng), 1.0);
    const ConstraintTarget tg{TargetKind::Obstacle, 0, env, predict_constant_velocity(c, Vec3::Zero(), cfg.K, cfg.dt)};
    const auto p = assemble(s, {tg}, basis, cfg);
    const auto res = solve(p, std::nullopt, sc, CollisionMode::standard());
    if (!res.diagnostics.converged) continue;
    ++converged;
    const auto tr = sample_trajectory(*basis, res.coeffs);
    double clear = 1e9, speed = 0, flo = 1e9, fhi = 0;
    for (int k = 0; k < cfg.K; ++k) {
      const Vec3 d = tr.position.row(k).transpose() - c;
      clear = std::min(clear, d.cwiseQuotient(env.axes()).squaredNorm());
      speed = std::max(speed, tr.velocity.row(k).norm());
      const double f = (tr.acceleration.row(k).transpose() + Vec3(0, 0, cfg.gravity)).norm();
      flo = std::min(flo, f);
      fhi = std::max(fhi, f);
    }
    clearance_ok += clear >= 1 - 1e-3;
    speed_ok += speed <= cfg.v_max * 1.01;
    thrust_ok += flo >= cfg.f_min * 0.99 && fhi <= cfg.f_max * 1.01;
    worst_clear = std::min(worst_clear, clear);
    worst_speed = std::max(worst_speed, speed);
    lo_thrust = std::min(lo_thrust, flo);
    hi_thrust = std::max(hi_thrust, fhi);
  }
  o.pass = converged >= 95 && clearance_ok == converged && speed_ok == converged && thrust_ok == converged;
  o.detail = fmt(
      "converged %d/100 (need 95); of converged: clearance ok %d (worst metric^2 %.4f, need >= 0.999), speed ok %d "
      "(max %.4f), thrust ok %d (range [%.3f, %.3f])",
      converged, clearance_ok, worst_clear, speed_ok, worst_speed, thrust_ok, lo_thrust, hi_thrust);
  return o;
}

Outcome ac4() {
  Outcome o{"AC4", "barrier gamma=1 bitwise equals standard", false, {}, 0};
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1, 1);
  int identical = 0;
  for (int t = 0; t < 45; ++t) {
    AgentSnapshot s;
    s.position = Vec3(-1.5, 0.5 * U(rng), 1.0 + 0.3 * U(rng));
    s.velocity = 0.3 * Vec3(U(rng), U(rng), 0);
    s.goal = Vec3(1.5, 0.5 * U(rng), 1.0 + 0.3 * U(rng));
    std::vector<ConstraintTarget> targets;
    const int M = 1 + t % 3;
    for (int j = 0; j < M; ++j) {
      const Vec3 c(0.8 * U(rng), 0.5 * U(rng), 1.0);
      targets.push_back({TargetKind::Neighbor, j, cfg.agent_shape,
                         predict_constant_velocity(c, 0.5 * Vec3(U(rng), U(rng), 0), cfg.K, cfg.dt)});
    }
    const auto p = assemble(s, targets, basis, cfg);
    const auto a = solve(p, std::nullopt, SolverConfig{}, CollisionMode::standard());
    const auto b = solve(p, std::nullopt, SolverConfig{}, CollisionMode::barrier(1.0));
    identical += (a.coeffs.array() == b.coeffs.array()).all() && a.diagnostics.iterations == b.diagnostics.iterations;
  }
  // Full missions exercise warm starts and conflict sets as well.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto sc = generate_random(seed, 6, 8, centered_workspace(4, 4, 2));
    const auto a = run_mission(sc, cfg, SolverConfig{}, CollisionMode::standard());
    const auto b = run_mission(sc, cfg, SolverConfig{}, CollisionMode::barrier(1.0));
    identical += report_json(a, false).dump() == report_json(b, false).dump();
  }
  o.pass = identical == 50;
  o.detail = fmt("%d/50 identical (45 solves compared coefficient-wise, 5 missions compared as report bytes)", identical);
  return o;
}

struct SweepResult {
  std::vector<TrialRow> rows;
  double seconds = 0;
};

SweepResult sweep(std::uint64_t seeds, bool barrier, double gamma, const std::string& dumps) {
  SweepSpec spec;
  spec.sizes = {10};
  spec.seed_begin = 0;
  spec.seed_end = seeds;
  spec.obstacles = 16;
  spec.barrier = barrier;
  spec.gammas = {gamma};
  spec.dump_dir = dumps;
  const auto t0 = std::chrono::steady_clock::now();
  SweepResult r;
  r.rows = run_sweep(spec, PlanningConfig{}, SolverConfig{}, SimConfig{});
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

Outcome ac6(const SweepResult& base, const fs::path& dumps) {
  Outcome o{"AC6", "swarm success at desk scale", false, {}, base.seconds};
  int successes = 0, rechecked = 0, errors = 0;
  for (const auto& r : base.rows) {
    if (!r.error.empty()) {
      ++errors;
      continue;
    }
    if (!r.success) continue;
    ++successes;
    const std::string stem = (dumps / trial_stem(r.size, r.seed, r.gamma)).string();
    const auto check = recheck_trajectory(load_scenario(stem + "_scenario.json"), read_trajectory_csv(stem + "_trajectory.csv"),
                                          PlanningConfig{}.dt, PlanningConfig{}.collision_shape);
    rechecked += check.collision_free && check.goals_reached;
  }
  const int n = static_cast<int>(base.rows.size());
  o.pass = n == 100 && successes >= 90 && rechecked == successes && errors == 0;
  o.detail = fmt("N=10, 16 obstacles, gamma=1: success %d/%d (need 90); %d/%d successful trials re-checked clean from dumps; %d errors",
                 successes, n, rechecked, successes, errors);
  return o;
}

Outcome ac5(const SweepResult& base, const SweepResult& bf) {
  Outcome o{"AC5", "barrier clearance trend (gamma 0.9 vs 1)", false, {}, bf.seconds};
  std::vector<double> m1, m9, t1, t9, e1, e9;
  for (const auto& r : base.rows) {
    if (r.seed >= 50) continue;
    m1.push_back(r.min_inter_agent_metric);
    t1.push_back(r.mission_time);
    e1.push_back(r.min_inter_agent_distance);
  }
  for (const auto& r : bf.rows) {
    m9.push_back(r.min_inter_agent_metric);
    t9.push_back(r.mission_time);
    e9.push_back(r.min_inter_agent_distance);
  }
  const double gain = mean(m9) / mean(m1) - 1.0;
  o.pass = m1.size() == 50 && m9.size() == 50 && gain >= 0.02 && mean(t9) >= mean(t1);
  o.detail = fmt(
      "50 paired seeds: mean min inter-agent metric %.4f -> %.4f (%+.2f%%, need >= +2%%); mean mission time %.3f -> %.3f s "
      "(need >=); Euclidean min distance %.4f -> %.4f m (info)",
      mean(m1), mean(m9), 100 * gain, mean(t1), mean(t9), mean(e1), mean(e9));
  return o;
}

Outcome ac7() {
  Outcome o{"AC7", "per-agent compute scaling (antipodal, gamma 0.9)", false, {}, 0};
  std::vector<double> xs, ys;
  std::string runs;
  for (int n : {2, 4, 6, 8}) {
    const auto r = run_mission(antipodal(n, 1.5), PlanningConfig{}, SolverConfig{}, CollisionMode::barrier(0.9));
    // Per-agent solve time: an agent's mean over its solves; median over agents.
    std::vector<double> per_agent;
    for (const auto& agent : r.solves) {
      double sum = 0.0;
      for (const auto& s : agent) sum += s.compute_us;
      per_agent.push_back(agent.empty() ? 0.0 : sum / static_cast<double>(agent.size()));
    }
    std::sort(per_agent.begin(), per_agent.end());
    const std::size_t h = per_agent.size() / 2;
    const double med = per_agent.size() % 2 ? per_agent[h] : 0.5 * (per_agent[h - 1] + per_agent[h]);
    xs.push_back(n);
    ys.push_back(med / 1000.0);
    runs += fmt(" N=%d: %.3f ms (single-solve median %.3f ms)%s;", n, ys.back(), r.median_compute_us() / 1000.0,
                r.success ? "" : " mission failed");
  }
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  o.pass = r2 >= 0.8 && ys.back() <= 50.0;
  o.detail = fmt("median over agents of mean solve time:%s linear fit R^2 %.3f (need 0.8), N=8 %.3f ms (limit 50)", runs.c_str(), r2,
                 ys.back());
  return o;
}

Outcome ac8() {
  Outcome o{"AC8", "determinism across thread counts", false, {}, 0};
  int identical = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sc = generate_random(seed, 10, 16, centered_workspace(4, 4, 2));
    SimConfig one, many;
    many.threads = 4;
    const auto a = run_mission(sc, PlanningConfig{}, SolverConfig{}, CollisionMode::barrier(0.9), one);
    const auto b = run_mission(sc, PlanningConfig{}, SolverConfig{}, CollisionMode::barrier(0.9), many);
    identical += report_json(a, false).dump() == report_json(b, false).dump();
  }
  o.pass = identical == 10;
  o.detail = fmt("%d/10 reports byte-identical between 1 and 4 threads (timing fields excluded)", identical);
  return o;
}

template <typename F>
Outcome timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = f();
  o.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return o;
}

std::string line(const Outcome& o) {
  return fmt("%s %s: %s [%s] (%.1f s)", o.pass ? "PASS" : "FAIL", o.id.c_str(), o.title.c_str(), o.detail.c_str(),
             o.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::string out_path;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) {
      strict = true;
    } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      out_path = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--strict] [--out PATH]\n");
      return 1;
    }
  }
  std::vector<std::string> lines;
  auto emit = [&](const std::string& l) {
    std::printf("%s\n", l.c_str());
    std::fflush(stdout);
    lines.push_back(l);
  };
  auto flush_file = [&] {
    if (out_path.empty()) return;
    std::ofstream f(out_path);
    for (const auto& l : lines) f << l << "\n";
  };
  std::vector<Outcome> all;
  auto record = [&](Outcome o) {
    emit(line(o));
    all.push_back(std::move(o));
  };
  try {
    record(timed(ac1));
    record(timed(ac2));
    record(timed(ac3));
    record(timed(ac4));

    const fs::path dumps = fs::temp_directory_path() / "amswarm_acceptance_dumps";
    fs::remove_all(dumps);
    const auto base = sweep(100, false, 1.0, dumps.string());
    const auto bf = sweep(50, true, 0.9, "");
    std::vector<Outcome> pair{ac5(base, bf), ac6(base, dumps)};
    std::sort(pair.begin(), pair.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    for (auto& o : pair) record(o);
    fs::remove_all(dumps);

    record(timed(ac7));
    record(timed(ac8));
  } catch (const std::exception& e) {
    emit(fmt("ERROR acceptance suite aborted: %s", e.what()));
    flush_file();
    return 2;
  }
  const auto passed = std::count_if(all.begin(), all.end(), [](const Outcome& o) { return o.pass; });
  emit(fmt("SUMMARY %ld/%zu criteria passed", static_cast<long>(passed), all.size()));
  flush_file();
  return strict && passed != static_cast<long>(all.size()) ? 1 : 0;
}
