#include <doctest.h>

#include <random>

#include "amswarm/problem.hpp"
#include "oracles.hpp"

using namespace amswarm;

namespace {

std::shared_ptr<const BasisSet<double>> basis_for(const PlanningConfig& c) {
  return std::make_shared<const BasisSet<double>>(build_basis<double>(c.K, c.n, c.dt));
}

ConstraintTarget static_target(const Vec3& c, const Shape& s, int K, double dt, int id = 0) {
  return {TargetKind::Obstacle, id, s, predict_constant_velocity(c, Vec3::Zero(), K, dt)};
}

TrajectoryCoeffs random_coeffs(std::mt19937_64& rng, int nc) {
  std::uniform_real_distribution<double> U(-1, 1);
  TrajectoryCoeffs c(nc, 3);
  for (int i = 0; i < c.size(); ++i) c.data()[i] = U(rng);
  return c;
}

}  // namespace

TEST_CASE("stacked dimensions follow the target count") {
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  AgentSnapshot s;
  std::vector<ConstraintTarget> t;
  for (int j = 0; j < 3; ++j) t.push_back(static_target(Vec3(j, 0, 1), Shape::sphere(0.3), cfg.K, cfg.dt, j));
  const auto p3 = assemble(s, t, basis, cfg);
  CHECK(p3.A().rows() == 450);
  CHECK(p3.A().cols() == 33);
  CHECK(p3.G().rows() == 180);
  CHECK(p3.C().rows() == 9);
  const auto p0 = assemble(s, {}, basis, cfg);
  CHECK(p0.A().rows() == 180);
  CHECK(p0.A().cols() == 33);
  CHECK(p0.Q().rows() == 33);
}

TEST_CASE("build_b examples") {
  PlanningConfig cfg;
  cfg.K = 5;
  cfg.n = 3;
  cfg.kappa = 2;
  const auto basis = basis_for(cfg);
  const Shape s(0.5, 0.5, 1.0);
  const auto p = assemble(AgentSnapshot{}, {static_target(Vec3(1, 2, 3), s, 5, 0.1)}, basis, cfg);
  auto polar = PolarVars::zeros(5, 3);
  // All-zero magnitude: b holds the family centers.
  MatX b = build_b(p, polar);
  CHECK(b.topRows(5).isZero(0));
  CHECK(b.middleRows(5, 5).col(2).isApproxToConstant(-cfg.gravity));
  CHECK(b.bottomRows(5).col(0).isApproxToConstant(1.0));
  CHECK(b.bottomRows(5).col(2).isApproxToConstant(3.0));
  // d = 2 along +x on the target family: center + 2 * a * e_x.
  polar.d.col(2).setConstant(2.0);
  for (int k = 0; k < 5; ++k) polar.set_direction(k, 2, Vec3(1, 0, 0));
  b = build_b(p, polar);
  CHECK(b.bottomRows(5).col(0).isApproxToConstant(2.0));
  CHECK(b.bottomRows(5).col(1).isApproxToConstant(2.0));
  CHECK(b.bottomRows(5).col(2).isApproxToConstant(3.0));
  CHECK_THROWS_AS(build_b(p, PolarVars::zeros(5, 2)), std::invalid_argument);
}

TEST_CASE("equality residual agrees with a direct per-sample evaluation") {
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1, 1), P(0.1, 0.6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ConstraintTarget> t;
    for (int j = 0; j < 2; ++j) {
      t.push_back({TargetKind::Neighbor, j, Shape(P(rng), P(rng), P(rng)),
                   predict_constant_velocity(Vec3(U(rng), U(rng), 1), Vec3(U(rng), U(rng), 0), cfg.K, cfg.dt)});
    }
    const auto p = assemble(AgentSnapshot{}, t, basis, cfg);
    const TrajectoryCoeffs z = random_coeffs(rng, cfg.n + 1);
    ArrX alpha(cfg.K, 4), beta(cfg.K, 4), d(cfg.K, 4);
    for (int i = 0; i < alpha.size(); ++i) {
      alpha.data()[i] = 3 * U(rng);
      beta.data()[i] = 1.5 + 1.5 * U(rng);
      d.data()[i] = 1 + U(rng);
    }
    const auto polar = PolarVars::from_angles(alpha, beta, d);
    const VecX stacked = p.A() * z.reshaped() - build_b(p, polar).reshaped();

    const auto tr = sample_trajectory(*basis, z);
    double worst = 0.0;
    for (int k = 0; k < cfg.K; ++k) {
      auto u = [&](int f) { return oracle::unit(alpha(k, f), beta(k, f)); };
      const Vec3 rv = tr.velocity.row(k).transpose() - d(k, 0) * u(0);
      const Vec3 ra = tr.acceleration.row(k).transpose() + Vec3(0, 0, cfg.gravity) - d(k, 1) * u(1);
      for (int a = 0; a < 3; ++a) {
        const int R = p.rows_per_axis();
        worst = std::max(worst, std::abs(stacked[a * R + k] - rv[a]));
        worst = std::max(worst, std::abs(stacked[a * R + cfg.K + k] - ra[a]));
      }
      for (int j = 0; j < 2; ++j) {
        const Vec3 rt = tr.position.row(k).transpose() - t[j].centers.row(k).transpose() -
                        d(k, 2 + j) * t[j].shape.axes().cwiseProduct(u(2 + j));
        for (int a = 0; a < 3; ++a)
          worst = std::max(worst, std::abs(stacked[a * p.rows_per_axis() + (2 + j) * cfg.K + k] - rt[a]));
      }
    }
    CHECK(worst <= 1e-10);

    // Inequality rows: workspace bounds per sample.
    const VecX gi = p.G() * z.reshaped() - p.h_vector();
    for (int k = 0; k < cfg.K; ++k) {
      for (int a = 0; a < 3; ++a) {
        CHECK(std::abs(gi[a * 2 * cfg.K + k] - (tr.position(k, a) - cfg.workspace_max[a])) <= 1e-10);
        CHECK(std::abs(gi[a * 2 * cfg.K + cfg.K + k] - (cfg.workspace_min[a] - tr.position(k, a))) <= 1e-10);
      }
    }
  }
}

TEST_CASE("Q is symmetric PSD and reproduces the cost up to a constant") {
  for (int order : {1, 2}) {
    PlanningConfig cfg;
    cfg.smoothness_order = order;
    const auto basis = basis_for(cfg);
    AgentSnapshot s;
    s.goal = Vec3(1.0, -0.5, 1.2);
    const auto p = assemble(s, {}, basis, cfg);
    const MatX Q = p.Q();
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * Q.cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (Q + Q.transpose()));
    CHECK(es.eigenvalues().minCoeff() >= -1e-7 * es.eigenvalues().maxCoeff());

    auto direct_cost = [&](const TrajectoryCoeffs& z) {
      const auto tr = sample_trajectory(*basis, z);
      const MatX3& sm = order == 2 ? tr.acceleration : tr.velocity;
      double c = 0.0;
      for (int k = cfg.K - cfg.kappa; k < cfg.K; ++k) c += cfg.w_goal * (tr.position.row(k) - s.goal.transpose()).squaredNorm();
      for (int k = 0; k < cfg.K; ++k) c += cfg.w_smooth * sm.row(k).squaredNorm();
      return c;
    };
    auto model = [&](const TrajectoryCoeffs& z) {
      const VecX v = z.reshaped();
      return 0.5 * v.dot(Q * v) + p.q_vector().dot(v);
    };
    std::mt19937_64 rng(8);
    const double offset = direct_cost(TrajectoryCoeffs::Zero(cfg.n + 1, 3)) - model(TrajectoryCoeffs::Zero(cfg.n + 1, 3));
    for (int i = 0; i < 20; ++i) {
      const auto z = random_coeffs(rng, cfg.n + 1);
      const double dc = direct_cost(z);
      CHECK(std::abs(dc - model(z) - offset) <= 1e-9 * std::max(1.0, dc));
    }
  }
}

TEST_CASE("assembly is deterministic") {
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  AgentSnapshot s;
  s.position = Vec3(0.1, 0.2, 1.0);
  s.goal = Vec3(1, 1, 1);
  const auto t = std::vector<ConstraintTarget>{static_target(Vec3(0.5, 0.5, 1), Shape(0.3, 0.3, 0.6), cfg.K, cfg.dt)};
  const auto p1 = assemble(s, t, basis, cfg);
  const auto p2 = assemble(s, t, basis, cfg);
  CHECK(p1.A_axis == p2.A_axis);
  CHECK(p1.Q_axis == p2.Q_axis);
  CHECK(p1.q == p2.q);
  CHECK((p1.d_lower == p2.d_lower).all());
}

TEST_CASE("rest at goal solves the cost-only QP with the initial conditions") {
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  AgentSnapshot s;
  s.position = s.goal = Vec3(0.4, -0.3, 1.1);
  const auto p = assemble(s, {}, basis, cfg);
  const VecX z = oracle::equality_qp(p.Q(), p.q_vector(), p.C(), p.e_vector());
  const MatX zm = z.reshaped(cfg.n + 1, 3);
  for (int a = 0; a < 3; ++a) CHECK((zm.col(a).array() - s.goal[a]).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("initial conditions and static bounds") {
  const PlanningConfig cfg;
  const auto basis = basis_for(cfg);
  AgentSnapshot s;
  s.position = Vec3(0, 0, 1);
  s.velocity = Vec3(0.5, 0, 0);
  const Shape sh = Shape::sphere(0.5);
  const auto p = assemble(s, {static_target(Vec3(0.25, 0, 1), sh, cfg.K, cfg.dt)}, basis, cfg);
  CHECK(p.initial_magnitude[0] == doctest::Approx(0.5));
  CHECK(p.d_lower(0, 2) == doctest::Approx(0.5));
  CHECK(p.d_lower(1, 2) == 1.0);
  CHECK(p.d_upper(5, 0) == cfg.v_max);
  CHECK(p.d_lower(5, 1) == cfg.f_min);
  CHECK(p.d_upper(5, 1) == cfg.f_max);
  CHECK(p.e(1, 0) == 0.5);
}

TEST_CASE("invalid configurations are rejected") {
  const auto basis = basis_for(PlanningConfig{});
  PlanningConfig bad;
  bad.kappa = 0;
  CHECK_THROWS_AS(assemble(AgentSnapshot{}, {}, basis, bad), std::invalid_argument);
  bad = PlanningConfig{};
  bad.f_min = 20;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = PlanningConfig{};
  bad.K = 20;
  CHECK_THROWS_AS(assemble(AgentSnapshot{}, {}, basis, bad), std::invalid_argument);
  CHECK_THROWS_AS(assemble(AgentSnapshot{}, {}, nullptr, PlanningConfig{}), std::invalid_argument);
}

TEST_CASE("detect_conflicts examples") {
  PlanningConfig cfg;
  const int K = cfg.K;
  const MatX3 own = predict_constant_velocity(Vec3(0, 0, 1), Vec3::Zero(), K, cfg.dt);
  // Padded neighbor envelope is 0.37 x 0.37 x 0.65.
  const NeighborPlan near{1, predict_constant_velocity(Vec3(0.36, 0, 1), Vec3::Zero(), K, cfg.dt)};
  const NeighborPlan far{2, predict_constant_velocity(Vec3(0.38, 0, 1), Vec3::Zero(), K, cfg.dt)};
  const NeighborPlan passing{3, predict_constant_velocity(Vec3(3, 0, 1), Vec3(-1, 0, 0), K, cfg.dt)};
  const ObstaclePrediction ob{7, Shape(0.3, 0.3, 1e6), predict_constant_velocity(Vec3(0.45, 0, 1), Vec3::Zero(), K, cfg.dt)};
  const auto out = detect_conflicts(own, {near, far, passing}, {ob}, cfg);
  REQUIRE(out.size() == 3);
  CHECK(out[0].id == 1);
  CHECK(out[0].shape == cfg.agent_shape);
  CHECK(out[1].id == 3);
  CHECK(out[2].kind == TargetKind::Obstacle);
  CHECK(out[2].shape == ob.envelope);
  CHECK(detect_conflicts(own, {far}, {}, cfg).empty());
  CHECK_THROWS_AS(detect_conflicts(own, {{4, MatX3::Zero(3, 3)}}, {}, cfg), std::invalid_argument);
}

TEST_CASE("detect_conflicts agrees with a direct per-step test") {
  const PlanningConfig cfg;
  const int K = cfg.K;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> U(-1, 1);
  const Vec3 pad = cfg.agent_shape.axes() + cfg.conflict_padding.axes();
  for (int trial = 0; trial < 200; ++trial) {
    const MatX3 own = predict_constant_velocity(Vec3(U(rng), U(rng), 1), Vec3(U(rng), U(rng), 0), K, cfg.dt);
    std::vector<NeighborPlan> nbs;
    for (int j = 0; j < 5; ++j) {
      nbs.push_back({j, predict_constant_velocity(Vec3(2 * U(rng), 2 * U(rng), 1 + 0.5 * U(rng)),
                                                  Vec3(U(rng), U(rng), 0), K, cfg.dt)});
    }
    const auto out = detect_conflicts(own, nbs, {}, cfg);
    std::vector<int> expected;
    for (const auto& nb : nbs) {
      bool hit = false;
      for (int k = 0; k < K; ++k) {
        double m = 0;
        for (int a = 0; a < 3; ++a) m += std::pow((own(k, a) - nb.positions(k, a)) / pad[a], 2);
        hit = hit || m <= 1.0;
      }
      if (hit) expected.push_back(nb.id);
    }
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i].id == expected[i]);
  }
}
