#include "amswarm/problem.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace amswarm {

void PlanningConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("PlanningConfig: " + what); };
  if (K < 2) fail("K must be at least 2");
  if (n < 2) fail("n must be at least 2 to satisfy position, velocity and acceleration initial conditions");
  if (!(dt > 0)) fail("dt must be positive");
  if (kappa < 1 || kappa >= K) fail("kappa must satisfy 1 <= kappa < K");
  if (smoothness_order != 1 && smoothness_order != 2) fail("smoothness_order must be 1 or 2");
  if (!(w_goal >= 0 && w_smooth >= 0)) fail("weights must be non-negative");
  if (!(v_max > 0)) fail("v_max must be positive");
  if (!(f_min >= 0 && f_min < f_max)) fail("need 0 <= f_min < f_max");
  if (!(workspace_min.array() < workspace_max.array()).all()) fail("workspace_min must be below workspace_max");
}

MatX3 predict_constant_velocity(const Vec3& center, const Vec3& velocity, int K, double dt) {
  MatX3 out(K, 3);
  for (int k = 0; k < K; ++k) out.row(k) = (center + velocity * (k * dt)).transpose();
  return out;
}

namespace {

bool enters_envelope(const MatX3& own, const MatX3& other, const Shape& padded) {
  const Eigen::Array3d inv = padded.axes().cwiseInverse().array();
  for (Eigen::Index k = 0; k < own.rows(); ++k) {
    const Eigen::Array3d u = (own.row(k) - other.row(k)).transpose().array() * inv;
    if (u.square().sum() <= 1.0) return true;
  }
  return false;
}

}  // namespace

std::vector<ConstraintTarget> detect_conflicts(const MatX3& own_plan, const std::vector<NeighborPlan>& neighbor_plans,
                                               const std::vector<ObstaclePrediction>& obstacles,
                                               const PlanningConfig& config) {
  std::vector<ConstraintTarget> out;
  const Shape neighbor_padded = config.agent_shape.inflated(config.conflict_padding);
  for (const auto& nb : neighbor_plans) {
    if (nb.positions.rows() != own_plan.rows()) throw std::invalid_argument("detect_conflicts: plan length mismatch");
    if (enters_envelope(own_plan, nb.positions, neighbor_padded)) {
      out.push_back({TargetKind::Neighbor, nb.id, config.agent_shape, nb.positions});
    }
  }
  for (const auto& ob : obstacles) {
    if (ob.centers.rows() != own_plan.rows()) throw std::invalid_argument("detect_conflicts: obstacle horizon mismatch");
    if (enters_envelope(own_plan, ob.centers, ob.envelope.inflated(config.conflict_padding))) {
      out.push_back({TargetKind::Obstacle, ob.id, ob.envelope, ob.centers});
    }
  }
  return out;
}

MatX block_diag3(const MatX& block) {
  MatX out = MatX::Zero(3 * block.rows(), 3 * block.cols());
  for (int a = 0; a < 3; ++a) out.block(a * block.rows(), a * block.cols(), block.rows(), block.cols()) = block;
  return out;
}

MatX PlanningProblem::Q() const { return block_diag3(Q_axis); }
VecX PlanningProblem::q_vector() const { return q.reshaped(); }
MatX PlanningProblem::A() const { return block_diag3(A_axis); }
MatX PlanningProblem::G() const { return block_diag3(G_axis); }
VecX PlanningProblem::h_vector() const { return h.reshaped(); }
MatX PlanningProblem::C() const { return block_diag3(C_axis); }
VecX PlanningProblem::e_vector() const { return e.reshaped(); }

VecX PlanningProblem::xi(int axis) const {
  const int K = config.K;
  return center.col(axis).tail(static_cast<Eigen::Index>(K) * num_targets());
}

PlanningProblem assemble(const AgentSnapshot& snapshot, std::vector<ConstraintTarget> targets,
                         std::shared_ptr<const BasisSet<double>> basis, const PlanningConfig& config) {
  config.validate();
  if (!basis) throw std::invalid_argument("assemble: null basis");
  if (basis->K != config.K || basis->n != config.n || basis->dt != config.dt) {
    throw std::invalid_argument("assemble: basis does not match planning config");
  }
  const int K = config.K;
  const int nc = config.n + 1;
  const int M = static_cast<int>(targets.size());
  for (const auto& t : targets) {
    if (t.centers.rows() != K) throw std::invalid_argument("assemble: target centers must have K rows");
  }

  PlanningProblem p;
  p.config = config;
  p.snapshot = snapshot;
  p.targets = std::move(targets);
  p.basis = basis;
  const auto& W = basis->W;
  const auto& W1 = basis->W1;
  const auto& W2 = basis->W2;

  // Goal term over the last kappa steps plus smoothness on the chosen derivative.
  const auto Wg = W.bottomRows(config.kappa);
  const MatX& Ws = (config.smoothness_order == 2) ? W2 : W1;
  p.Q_axis = 2.0 * config.w_goal * (Wg.transpose() * Wg) + 2.0 * config.w_smooth * (Ws.transpose() * Ws);
  const VecX wg_colsum = Wg.transpose() * VecX::Ones(config.kappa);
  p.q.resize(nc, 3);
  for (int a = 0; a < 3; ++a) p.q.col(a) = -2.0 * config.w_goal * snapshot.goal[a] * wg_colsum;

  const int R = K * (2 + M);
  p.A_axis.resize(R, nc);
  p.A_axis.topRows(K) = W1;
  p.A_axis.middleRows(K, K) = W2;
  for (int j = 0; j < M; ++j) p.A_axis.middleRows((2 + j) * K, K) = W;

  p.G_axis.resize(2 * K, nc);
  p.G_axis.topRows(K) = W;
  p.G_axis.bottomRows(K) = -W;
  p.h.resize(2 * K, 3);
  for (int a = 0; a < 3; ++a) {
    p.h.col(a).head(K).setConstant(config.workspace_max[a]);
    p.h.col(a).tail(K).setConstant(-config.workspace_min[a]);
  }

  p.C_axis.resize(3, nc);
  p.C_axis.row(0) = W.row(0);
  p.C_axis.row(1) = W1.row(0);
  p.C_axis.row(2) = W2.row(0);
  p.e.resize(3, 3);
  p.e.row(0) = snapshot.position.transpose();
  p.e.row(1) = snapshot.velocity.transpose();
  p.e.row(2) = snapshot.acceleration.transpose();

  p.center = MatX::Zero(R, 3);
  p.scale = MatX::Ones(R, 3);
  p.center.col(2).segment(K, K).setConstant(-config.gravity);
  p.d_lower.resize(K, 2 + M);
  p.d_upper.resize(K, 2 + M);
  p.d_lower.col(0).setZero();
  p.d_upper.col(0).setConstant(config.v_max);
  p.d_lower.col(1).setConstant(config.f_min);
  p.d_upper.col(1).setConstant(config.f_max);
  p.initial_magnitude.resize(M);
  for (int j = 0; j < M; ++j) {
    const auto& t = p.targets[j];
    p.center.middleRows((2 + j) * K, K) = t.centers;
    const Vec3 ax = t.shape.axes();
    for (int a = 0; a < 3; ++a) p.scale.col(a).segment((2 + j) * K, K).setConstant(ax[a]);
    p.initial_magnitude[j] = t.shape.metric(snapshot.position - t.centers.row(0).transpose());
    p.d_lower.col(2 + j).setOnes();
    p.d_lower(0, 2 + j) = std::min(1.0, p.initial_magnitude[j]);
    p.d_upper.col(2 + j).setConstant(std::numeric_limits<double>::infinity());
  }

  p.AtA_axis = p.A_axis.transpose() * p.A_axis;
  p.GtG_axis = p.G_axis.transpose() * p.G_axis;
  return p;
}

MatX build_b(const PlanningProblem& problem, const PolarVars& polar) {
  const int K = problem.K();
  const int F = problem.num_families();
  if (polar.steps() != K || polar.families() != F) throw std::invalid_argument("build_b: polar dimensions mismatch");
  MatX b(problem.rows_per_axis(), 3);
  for (int f = 0; f < F; ++f) {
    const auto rows = Eigen::seqN(f * K, K);
    const Eigen::ArrayXd dk = polar.d.col(f);
    b.col(0)(rows) = problem.center.col(0)(rows).array() + problem.scale.col(0)(rows).array() * dk * polar.ux.col(f);
    b.col(1)(rows) = problem.center.col(1)(rows).array() + problem.scale.col(1)(rows).array() * dk * polar.uy.col(f);
    b.col(2)(rows) = problem.center.col(2)(rows).array() + problem.scale.col(2)(rows).array() * dk * polar.uz.col(f);
  }
  return b;
}

}  // namespace amswarm
