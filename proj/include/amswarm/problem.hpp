#pragma once

#include <memory>
#include <vector>

#include "amswarm/bernstein.hpp"
#include "amswarm/polar.hpp"
#include "amswarm/types.hpp"

namespace amswarm {

/// Per-agent planning parameters. Defaults are the swarm benchmark settings.
struct PlanningConfig {
  int K = 30;
  double dt = 0.1;
  int n = 10;
  double w_goal = 7000.0;
  double w_smooth = 100.0;
  int kappa = 5;
  int smoothness_order = 2;  // 1 penalizes velocity, 2 acceleration
  double gravity = kGravity;
  double v_max = 1.73;
  double f_min = 0.3 * kGravity;
  double f_max = 1.5 * kGravity;
  Shape agent_shape{0.17, 0.17, 0.45};
  Shape collision_shape{0.13, 0.13, 0.40};
  Shape conflict_padding{0.2, 0.2, 0.2};
  Vec3 workspace_min{-2.05, -2.05, -0.05};
  Vec3 workspace_max{2.05, 2.05, 2.05};

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

struct AgentSnapshot {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
};

enum class TargetKind { Neighbor, Obstacle };

/// One collision constraint: keep out of `shape` centered on the predicted
/// positions of a neighbor or obstacle.
struct ConstraintTarget {
  TargetKind kind = TargetKind::Neighbor;
  int id = -1;  // agent index or obstacle index
  Shape shape;
  MatX3 centers;  // K x 3
};

struct NeighborPlan {
  int id = -1;
  MatX3 positions;  // K x 3
};

/// Predicted obstacle positions over the horizon. `envelope` is the keep-out
/// shape used by the planner (physical size already padded by the agent).
struct ObstaclePrediction {
  int id = -1;
  Shape envelope;
  MatX3 centers;  // K x 3
};

/// Constant-velocity horizon prediction starting at the current center.
MatX3 predict_constant_velocity(const Vec3& center, const Vec3& velocity, int K, double dt);

/// Neighbors and obstacles whose padded envelopes are entered by `own_plan`
/// at some horizon step. Neighbors get config.agent_shape; obstacles keep
/// their envelope. Output order: neighbors (input order) then obstacles.
std::vector<ConstraintTarget> detect_conflicts(const MatX3& own_plan, const std::vector<NeighborPlan>& neighbor_plans,
                                               const std::vector<ObstaclePrediction>& obstacles,
                                               const PlanningConfig& config);

/// One agent's assembled planning data.
///
/// The problem is block diagonal over the three axes with identical blocks, so
/// only the per-axis block of every matrix is stored; the stacked matrices are
/// available through the accessors below. Per-axis row layout of A and b:
///   [velocity k=0..K-1 | acceleration k=0..K-1 | target 0 k=0..K-1 | target 1 ...]
/// and the stacked vectors order the axes x, y, z. Cost convention is
/// 0.5 zeta' Q zeta + q' zeta.
struct PlanningProblem {
  PlanningConfig config;
  AgentSnapshot snapshot;
  std::vector<ConstraintTarget> targets;
  std::shared_ptr<const BasisSet<double>> basis;

  MatX Q_axis;   // (n+1) x (n+1)
  MatX q;        // (n+1) x 3
  MatX A_axis;   // R x (n+1), R = K (2 + M)
  MatX G_axis;   // 2K x (n+1): [W; -W]
  MatX h;        // 2K x 3: [p_max; -p_min]
  MatX C_axis;   // 3 x (n+1): rows W[0], W1[0], W2[0]
  MatX e;        // 3 x 3: rows position, velocity, acceleration; columns axes

  // b = center + scale .* d .* omega, row-aligned with A_axis.
  MatX center;   // R x 3
  MatX scale;    // R x 3

  // Static magnitude bounds per (step, family); collision lower bounds here
  // are the standard ones (1, capped at the measured value on step 0).
  ArrX d_lower;  // K x (2 + M)
  ArrX d_upper;
  VecX initial_magnitude;  // M: ||Theta^-1 (p_now - xi[0])|| per target

  MatX AtA_axis;
  MatX GtG_axis;

  int K() const { return config.K; }
  int num_coeffs() const { return config.n + 1; }
  int num_targets() const { return static_cast<int>(targets.size()); }
  int num_families() const { return 2 + num_targets(); }
  int rows_per_axis() const { return config.K * num_families(); }

  MatX Q() const;
  VecX q_vector() const;
  MatX A() const;
  MatX G() const;
  VecX h_vector() const;
  MatX C() const;
  VecX e_vector() const;
  VecX xi(int axis) const;  // stacked collision-row centers for one axis
};

PlanningProblem assemble(const AgentSnapshot& snapshot, std::vector<ConstraintTarget> targets,
                         std::shared_ptr<const BasisSet<double>> basis, const PlanningConfig& config);

/// Stacked right-hand side b(zeta2, zeta3), R x 3 (per-axis columns).
MatX build_b(const PlanningProblem& problem, const PolarVars& polar);

/// Three copies of `block` on the diagonal.
MatX block_diag3(const MatX& block);

}  // namespace amswarm
