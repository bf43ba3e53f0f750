#pragma once

#include <optional>
#include <string>

#include "amswarm/problem.hpp"

namespace amswarm {

struct SolverConfig {
  int max_iterations = 2000;
  double threshold = 0.01;
  double rho_base = 1.3;
  double rho_cap = 5e5;
  double kkt_epsilon = 1e-9;

  void validate() const;
  /// min(rho_base^iter, rho_cap)
  double rho_at(int iter) const;
};

/// Collision lower bound used in the magnitude step: d >= 1 (standard) or the
/// discrete-time barrier bound driven by the previous iterate's d[k-1].
struct CollisionMode {
  enum class Kind { Standard, Barrier };
  Kind kind = Kind::Standard;
  double gamma = 1.0;

  static CollisionMode standard() { return {}; }
  static CollisionMode barrier(double gamma);
  bool is_barrier() const { return kind == Kind::Barrier; }
  std::string name() const;
};

/// Alternating-minimization iterate.
struct SolverState {
  TrajectoryCoeffs zeta1;  // (n+1) x 3
  PolarVars polar;         // K x (2 + M)
  MatX lambda;             // (n+1) x 3
  MatX slack;              // 2K x 3, non-negative
  double rho = 1.0;
  int iter = 0;
  double eq_residual = 0.0;
  double ineq_residual = 0.0;

  /// zeta2 = 0, zeta3 = 0, lambda = 0, s = 0, rho = rho_at(0).
  static SolverState cold(const PlanningProblem& problem, const SolverConfig& config = {});
};

struct S1Result {
  TrajectoryCoeffs zeta1;
  MatX mu;  // 3 x 3 equality duals, one column per axis
  bool regularized = false;
};

struct Residuals {
  double eq = 0.0;    // ||A zeta1 - b||
  double ineq = 0.0;  // ||max(0, G zeta1 - h)||
  double combined() const { return eq + ineq; }
};

/// Trajectory update: equality-constrained QP on the augmented objective with
/// the other blocks held fixed, solved through its KKT system.
S1Result step_s1(const PlanningProblem& problem, const SolverState& state, double kkt_epsilon = 1e-9);
/// Angle update: per-sample projection of state.zeta1 using state.polar.d.
PolarVars step_s2(const PlanningProblem& problem, const SolverState& state);
/// Magnitude update for state.zeta1 and the directions in state.polar.
ArrX step_s3(const PlanningProblem& problem, const SolverState& state, const CollisionMode& mode);
/// s = max(0, h - G zeta1)
MatX step_s4(const PlanningProblem& problem, const SolverState& state);
/// lambda - rho/2 A'(A zeta1 - b) - rho/2 G'(G zeta1 - h + s)
MatX step_s5(const PlanningProblem& problem, const SolverState& state);

/// Per-(step, family) magnitude bounds for the given previous magnitudes.
ArrX magnitude_lower_bounds(const PlanningProblem& problem, const ArrX& previous_d, const CollisionMode& mode);

Residuals compute_residuals(const PlanningProblem& problem, const SolverState& state);

struct SolveDiagnostics {
  int iterations = 0;
  double eq_residual = 0.0;
  double ineq_residual = 0.0;
  double wall_us = 0.0;
  bool converged = false;
  bool kkt_regularized = false;
};

struct SolveResult {
  TrajectoryCoeffs coeffs;
  SolveDiagnostics diagnostics;
};

/// Runs S1..S5 until the combined residual drops below config.threshold or
/// config.max_iterations iterations have run. Without a warm start the
/// iterate is initialized cold; with one, zeta2/zeta3/s are primed from the
/// given coefficients and lambda starts at zero. A non-converged solve
/// returns the iterate with the lowest residual.
SolveResult solve(const PlanningProblem& problem, const std::optional<TrajectoryCoeffs>& warm_start,
                  const SolverConfig& config, const CollisionMode& mode);

}  // namespace amswarm
