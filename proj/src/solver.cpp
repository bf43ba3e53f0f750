#include "amswarm/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace amswarm {

void SolverConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be at least 1");
  if (!(threshold > 0)) throw std::invalid_argument("SolverConfig: threshold must be positive");
  if (!(rho_base > 0) || !(rho_cap > 0)) throw std::invalid_argument("SolverConfig: rho schedule must be positive");
  if (!(kkt_epsilon >= 0)) throw std::invalid_argument("SolverConfig: kkt_epsilon must be non-negative");
}

double SolverConfig::rho_at(int iter) const { return std::min(std::pow(rho_base, iter), rho_cap); }

CollisionMode CollisionMode::barrier(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("CollisionMode: gamma must lie in [0, 1]");
  return {Kind::Barrier, gamma};
}

std::string CollisionMode::name() const { return is_barrier() ? "bf" : "standard"; }

SolverState SolverState::cold(const PlanningProblem& problem, const SolverConfig& config) {
  SolverState s;
  const int nc = problem.num_coeffs();
  s.zeta1 = TrajectoryCoeffs::Zero(nc, 3);
  s.polar = PolarVars::zeros(problem.K(), problem.num_families());
  s.lambda = MatX::Zero(nc, 3);
  s.slack = MatX::Zero(2 * problem.K(), 3);
  s.rho = config.rho_at(0);
  return s;
}

namespace {

const Shape kUnitShape{1.0, 1.0, 1.0};

const Shape& family_shape(const PlanningProblem& p, int f) {
  return f < 2 ? kUnitShape : p.targets[static_cast<std::size_t>(f - 2)].shape;
}

// A_axis * zeta1 - center: per-row vectors the polar terms must reproduce.
MatX sample_differences(const PlanningProblem& p, const TrajectoryCoeffs& zeta1) {
  return p.A_axis.lazyProduct(zeta1) - p.center;
}

void project_all(const PlanningProblem& p, const MatX& diff, PolarVars& polar) {
  const int K = p.K();
  const int F = p.num_families();
  for (int f = 0; f < F; ++f) {
    const Shape& shape = family_shape(p, f);
    for (int k = 0; k < K; ++k) {
      const Vec3 dv = diff.row(f * K + k).transpose();
      polar.set_direction(k, f, project_direction(dv, polar.d(k, f), shape));
    }
  }
}

void solve_all_magnitudes(const PlanningProblem& p, const MatX& diff, const ArrX& lower, PolarVars& polar) {
  const int K = p.K();
  const int F = p.num_families();
  for (int f = 0; f < F; ++f) {
    const Shape& shape = family_shape(p, f);
    for (int k = 0; k < K; ++k) {
      const Vec3 dv = diff.row(f * K + k).transpose();
      polar.d(k, f) = solve_magnitude(dv, polar.direction(k, f), shape, lower(k, f), p.d_upper(k, f));
    }
  }
}

MatX slack_update(const PlanningProblem& p, const TrajectoryCoeffs& zeta1) {
  return (p.h - p.G_axis.lazyProduct(zeta1)).cwiseMax(0.0);
}

// Dense KKT system of the trajectory step. All three axes share the same
// matrix, so one factorization serves three right-hand sides.
class KktSystem {
 public:
  explicit KktSystem(const PlanningProblem& p)
      : p_(p), nc_(p.num_coeffs()), At_(p.A_axis.transpose()), Gt_(p.G_axis.transpose()) {}

  void factor(double rho, double epsilon) {
    MatX kkt = MatX::Zero(nc_ + 3, nc_ + 3);
    kkt.topLeftCorner(nc_, nc_) = p_.Q_axis + rho * (p_.GtG_axis + p_.AtA_axis);
    kkt.topRightCorner(nc_, 3) = p_.C_axis.transpose();
    kkt.bottomLeftCorner(3, nc_) = p_.C_axis;
    lu_.compute(kkt);
    regularized_ = false;
    if (!(lu_.rcond() > 1e-14)) {
      kkt.topLeftCorner(nc_, nc_).diagonal().array() += std::max(epsilon, 1e-12);
      lu_.compute(kkt);
      regularized_ = true;
    }
    rho_ = rho;
  }

  S1Result solve(const MatX& b, const MatX& slack, const MatX& lambda) const {
    MatX rhs(nc_ + 3, 3);
    rhs.topRows(nc_) = -p_.q + rho_ * (Gt_.lazyProduct(p_.h - slack) + At_.lazyProduct(b)) + lambda;
    rhs.bottomRows(3) = p_.e;
    const MatX sol = lu_.solve(rhs);
    return {sol.topRows(nc_), sol.bottomRows(3), regularized_};
  }

  bool regularized() const { return regularized_; }
  const MatX& At() const { return At_; }
  const MatX& Gt() const { return Gt_; }

 private:
  const PlanningProblem& p_;
  int nc_;
  MatX At_;
  MatX Gt_;
  Eigen::PartialPivLU<MatX> lu_;
  double rho_ = 0.0;
  bool regularized_ = false;
};

}  // namespace

S1Result step_s1(const PlanningProblem& problem, const SolverState& state, double kkt_epsilon) {
  KktSystem kkt(problem);
  kkt.factor(state.rho, kkt_epsilon);
  return kkt.solve(build_b(problem, state.polar), state.slack, state.lambda);
}

PolarVars step_s2(const PlanningProblem& problem, const SolverState& state) {
  PolarVars out = state.polar;
  project_all(problem, sample_differences(problem, state.zeta1), out);
  return out;
}

ArrX magnitude_lower_bounds(const PlanningProblem& problem, const ArrX& previous_d, const CollisionMode& mode) {
  ArrX lower = problem.d_lower;
  if (!mode.is_barrier()) return lower;
  const int K = problem.K();
  for (int j = 0; j < problem.num_targets(); ++j) {
    const int f = 2 + j;
    // Step 0 is pinned by the initial condition; never ask for more than it has.
    const double d_now = problem.initial_magnitude[j];
    lower(0, f) = std::min(bf_lower_bound(d_now, mode.gamma), d_now);
    for (int k = 1; k < K; ++k) lower(k, f) = bf_lower_bound(previous_d(k - 1, f), mode.gamma);
  }
  return lower;
}

ArrX step_s3(const PlanningProblem& problem, const SolverState& state, const CollisionMode& mode) {
  PolarVars out = state.polar;
  const ArrX lower = magnitude_lower_bounds(problem, state.polar.d, mode);
  solve_all_magnitudes(problem, sample_differences(problem, state.zeta1), lower, out);
  return out.d;
}

MatX step_s4(const PlanningProblem& problem, const SolverState& state) { return slack_update(problem, state.zeta1); }

MatX step_s5(const PlanningProblem& problem, const SolverState& state) {
  const MatX r_eq = problem.A_axis * state.zeta1 - build_b(problem, state.polar);
  const MatX r_in = problem.G_axis * state.zeta1 - problem.h + state.slack;
  return state.lambda - 0.5 * state.rho * (problem.A_axis.transpose() * r_eq) -
         0.5 * state.rho * (problem.G_axis.transpose() * r_in);
}

Residuals compute_residuals(const PlanningProblem& problem, const SolverState& state) {
  const MatX r_eq = problem.A_axis * state.zeta1 - build_b(problem, state.polar);
  const MatX r_in = (problem.G_axis * state.zeta1 - problem.h).cwiseMax(0.0);
  return {r_eq.norm(), r_in.norm()};
}

SolveResult solve(const PlanningProblem& problem, const std::optional<TrajectoryCoeffs>& warm_start,
                  const SolverConfig& config, const CollisionMode& mode) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  SolverState st = SolverState::cold(problem, config);
  if (warm_start) {
    if (warm_start->rows() != problem.num_coeffs()) throw std::invalid_argument("solve: warm start has wrong size");
    st.zeta1 = *warm_start;
    const MatX diff = sample_differences(problem, st.zeta1);
    project_all(problem, diff, st.polar);
    solve_all_magnitudes(problem, diff, magnitude_lower_bounds(problem, st.polar.d, mode), st.polar);
    st.slack = slack_update(problem, st.zeta1);
  }

  KktSystem kkt(problem);
  double factored_rho = std::numeric_limits<double>::quiet_NaN();
  bool regularized = false;

  SolveResult result;
  result.coeffs = st.zeta1;
  double best = std::numeric_limits<double>::infinity();
  Residuals best_res{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};

  MatX b = build_b(problem, st.polar);
  int iter = 0;
  while (iter < config.max_iterations) {
    st.rho = config.rho_at(iter);
    if (st.rho != factored_rho) {
      kkt.factor(st.rho, config.kkt_epsilon);
      factored_rho = st.rho;
      regularized = regularized || kkt.regularized();
    }

    st.zeta1 = kkt.solve(b, st.slack, st.lambda).zeta1;                      // S1
    const MatX diff = sample_differences(problem, st.zeta1);
    project_all(problem, diff, st.polar);                                    // S2
    const ArrX lower = magnitude_lower_bounds(problem, st.polar.d, mode);
    solve_all_magnitudes(problem, diff, lower, st.polar);                    // S3
    st.slack = slack_update(problem, st.zeta1);                              // S4
    b = build_b(problem, st.polar);
    const MatX r_eq = diff + problem.center - b;
    const MatX g_res = problem.G_axis.lazyProduct(st.zeta1) - problem.h;
    st.lambda -= 0.5 * st.rho * (kkt.At().lazyProduct(r_eq) + kkt.Gt().lazyProduct(g_res + st.slack));  // S5

    ++iter;
    st.iter = iter;
    st.eq_residual = r_eq.norm();
    st.ineq_residual = g_res.cwiseMax(0.0).norm();
    const double combined = st.eq_residual + st.ineq_residual;
    if (combined < best) {
      best = combined;
      best_res = {st.eq_residual, st.ineq_residual};
      result.coeffs = st.zeta1;
    }
    if (combined < config.threshold) {
      result.diagnostics.converged = true;
      break;
    }
  }

  result.diagnostics.iterations = iter;
  result.diagnostics.eq_residual = best_res.eq;
  result.diagnostics.ineq_residual = best_res.ineq;
  result.diagnostics.kkt_regularized = regularized;
  result.diagnostics.wall_us =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace amswarm
