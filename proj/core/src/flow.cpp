#include "regmod/flow.hpp"

#include <algorithm>
#include <cmath>

#include "regmod/errors.hpp"
#include "regmod/prox.hpp"

namespace regmod {

namespace {

bool sparse_is_whole(const NonsmoothPart& h) {
  return std::all_of(h.blocks.begin(), h.blocks.end(),
                     [](const SparsityBlock& b) { return b.level == b.length; });
}

void note_failure(FlowMonitor& m, std::size_t k, double violation) {
  if (violation > m.worst) m.worst = violation;
  if (m.pass) {
    m.pass = false;
    m.failed_step = k;
  }
}

}  // namespace

Vector proximal_point_step(const FunctionInstance& f, const Vector& x, double tau) {
  const std::size_t p = f.dimension;
  const auto n = static_cast<Eigen::Index>(p);
  const auto& h = f.nonsmooth;
  const Matrix q = f.smooth.hessian(p);
  const Vector c = f.smooth.linear(p);
  const Matrix shifted = q + Matrix::Identity(n, n) / tau;
  const Vector rhs = c + x / tau;

  const bool smooth_only =
      h.kind == NonsmoothKind::none || (h.kind == NonsmoothKind::sparse && sparse_is_whole(h));
  if (smooth_only) return shifted.ldlt().solve(rhs);

  if (f.smooth.kind == SmoothKind::none && (h.kind == NonsmoothKind::l1 || h.kind == NonsmoothKind::plq)) {
    return prox_h(ProxRequest{h, x, tau});
  }
  if (h.kind == NonsmoothKind::l1) return minimize_l1_quadratic(shifted, rhs, h.weight);
  throw CapabilityError("no exact proximal-point step for instance '" + f.name + "'");
}

Trajectory integrate_flow(const FunctionInstance& f, const Vector& x0, double tau, double horizon) {
  if (!f.convex) throw CapabilityError("subgradient flow is only integrated for convex instances");
  if (!(tau > 0.0) || tau > 0.25) throw UsageError("flow step must satisfy 0 < tau <= 0.25");
  if (!(horizon >= 0.0)) throw UsageError("flow horizon must be nonnegative");
  if (static_cast<std::size_t>(x0.size()) != f.dimension) throw UsageError("x0 has the wrong dimension");
  if (!in_domain(f, x0)) throw UsageError("x0 lies outside dom f");
  const double count = std::round(horizon / tau);
  if (std::abs(count * tau - horizon) > 1e-9 * std::max(1.0, horizon)) {
    throw UsageError("flow horizon must be an integer multiple of tau");
  }
  const auto steps = static_cast<std::size_t>(count);

  Trajectory traj;
  traj.instance = f.name;
  traj.x0 = x0;
  traj.tau = tau;
  traj.horizon = horizon;
  traj.states.reserve(steps + 1);
  traj.states.push_back(x0);
  traj.values.push_back(evaluate(f, x0).value());
  for (std::size_t k = 0; k < steps; ++k) {
    Vector next = proximal_point_step(f, traj.states.back(), tau);
    traj.steps.push_back((next - traj.states.back()).norm());
    traj.values.push_back(evaluate(f, next).value());
    traj.states.push_back(std::move(next));
  }
  return traj;
}

FlowReport verify_flow_properties(const FunctionInstance& f, const Trajectory& traj,
                                  const CriticalSet& cs, double tol) {
  if (traj.states.empty()) throw UsageError("empty trajectory");
  FlowReport rep;
  rep.descent.name = "f-nonincreasing";
  rep.distance.name = "distance-to-critical-nonincreasing";
  rep.convergence.name = "terminal-on-critical-set";
  rep.energy.name = "energy-inequality";

  std::vector<double> values;
  values.reserve(traj.states.size());
  for (const auto& x : traj.states) {
    const ExtendedReal v = evaluate(f, x);
    values.push_back(v.is_finite() ? v.value() : kInfinity);
  }

  const double spread = std::max(1.0, (traj.states.front() - traj.states.back()).norm());
  const std::vector<Vector> grid = critical_grid(cs, traj.states.back(), spread);
  rep.grid_points = grid.size();

  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const double drop = values[k] - values[k + 1];
    if (drop < -tol) note_failure(rep.descent, k, -drop);

    const double sq = (traj.states[k + 1] - traj.states[k]).squaredNorm();
    const double deficit = sq / traj.tau - drop;
    if (deficit > tol) note_failure(rep.energy, k, deficit);

    for (const auto& z : grid) {
      const double rise = (traj.states[k + 1] - z).norm() - (traj.states[k] - z).norm();
      if (rise > tol) note_failure(rep.distance, k, rise);
    }
  }

  rep.terminal_distance = critical_distance(cs, traj.states.back());
  rep.limit_value = values.back();
  if (rep.terminal_distance > tol) {
    note_failure(rep.convergence, traj.states.size() - 1, rep.terminal_distance);
  }
  return rep;
}

}  // namespace regmod
