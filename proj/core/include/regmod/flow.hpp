#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regmod/critical_set.hpp"
#include "regmod/function_model.hpp"

namespace regmod {

/// Backward-Euler discretization of x' in -df(x).
struct Trajectory {
  std::string instance;
  Vector x0;
  double tau = 0.0;
  double horizon = 0.0;
  std::vector<Vector> states;   // x_0 .. x_K
  std::vector<double> values;   // f(x_k)
  std::vector<double> steps;    // |x_{k+1} - x_k|, one per transition
  [[nodiscard]] const Vector& limit() const { return states.back(); }
};

/// Exact proximal-point step argmin_u f(u) + |u - x|^2 / (2 tau) for convex
/// catalog families. Throws CapabilityError where no exact kernel exists.
Vector proximal_point_step(const FunctionInstance& f, const Vector& x, double tau);

/// Requires a convex instance, x0 in dom f, 0 < tau <= 0.25 and horizon an
/// integer multiple of tau.
Trajectory integrate_flow(const FunctionInstance& f, const Vector& x0, double tau, double horizon);

struct FlowMonitor {
  std::string name;
  bool pass = true;
  std::optional<std::size_t> failed_step;  // first offending transition k -> k+1
  double worst = 0.0;                       // largest violation observed
};

struct FlowReport {
  FlowMonitor descent;       // (a) f(x_k) nonincreasing
  FlowMonitor distance;      // (b) |x_k - z| nonincreasing for grid critical points z
  FlowMonitor convergence;   // (c) terminal state on crit f
  FlowMonitor energy;        // (d) f_k - f_{k+1} >= |dx|^2 / tau
  double terminal_distance = 0.0;
  double limit_value = 0.0;
  std::size_t grid_points = 0;
  [[nodiscard]] bool all_pass() const {
    return descent.pass && distance.pass && convergence.pass && energy.pass;
  }
};

/// Values are recomputed from the states, so edited trajectories are judged on
/// what they contain.
FlowReport verify_flow_properties(const FunctionInstance& f, const Trajectory& traj,
                                  const CriticalSet& cs, double tol = 1e-10);

}  // namespace regmod
