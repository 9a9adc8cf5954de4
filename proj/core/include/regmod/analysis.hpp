#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regmod/critical_set.hpp"
#include "regmod/estimators.hpp"
#include "regmod/flow.hpp"
#include "regmod/function_model.hpp"
#include "regmod/implication.hpp"

namespace regmod {

/// One (instance, base point) job.
struct RunSpec {
  std::string instance_ref;
  std::string base_selector;  // "" (catalog base point), "crit:k", or a literal
  std::optional<Vector> base;
  std::vector<double> radii{0.2, 0.1, 0.05};
  std::size_t per_radius = 128;
  std::uint64_t seed = 0;
  std::size_t prox_pairs = 1000;
  std::optional<Vector> start;  // flow and solver start; default is a nudge off the base
  double flow_tau = 0.25;
  double flow_horizon = 50.0;
  std::optional<double> solver_step;  // default 0.9/L (0.1 when L = 0)
  std::size_t solver_iterations = 200;
};

struct AnalysisResult {
  FunctionInstance instance;
  RunSpec spec;
  Vector base;
  CriticalSet critical_set{"", 0, {}};
  SampleCloud cloud;
  EstimateBundle estimates;
  ProxRegularityReport prox;
  ImplicationReport implications;
  SolverRecord solver;
  Vector start;
  std::optional<Trajectory> trajectory;
  std::optional<FlowReport> flow;
  std::string flow_skip_reason;
};

/// Resolves "crit:k" (k-th point of critical_grid around the origin with unit
/// radius) or falls back to the instance's first catalog base point.
Vector resolve_base(const FunctionInstance& f, const CriticalSet& cs, const std::string& selector,
                    const std::optional<Vector>& literal);

AnalysisResult analyze(const FunctionInstance& f, const RunSpec& spec, double tol = 0.05,
                       std::size_t jobs = 1);

}  // namespace regmod
