#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "regmod/critical_set.hpp"
#include "regmod/estimators.hpp"
#include "regmod/function_model.hpp"

namespace regmod {

struct Premises {
  bool convex = false;
  bool locally_convex = false;
  bool h_convex = false;
  bool composite = false;
  bool continuous_on_crit = false;
  bool crit_level_bounded = false;
  bool local_min = false;
  bool base_critical = false;
  double smoothness = 0.0;
  double rho = 0.0;
  bool rho_certified = false;
  std::string continuity_source;  // "catalog" or "derived"
  std::string crit_level_bounded_source;
  std::string local_min_source;
};

enum class CheckStatus { pass, fail, skipped };
std::string_view check_status_name(CheckStatus s);

struct ImplicationCheck {
  std::string name;      // "A".."H"
  std::string arrow;     // e.g. "QG => KL"
  std::string constant;  // the proof constant in closed form
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // lhs - rhs oriented so that >= 0 passes
  CheckStatus status = CheckStatus::skipped;
  std::string reason;
  std::size_t samples_checked = 0;
  std::size_t violations = 0;
};

struct ImplicationReport {
  std::string instance;
  Vector base;
  double tol = 0.05;
  Premises premises;
  std::vector<ImplicationCheck> checks;
  [[nodiscard]] bool any_failed() const;
};

/// Estimates sharing one cloud. An empty optional means the estimate could not
/// be formed; checks that need it are skipped with `reason`.
struct EstimateBundle {
  std::optional<ModulusEstimate> kl;
  std::optional<ModulusEstimate> subregularity;
  std::optional<ModulusEstimate> quadratic_growth;
  std::optional<ModulusEstimate> luo_tseng;
  std::string kl_reason;
  std::string luo_tseng_reason;
};

EstimateBundle estimate_all(const SampleCloud& cloud);

/// Premise record. Catalog flags win; unset flags are derived from the
/// instance, the cloud and the critical set.
Premises derive_premises(const FunctionInstance& f, const CriticalSet& cs, const SampleCloud& cloud,
                         const std::optional<ProxRegularityReport>& prox);

ImplicationReport cross_check(const FunctionInstance& f, const CriticalSet& cs, const SampleCloud& cloud,
                              const EstimateBundle& est,
                              const std::optional<ProxRegularityReport>& prox, double tol = 0.05);

struct SolverRecord {
  std::string mode;  // "prox-gradient" or "gradient"
  double step = 0.0;
  std::vector<Vector> iterates;
  std::vector<double> distances;  // dist(x_k, crit f)
  std::vector<double> residuals;  // |R(x_k)|; NaN without a prox kernel
  double rate = 0.0;              // tail geometric rate; 0 for finite termination
  std::size_t rate_points = 0;
  bool diverged = false;
};

/// x_{k+1} = prox_{tau h}(x_k - tau grad g(x_k)) for composite instances, plain
/// gradient steps on the a.e. gradient otherwise. Needs 0 < tau <= 1/L.
SolverRecord prox_grad_run(const FunctionInstance& f, const CriticalSet& cs, const Vector& x0, double tau,
                           std::size_t iterations);

}  // namespace regmod
