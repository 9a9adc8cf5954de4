#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regmod/critical_set.hpp"
#include "regmod/function_model.hpp"

namespace regmod {

struct SampleRecord {
  Vector x;
  double fgap = 0.0;   // f(x) - f(base), measured against reference_level
  double sdist = 0.0;  // dist(0, df(x))
  double cdist = 0.0;  // dist(x, crit f)
  double rnorm = 0.0;  // |R(x)|; NaN for non-composite instances
  std::size_t shell = 0;
};

struct CloudRequest {
  Vector base;
  std::vector<double> radii;  // strictly decreasing
  std::size_t per_radius = 128;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Seeded samples around a base point. Shell j holds points with
/// radii[j]/2 < |x - base| <= radii[j], drawn uniformly by volume on the
/// coordinates that may move (supp(base) for sparsity-constrained instances).
struct SampleCloud {
  std::string instance;
  Vector base;
  std::vector<double> radii;
  std::size_t per_radius = 0;
  std::uint64_t seed = 0;
  double reference = 0.0;
  bool composite = false;
  std::vector<SampleRecord> records;
  std::size_t excluded = 0;  // draws without an exact subdifferential formula
};

SampleCloud sample_cloud(const FunctionInstance& f, const CriticalSet& cs, const CloudRequest& req);

/// Coordinates a cloud around `base` is allowed to move.
std::vector<std::size_t> free_coordinates(const FunctionInstance& f, const Vector& base);

enum class ModulusKind { kl, subregularity, quadratic_growth, luo_tseng, prox_regularity };
std::string_view modulus_kind_name(ModulusKind kind);

struct ModulusEstimate {
  ModulusKind kind = ModulusKind::kl;
  double value = 0.0;
  std::optional<double> exponent;      // KL slope
  std::optional<double> fit_residual;  // RMS residual of the KL fit
  std::optional<double> window;        // KL: largest gap used; Luo-Tseng: largest |R|
  std::vector<double> per_radius;
  std::vector<double> growth_factors;  // deterioration per radius halving
  bool divergent = false;
  bool growth_failure = false;  // quadratic growth: negative ratio observed
  std::size_t samples_used = 0;
  std::string unavailable;  // nonempty when the estimate could not be formed
};

/// Growth factors normalized to one halving, in the direction in which larger
/// means worse. Divergent iff two consecutive factors are >= 2 or a value is infinite.
bool divergence_rule(const std::vector<double>& worse_values, const std::vector<double>& radii,
                     std::vector<double>* factors = nullptr);

ModulusEstimate estimate_kl(const SampleCloud& cloud);
ModulusEstimate estimate_subregularity(const SampleCloud& cloud);
ModulusEstimate estimate_quadratic_growth(const SampleCloud& cloud);
ModulusEstimate check_luo_tseng(const SampleCloud& cloud);

struct ProxRegularityRequest {
  Vector base;
  double rho = 0.0;
  double delta = 0.1;
  std::size_t pairs = 1000;
  std::uint64_t seed = 0;
};

struct ProxRegularityReport {
  double rho = 0.0;
  double delta = 0.0;
  std::size_t pairs = 0;
  double worst_slack = kInfinity;
  Vector worst_x;
  Vector worst_y;
  double rho_min = 0.0;  // smallest rho that certifies every sampled pair
  bool certified = true;
};

/// Minimum-norm element of df(x) where the catalog has an exact formula.
std::optional<Vector> min_norm_subgradient(const FunctionInstance& f, const Vector& x);

ProxRegularityReport check_prox_regularity(const FunctionInstance& f,
                                           const ProxRegularityRequest& req);

}  // namespace regmod
