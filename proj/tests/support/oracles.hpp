#pragma once

// Independent reference computations used by the tests. None of them calls the
// kernels they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "regmod/critical_set.hpp"
#include "regmod/estimators.hpp"
#include "regmod/function_model.hpp"
#include "regmod/prox.hpp"
#include "regmod/runner.hpp"

namespace oracle {

using regmod::Matrix;
using regmod::Vector;

inline std::filesystem::path data_dir() { return REGMOD_TEST_DATA_DIR; }

inline regmod::FunctionInstance catalog(const std::string& name) {
  return regmod::resolve_instance(name, data_dir());
}

inline std::vector<std::string> catalog_names() { return regmod::list_catalog(data_dir()); }

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

/// Smallest |u - z| over u in C = {|u|_0 <= level} (optionally u >= 0), by
/// enumerating all supports of size `level`.
inline double brute_sparse_distance(const Vector& z, std::size_t level, bool nonneg) {
  const auto p = static_cast<std::size_t>(z.size());
  std::vector<bool> mask(p, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(level), true);
  double best = INFINITY;
  do {
    double sq = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      const double zi = z(static_cast<Eigen::Index>(i));
      const double ui = mask[i] ? (nonneg ? std::max(0.0, zi) : zi) : 0.0;
      sq += (zi - ui) * (zi - ui);
    }
    best = std::min(best, std::sqrt(sq));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

/// Central finite-difference gradient.
inline Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector a = x;
    Vector b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (fn(a) - fn(b)) / (2.0 * h);
  }
  return g;
}

/// Minimizes a scalar function on a uniform grid over [lo, hi].
inline double grid_argmin(const std::function<double(double)>& fn, double lo, double hi, double step) {
  double best = lo;
  double best_val = fn(lo);
  for (double t = lo; t <= hi + 1e-15; t += step) {
    const double v = fn(t);
    if (v < best_val) {
      best_val = v;
      best = t;
    }
  }
  return best;
}

/// Distance from x to {anchor + B y : G y >= h} by a grid over the coefficient
/// space (at most 2 coefficients), step `step` on [-span, span]^k.
inline double grid_piece_distance(const regmod::CriticalPiece& pc, const Vector& x, double span, double step) {
  const Eigen::Index k = pc.basis.cols();
  auto feasible = [&](const Vector& y) {
    return pc.constraints.rows() == 0 || ((pc.constraints * y - pc.bounds).array() >= -1e-12).all();
  };
  double best = INFINITY;
  if (k == 0) return (x - pc.anchor).norm();
  const auto n = static_cast<long>(std::llround(span / step));
  if (k == 1) {
    for (long i = -n; i <= n; ++i) {
      Vector y(1);
      y(0) = static_cast<double>(i) * step;
      if (feasible(y)) best = std::min(best, (x - pc.anchor - pc.basis * y).norm());
    }
  } else if (k == 2) {
    for (long i = -n; i <= n; ++i) {
      for (long j = -n; j <= n; ++j) {
        Vector y(2);
        y << static_cast<double>(i) * step, static_cast<double>(j) * step;
        if (feasible(y)) best = std::min(best, (x - pc.anchor - pc.basis * y).norm());
      }
    }
  }
  return best;
}

/// Points around every catalog base point plus their nearest critical points,
/// with the number of disagreements between "zero residual" (or zero
/// subdifferential distance for non-composite instances) and "distance to the
/// critical set at most 1e-9".
struct Consistency {
  std::size_t points = 0;
  std::size_t mismatches = 0;
};

inline Consistency residual_consistency(const regmod::FunctionInstance& f, std::size_t count,
                                        std::uint64_t seed) {
  const auto cs = regmod::enumerate_critical_set(f);
  Consistency out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool composite = regmod::is_composite(f);
  auto zero_residual = [&](const Vector& x) {
    if (composite) return regmod::residual_map(f, x).norm() <= 1e-12;
    // closed-form subgradient distance: only an exact zero counts
    const auto sd = regmod::subdiff_distance(f, x);
    return sd && *sd == 0.0;
  };
  std::vector<Vector> bases = f.base_points;
  if (bases.empty()) bases.push_back(Vector::Zero(static_cast<Eigen::Index>(f.dimension)));
  std::size_t made = 0;
  while (made < count) {
    const Vector& base = bases[made % bases.size()];
    const auto coords = regmod::free_coordinates(f, base);
    Vector x = base;
    const double radius = 0.2 * unif(rng);
    for (std::size_t i : coords) x(static_cast<Eigen::Index>(i)) += radius * gauss(rng);
    if (!regmod::in_domain(f, x)) continue;
    // Alternate between the raw perturbation and its nearest critical point.
    if (made % 2 == 1) x = regmod::project_onto_critical_set(cs, x);
    if (!regmod::in_domain(f, x)) continue;
    ++made;
    ++out.points;
    const bool on_crit = regmod::critical_distance(cs, x) <= 1e-9;
    if (on_crit != zero_residual(x)) ++out.mismatches;
  }
  return out;
}

}  // namespace oracle
