#pragma once

#include <cstddef>

#include "regmod/function_model.hpp"

namespace regmod {

struct ProxRequest {
  const NonsmoothPart& nonsmooth;
  Vector input;
  double step = 1.0;
};

/// argmin_u h(u) + |u - z|^2 / (2 step). Throws CapabilityError for h without a
/// closed-form kernel and UsageError for a nonpositive step.
Vector prox_h(const ProxRequest& request);

/// Euclidean projection onto {x : |x|_0 <= level}: keep the `level` largest
/// magnitudes, ties resolved toward the lowest index.
Vector project_sparse(const Vector& z, std::size_t level);

/// Projection onto {x >= 0 : |x|_0 <= level}.
Vector project_sparse_nonneg(const Vector& z, std::size_t level);

/// R(x) = prox_h(x - grad g(x)) - x with unit step. Zero exactly at fixed
/// points of the proximal gradient map.
Vector residual_map(const FunctionInstance& f, const Vector& x);

/// Exact minimizer of 1/2 u'Qu - c'u + lambda |u|_1 for positive definite Q,
/// found by enumerating sign patterns (p <= 12).
Vector minimize_l1_quadratic(const Matrix& q, const Vector& c, double lambda);

}  // namespace regmod
