#include "regmod/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "regmod/errors.hpp"

namespace regmod {

namespace {

void keep_largest(Vector& z, std::size_t offset, std::size_t length, std::size_t level) {
  if (level >= length) return;
  std::vector<std::size_t> order(length);
  std::iota(order.begin(), order.end(), offset);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return std::abs(z(static_cast<Eigen::Index>(i))) > std::abs(z(static_cast<Eigen::Index>(j)));
  });
  for (std::size_t k = level; k < length; ++k) z(static_cast<Eigen::Index>(order[k])) = 0.0;
}

void check_level(const Vector& z, std::size_t level) {
  if (level < 1 || level > static_cast<std::size_t>(z.size())) {
    throw UsageError("sparsity level must lie in [1, p]");
  }
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

Vector project_sparse(const Vector& z, std::size_t level) {
  check_level(z, level);
  Vector out = z;
  keep_largest(out, 0, static_cast<std::size_t>(z.size()), level);
  return out;
}

Vector project_sparse_nonneg(const Vector& z, std::size_t level) {
  check_level(z, level);
  Vector out = z.cwiseMax(0.0);
  keep_largest(out, 0, static_cast<std::size_t>(z.size()), level);
  return out;
}

Vector prox_h(const ProxRequest& request) {
  const auto& h = request.nonsmooth;
  const double tau = request.step;
  if (!(tau > 0.0)) throw UsageError("prox step must be positive");
  Vector u = request.input;
  switch (h.kind) {
    case NonsmoothKind::none:
      return u;
    case NonsmoothKind::l1:
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = soft_threshold(u(i), tau * h.weight);
      return u;
    case NonsmoothKind::plq:
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = h.plq.prox(u(i), tau);
      return u;
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg:
      if (h.kind == NonsmoothKind::sparse_nonneg) u = u.cwiseMax(0.0);
      for (const auto& block : h.blocks) {
        if (block.offset + block.length > static_cast<std::size_t>(u.size())) {
          throw UsageError("sparsity block exceeds the input dimension");
        }
        keep_largest(u, block.offset, block.length, block.level);
      }
      return u;
    case NonsmoothKind::quartic_gap:
      break;
  }
  throw CapabilityError("no closed-form proximal kernel for this nonsmooth part");
}

Vector residual_map(const FunctionInstance& f, const Vector& x) {
  if (!is_composite(f)) {
    throw CapabilityError("instance '" + f.name + "' has no composite g + h form");
  }
  const Vector forward = x - smooth_gradient(f, x);
  return prox_h(ProxRequest{f.nonsmooth, forward, 1.0}) - x;
}

Vector minimize_l1_quadratic(const Matrix& q, const Vector& c, double lambda) {
  const auto p = q.rows();
  if (p > 12) throw CapabilityError("sign-pattern enumeration is limited to p <= 12");
  // Certify positive definiteness once; the sub-blocks inherit it.
  Eigen::LLT<Matrix> llt(q);
  if (llt.info() != Eigen::Success) {
    throw CapabilityError("l1-quadratic minimizer requires a positive definite Hessian");
  }
  const double tol = 1e-11 * std::max(1.0, lambda + c.cwiseAbs().maxCoeff());

  std::vector<int> signs(static_cast<std::size_t>(p), 0);
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < p; ++i) total *= 3;

  Vector best;
  double best_obj = kInfinity;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < p; ++i) {
      signs[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3) - 1;
      rest /= 3;
      if (signs[static_cast<std::size_t>(i)] != 0) active.push_back(i);
    }
    Vector u = Vector::Zero(p);
    if (!active.empty()) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix qs(k, k);
      Vector rhs(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        rhs(a) = c(active[a]) - lambda * signs[static_cast<std::size_t>(active[a])];
        for (Eigen::Index b = 0; b < k; ++b) qs(a, b) = q(active[a], active[b]);
      }
      const Vector us = qs.llt().solve(rhs);
      bool consistent = true;
      for (Eigen::Index a = 0; a < k; ++a) {
        if (us(a) * signs[static_cast<std::size_t>(active[a])] < -tol) consistent = false;
        u(active[a]) = us(a);
      }
      if (!consistent) continue;
    }
    const Vector grad = q * u - c;
    bool kkt = true;
    for (Eigen::Index i = 0; i < p && kkt; ++i) {
      if (signs[static_cast<std::size_t>(i)] == 0 && std::abs(grad(i)) > lambda + tol) kkt = false;
    }
    if (!kkt) continue;
    const double obj = 0.5 * u.dot(q * u) - c.dot(u) + lambda * u.lpNorm<1>();
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  if (best.size() == 0) throw DomainError("no sign pattern satisfied the optimality conditions");
  return best;
}

}  // namespace regmod
