#include "regmod/implication.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "regmod/errors.hpp"
#include "regmod/prox.hpp"

namespace regmod {

namespace {

using Index = Eigen::Index;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool sparse_kind(const NonsmoothPart& h) {
  return h.kind == NonsmoothKind::sparse || h.kind == NonsmoothKind::sparse_nonneg;
}

bool locally_convex_at(const FunctionInstance& f, const Vector& base) {
  if (f.convex) return true;
  const auto& h = f.nonsmooth;
  if (!sparse_kind(h)) return false;
  for (const auto& blk : h.blocks) {
    std::size_t nnz = 0;
    for (std::size_t i = blk.offset; i < blk.offset + blk.length; ++i) {
      if (base(static_cast<Index>(i)) != 0.0) ++nnz;
    }
    if (nnz != blk.level && blk.level != blk.length) return false;
  }
  const auto coords = free_coordinates(f, base);
  const Matrix q = f.smooth.hessian(f.dimension);
  const auto k = static_cast<Index>(coords.size());
  Matrix qf(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) qf(a, b) = q(static_cast<Index>(coords[a]), static_cast<Index>(coords[b]));
  }
  if (k == 0) return true;
  const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(qf).eigenvalues().minCoeff();
  return lo >= -1e-12 * std::max(1.0, qf.norm());
}

bool h_is_convex(const NonsmoothPart& h) {
  switch (h.kind) {
    case NonsmoothKind::none:
    case NonsmoothKind::l1:
    case NonsmoothKind::plq:
      return true;
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg:
      return std::all_of(h.blocks.begin(), h.blocks.end(),
                         [](const SparsityBlock& b) { return b.level == b.length; });
    case NonsmoothKind::quartic_gap:
      return false;
  }
  return false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

ImplicationCheck skipped(std::string name, std::string arrow, std::string constant, std::string reason) {
  ImplicationCheck c;
  c.name = std::move(name);
  c.arrow = std::move(arrow);
  c.constant = std::move(constant);
  c.lhs = kNaN;
  c.rhs = kNaN;
  c.slack = kNaN;
  c.status = CheckStatus::skipped;
  c.reason = std::move(reason);
  return c;
}

ImplicationCheck opened(std::string name, std::string arrow, std::string constant) {
  ImplicationCheck c;
  c.name = std::move(name);
  c.arrow = std::move(arrow);
  c.constant = std::move(constant);
  return c;
}

void settle(ImplicationCheck& c) {
  c.status = (c.slack >= 0.0 && c.violations == 0) ? CheckStatus::pass : CheckStatus::fail;
}

struct Holds {
  bool kl = false;
  bool subreg = false;
  bool qg = false;
  bool lt = false;
  std::string kl_why;
  std::string subreg_why;
  std::string qg_why;
  std::string lt_why;
};

Holds assess(const EstimateBundle& est) {
  Holds h;
  if (!est.kl) {
    h.kl_why = "KL estimate unavailable: " + est.kl_reason;
  } else if (est.kl->divergent || !(est.kl->value > 0.0)) {
    h.kl_why = "KL exponent 1/2 fails";
  } else {
    h.kl = true;
  }
  if (!est.subregularity) {
    h.subreg_why = "subregularity estimate unavailable";
  } else if (est.subregularity->divergent || !std::isfinite(est.subregularity->value)) {
    h.subreg_why = "subregularity fails";
  } else {
    h.subreg = true;
  }
  if (!est.quadratic_growth || !est.quadratic_growth->unavailable.empty()) {
    h.qg_why = "quadratic growth estimate unavailable";
  } else if (est.quadratic_growth->divergent || !(est.quadratic_growth->value > 0.0)) {
    h.qg_why = "quadratic growth fails";
  } else {
    h.qg = true;
  }
  if (!est.luo_tseng) {
    h.lt_why = "Luo-Tseng estimate unavailable: " + est.luo_tseng_reason;
  } else if (est.luo_tseng->divergent || !std::isfinite(est.luo_tseng->value)) {
    h.lt_why = "Luo-Tseng bound fails";
  } else {
    h.lt = true;
  }
  return h;
}

}  // namespace

std::string_view check_status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::skipped:
      return "skipped";
  }
  return "skipped";
}

bool ImplicationReport::any_failed() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const ImplicationCheck& c) { return c.status == CheckStatus::fail; });
}

EstimateBundle estimate_all(const SampleCloud& cloud) {
  EstimateBundle b;
  try {
    b.kl = estimate_kl(cloud);
  } catch (const InsufficientDataError& e) {
    b.kl_reason = e.what();
  }
  b.subregularity = estimate_subregularity(cloud);
  b.quadratic_growth = estimate_quadratic_growth(cloud);
  try {
    b.luo_tseng = check_luo_tseng(cloud);
  } catch (const CapabilityError& e) {
    b.luo_tseng_reason = e.what();
  }
  return b;
}

Premises derive_premises(const FunctionInstance& f, const CriticalSet& cs, const SampleCloud& cloud,
                         const std::optional<ProxRegularityReport>& prox) {
  Premises pr;
  const Vector& base = cloud.base;
  const double fbase = evaluate(f, base).value();
  pr.convex = f.convex;
  pr.locally_convex = locally_convex_at(f, base);
  pr.h_convex = h_is_convex(f.nonsmooth);
  pr.composite = is_composite(f);
  pr.smoothness = f.smoothness;
  pr.base_critical = critical_distance(cs, base) <= 1e-9;

  if (f.premises.continuous_on_crit) {
    pr.continuous_on_crit = *f.premises.continuous_on_crit;
    pr.continuity_source = "catalog";
  } else {
    pr.continuous_on_crit = f.nonsmooth.kind != NonsmoothKind::quartic_gap;
    pr.continuity_source = "derived";
  }

  if (f.premises.crit_level_bounded) {
    pr.crit_level_bounded = *f.premises.crit_level_bounded;
    pr.crit_level_bounded_source = "catalog";
  } else {
    const double radius = cloud.radii.empty() ? 0.0 : cloud.radii.front();
    bool ok = true;
    for (const auto& z : critical_grid(cs, base, radius)) {
      if ((z - base).norm() > radius) continue;
      if (evaluate(f, z).value() > fbase + 1e-10) ok = false;
    }
    pr.crit_level_bounded = ok;
    pr.crit_level_bounded_source = "sampled";
  }

  if (f.premises.local_min) {
    pr.local_min = *f.premises.local_min;
    pr.local_min_source = "catalog";
  } else {
    bool ok = pr.base_critical;
    for (const auto& r : cloud.records) {
      if (r.fgap + cloud.reference - fbase < -1e-12) ok = false;
    }
    pr.local_min = ok;
    pr.local_min_source = "sampled";
  }

  if (prox) {
    pr.rho = prox->rho;
    pr.rho_certified = prox->certified;
  } else if (f.rho) {
    pr.rho = *f.rho;
    pr.rho_certified = true;
  }
  return pr;
}

ImplicationReport cross_check(const FunctionInstance& f, const CriticalSet& cs, const SampleCloud& cloud,
                              const EstimateBundle& est,
                              const std::optional<ProxRegularityReport>& prox, double tol) {
  if (!(tol >= 0.0)) throw UsageError("cross_check tolerance must be nonnegative");
  if (!est.subregularity || !est.quadratic_growth) {
    throw UsageError("cross_check needs the subregularity and quadratic-growth estimates");
  }
  ImplicationReport rep;
  rep.instance = f.name;
  rep.base = cloud.base;
  rep.tol = tol;
  rep.premises = derive_premises(f, cs, cloud, prox);
  const Premises& pr = rep.premises;
  const Holds holds = assess(est);

  const double c = est.kl ? est.kl->value : kNaN;
  const double kappa = est.subregularity->value;
  const double nu = est.quadratic_growth->value;
  const double varpi = est.luo_tseng ? est.luo_tseng->value : kNaN;

  // (A) quadratic growth => KL with c >= sqrt(nu).
  {
    const std::string arrow = "QG => KL";
    const std::string k = "c >= sqrt(nu)";
    if (!pr.locally_convex) {
      rep.checks.push_back(skipped("A", arrow, k, "f is not convex near the base point"));
    } else if (!holds.qg) {
      rep.checks.push_back(skipped("A", arrow, k, holds.qg_why));
    } else if (!est.kl) {
      rep.checks.push_back(skipped("A", arrow, k, holds.kl_why));
    } else {
      ImplicationCheck ch = opened("A", arrow, k);
      ch.lhs = c;
      ch.rhs = std::sqrt(nu) * (1.0 - tol);
      ch.slack = ch.lhs - ch.rhs;
      ch.samples_checked = est.kl->samples_used;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (B) KL => quadratic growth with nu >= c^2/4.
  {
    const std::string arrow = "KL => QG";
    const std::string k = "nu >= c^2/4";
    if (!pr.locally_convex && !(pr.continuous_on_crit && pr.local_min)) {
      rep.checks.push_back(skipped("B", arrow, k, "needs local convexity or continuity on crit f at a local minimizer"));
    } else if (!holds.kl) {
      rep.checks.push_back(skipped("B", arrow, k, holds.kl_why));
    } else if (!est.quadratic_growth->unavailable.empty()) {
      rep.checks.push_back(skipped("B", arrow, k, holds.qg_why));
    } else {
      ImplicationCheck ch = opened("B", arrow, k);
      ch.lhs = nu;
      ch.rhs = c * c / 4.0 * (1.0 - tol);
      ch.slack = ch.lhs - ch.rhs;
      ch.samples_checked = est.quadratic_growth->samples_used;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (C) subregularity + uniform prox-regularity => KL, pointwise.
  {
    const std::string arrow = "subregularity + prox-regularity => KL";
    const std::string k = "f(x) - f(base) <= (kappa + rho*kappa^2/2) * dist^2(0, df(x))";
    if (!holds.subreg) {
      rep.checks.push_back(skipped("C", arrow, k, holds.subreg_why));
    } else if (!pr.crit_level_bounded) {
      rep.checks.push_back(skipped("C", arrow, k, "critical values near the base exceed f(base)"));
    } else if (!pr.rho_certified) {
      rep.checks.push_back(skipped("C", arrow, k, "prox-regularity not certified for rho = " + fmt(pr.rho)));
    } else {
      ImplicationCheck ch = opened("C", arrow, k);
      const double constant = kappa + pr.rho * kappa * kappa / 2.0;
      ch.rhs = constant * (1.0 + tol);
      ch.lhs = 0.0;
      for (const auto& r : cloud.records) {
        if (!(r.fgap > 1e-12)) continue;
        ++ch.samples_checked;
        const double sq = r.sdist * r.sdist;
        const double ratio = sq > 0.0 ? r.fgap / sq : kInfinity;
        ch.lhs = std::max(ch.lhs, ratio);
        if (r.fgap > ch.rhs * sq) ++ch.violations;
      }
      ch.slack = ch.rhs - ch.lhs;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (D) Luo-Tseng chain with constant kappa(1+L)+1, pointwise and in aggregate.
  {
    const std::string arrow = "subregularity => Luo-Tseng";
    const std::string k = "dist(x, crit f) <= (kappa*(1+L) + 1) * |R(x)|";
    if (!holds.subreg) {
      rep.checks.push_back(skipped("D", arrow, k, holds.subreg_why));
    } else if (!pr.composite) {
      rep.checks.push_back(skipped("D", arrow, k, "instance is not composite"));
    } else {
      ImplicationCheck ch = opened("D", arrow, k);
      const double constant = kappa * (1.0 + pr.smoothness) + 1.0;
      ch.rhs = constant * (1.0 + tol);
      ch.lhs = 0.0;
      for (const auto& r : cloud.records) {
        if (r.cdist == 0.0) continue;
        ++ch.samples_checked;
        const double ratio = r.rnorm > 0.0 ? r.cdist / r.rnorm : kInfinity;
        ch.lhs = std::max(ch.lhs, ratio);
        if (r.cdist > ch.rhs * r.rnorm) ++ch.violations;
      }
      if (est.luo_tseng && est.luo_tseng->value > ch.rhs) ++ch.violations;
      ch.slack = ch.rhs - ch.lhs;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (E) subregularity at a local minimizer => quadratic growth.
  {
    const std::string arrow = "subregularity => QG at a local minimizer";
    const std::string k = "nu > 0";
    if (!pr.local_min) {
      rep.checks.push_back(skipped("E", arrow, k, "base point is not a local minimizer"));
    } else if (!holds.subreg) {
      rep.checks.push_back(skipped("E", arrow, k, holds.subreg_why));
    } else if (!est.quadratic_growth->unavailable.empty()) {
      rep.checks.push_back(skipped("E", arrow, k, holds.qg_why));
    } else {
      ImplicationCheck ch = opened("E", arrow, k);
      ch.lhs = nu;
      ch.rhs = 0.0;
      ch.slack = nu;
      ch.samples_checked = est.quadratic_growth->samples_used;
      ch.status = nu > 0.0 ? CheckStatus::pass : CheckStatus::fail;
      rep.checks.push_back(ch);
    }
  }

  // (F) KL => subregularity with kappa <= 2/c^2.
  {
    const std::string arrow = "KL => subregularity";
    const std::string k = "kappa <= 2/c^2";
    if (!pr.local_min) {
      rep.checks.push_back(skipped("F", arrow, k, "base point is not a local minimizer"));
    } else if (!pr.continuous_on_crit && !pr.locally_convex) {
      rep.checks.push_back(skipped("F", arrow, k, "f is neither continuous on crit f nor locally convex"));
    } else if (!holds.kl) {
      rep.checks.push_back(skipped("F", arrow, k, holds.kl_why));
    } else {
      ImplicationCheck ch = opened("F", arrow, k);
      ch.lhs = kappa;
      ch.rhs = 2.0 / (c * c) * (1.0 + tol);
      ch.slack = ch.rhs - ch.lhs;
      ch.samples_checked = est.subregularity->samples_used;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (G) Luo-Tseng => subregularity with kappa <= varpi (convex h).
  {
    const std::string arrow = "Luo-Tseng => subregularity";
    const std::string k = "kappa <= varpi";
    if (!pr.composite) {
      rep.checks.push_back(skipped("G", arrow, k, "instance is not composite"));
    } else if (!pr.h_convex) {
      rep.checks.push_back(skipped("G", arrow, k, "h is not convex"));
    } else if (!pr.continuous_on_crit) {
      rep.checks.push_back(skipped("G", arrow, k, "f is not continuous on crit f"));
    } else if (!holds.lt) {
      rep.checks.push_back(skipped("G", arrow, k, holds.lt_why));
    } else {
      ImplicationCheck ch = opened("G", arrow, k);
      ch.lhs = kappa;
      ch.rhs = varpi * (1.0 + tol);
      ch.slack = ch.rhs - ch.lhs;
      ch.samples_checked = est.subregularity->samples_used;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }

  // (H) convex quadratic growth => subregularity with kappa <= 1/nu.
  {
    const std::string arrow = "QG => subregularity (convex)";
    const std::string k = "kappa <= 1/nu";
    if (!pr.locally_convex) {
      rep.checks.push_back(skipped("H", arrow, k, "f is not convex near the base point"));
    } else if (!holds.qg) {
      rep.checks.push_back(skipped("H", arrow, k, holds.qg_why));
    } else {
      ImplicationCheck ch = opened("H", arrow, k);
      ch.lhs = kappa;
      ch.rhs = 1.0 / nu * (1.0 + tol);
      ch.slack = ch.rhs - ch.lhs;
      ch.samples_checked = est.subregularity->samples_used;
      settle(ch);
      rep.checks.push_back(ch);
    }
  }
  return rep;
}

SolverRecord prox_grad_run(const FunctionInstance& f, const CriticalSet& cs, const Vector& x0, double tau,
                           std::size_t iterations) {
  if (!(tau > 0.0)) throw UsageError("solver step must be positive");
  if (f.smoothness > 0.0 && tau > (1.0 + 1e-12) / f.smoothness) {
    throw UsageError("solver step must not exceed 1/L = " + fmt(1.0 / f.smoothness));
  }
  if (static_cast<std::size_t>(x0.size()) != f.dimension) throw UsageError("x0 has the wrong dimension");
  if (!in_domain(f, x0)) throw UsageError("x0 lies outside dom f");

  SolverRecord rec;
  rec.step = tau;
  const bool composite = is_composite(f);
  rec.mode = composite ? "prox-gradient" : "gradient";

  auto observe = [&](const Vector& x) {
    rec.iterates.push_back(x);
    rec.distances.push_back(critical_distance(cs, x));
    rec.residuals.push_back(composite ? residual_map(f, x).norm() : kNaN);
  };

  Vector x = x0;
  observe(x);
  for (std::size_t k = 0; k < iterations; ++k) {
    if (composite) {
      x = prox_h(ProxRequest{f.nonsmooth, x - tau * smooth_gradient(f, x), tau});
    } else {
      // a.e. gradient of the scalar quartic branch
      x(0) -= tau * 4.0 * x(0) * x(0) * x(0);
    }
    if (!x.allFinite()) {
      rec.diverged = true;
      break;
    }
    observe(x);
    const std::size_t now = rec.distances.size() - 1;
    const std::size_t from = now > 50 ? now - 50 : 0;
    for (std::size_t j = from; j < now; ++j) {
      if (rec.distances[j] > 0.0 && rec.distances[now] >= 10.0 * rec.distances[j]) rec.diverged = true;
    }
    if (rec.diverged) break;
  }

  std::vector<std::size_t> tail;
  for (std::size_t k = 0; k < rec.distances.size(); ++k) {
    if (rec.distances[k] > 1e-10) tail.push_back(k);
  }
  if (tail.size() > 20) tail.erase(tail.begin(), tail.end() - 20);
  rec.rate_points = tail.size();
  if (tail.size() >= 2) {
    double mk = 0.0;
    double ml = 0.0;
    for (std::size_t k : tail) {
      mk += static_cast<double>(k);
      ml += std::log(rec.distances[k]);
    }
    mk /= static_cast<double>(tail.size());
    ml /= static_cast<double>(tail.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k : tail) {
      const double dk = static_cast<double>(k) - mk;
      sxx += dk * dk;
      sxy += dk * (std::log(rec.distances[k]) - ml);
    }
    rec.rate = std::exp(sxy / sxx);
  } else {
    rec.rate = rec.distances.back() <= 1e-10 ? 0.0 : kNaN;
  }
  return rec;
}

}  // namespace regmod
