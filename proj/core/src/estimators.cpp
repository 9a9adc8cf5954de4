#include "regmod/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "regmod/errors.hpp"
#include "regmod/parallel.hpp"
#include "regmod/prox.hpp"

namespace regmod {

namespace {

using Index = Eigen::Index;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGapFloor = 1e-12;
constexpr double kZero = 1e-14;
constexpr std::size_t kMaxRejections = 100000;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t lane) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(lane), static_cast<std::uint32_t>(lane >> 32)};
  return std::mt19937_64(seq);
}

// Uniform by volume on {inner < |u| <= outer} in R^d.
Vector draw_shell(std::mt19937_64& rng, std::size_t d, double inner, double outer) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(static_cast<Index>(d));
  do {
    for (Index i = 0; i < dir.size(); ++i) dir(i) = gauss(rng);
  } while (dir.norm() == 0.0);
  dir.normalize();
  const double dd = static_cast<double>(d);
  const double lo = std::pow(inner, dd);
  const double hi = std::pow(outer, dd);
  const double r = std::pow(lo + unif(rng) * (hi - lo), 1.0 / dd);
  return std::max(r, std::nextafter(inner, kInfinity)) * dir;
}

Vector embed(const Vector& base, const std::vector<std::size_t>& coords, const Vector& u) {
  Vector x = base;
  for (std::size_t k = 0; k < coords.size(); ++k) x(static_cast<Index>(coords[k])) += u(static_cast<Index>(k));
  return x;
}

// Off-support coordinates must stay zero; nonneg coordinates must stay nonnegative;
// moving coordinates must not vanish (the support is what the cloud preserves).
bool admissible(const FunctionInstance& f, const Vector& base, const std::vector<std::size_t>& coords,
                const Vector& x) {
  if (!in_domain(f, x)) return false;
  const auto kind = f.nonsmooth.kind;
  if (kind == NonsmoothKind::sparse || kind == NonsmoothKind::sparse_nonneg) {
    for (std::size_t i : coords) {
      const auto k = static_cast<Index>(i);
      if (base(k) != 0.0 && x(k) == 0.0) return false;
    }
  }
  return true;
}

struct Stats {
  double slope = kNaN;
  double residual = kNaN;
};

Stats fit_line(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  Stats s;
  const double n = static_cast<double>(pts.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0) return s;
  s.slope = sxy / sxx;
  const double icpt = my - s.slope * mx;
  double ss = 0.0;
  for (const auto& [x, y] : pts) ss += (y - icpt - s.slope * x) * (y - icpt - s.slope * x);
  s.residual = std::sqrt(ss / n);
  return s;
}

ModulusEstimate finish_extremal(ModulusEstimate est, const SampleCloud& cloud, bool larger_is_worse) {
  std::vector<double> worse(est.per_radius.size());
  for (std::size_t j = 0; j < worse.size(); ++j) {
    const double v = est.per_radius[j];
    if (larger_is_worse || std::isnan(v)) {
      worse[j] = v;
    } else {
      worse[j] = v <= 0.0 ? kInfinity : 1.0 / v;
    }
  }
  est.divergent = divergence_rule(worse, cloud.radii, &est.growth_factors);
  return est;
}

}  // namespace

std::vector<std::size_t> free_coordinates(const FunctionInstance& f, const Vector& base) {
  const auto& h = f.nonsmooth;
  std::vector<std::size_t> coords;
  if (h.kind != NonsmoothKind::sparse && h.kind != NonsmoothKind::sparse_nonneg) {
    for (std::size_t i = 0; i < f.dimension; ++i) coords.push_back(i);
    return coords;
  }
  for (const auto& blk : h.blocks) {
    const bool whole = blk.level == blk.length;
    for (std::size_t i = blk.offset; i < blk.offset + blk.length; ++i) {
      if (whole || base(static_cast<Index>(i)) != 0.0) coords.push_back(i);
    }
  }
  return coords;
}

SampleCloud sample_cloud(const FunctionInstance& f, const CriticalSet& cs, const CloudRequest& req) {
  if (static_cast<std::size_t>(req.base.size()) != f.dimension) {
    throw UsageError("sample_cloud: base point has the wrong dimension");
  }
  if (!in_domain(f, req.base)) throw UsageError("sample_cloud: base point lies outside dom f");
  if (req.per_radius < 32) throw UsageError("sample_cloud: need at least 32 samples per radius");
  if (req.radii.empty()) throw UsageError("sample_cloud: empty radius schedule");
  for (std::size_t j = 0; j < req.radii.size(); ++j) {
    if (!(req.radii[j] > 0.0) || (j > 0 && !(req.radii[j] < req.radii[j - 1]))) {
      throw UsageError("sample_cloud: radii must be positive and strictly decreasing");
    }
  }

  SampleCloud cloud;
  cloud.instance = f.name;
  cloud.base = req.base;
  cloud.radii = req.radii;
  cloud.per_radius = req.per_radius;
  cloud.seed = req.seed;
  cloud.reference = reference_level(f, req.base);
  cloud.composite = is_composite(f);

  const auto coords = free_coordinates(f, req.base);
  if (coords.empty()) throw UsageError("sample_cloud: no coordinate is free to move");

  std::vector<Vector> points;
  std::vector<std::size_t> shells;
  for (std::size_t j = 0; j < req.radii.size(); ++j) {
    auto rng = stream(req.seed, j);
    const double eps = req.radii[j];
    for (std::size_t i = 0; i < req.per_radius; ++i) {
      std::size_t tries = 0;
      Vector x;
      do {
        if (++tries > kMaxRejections) {
          throw UsageError("sample_cloud: cannot draw admissible points near the base");
        }
        x = embed(req.base, coords, draw_shell(rng, coords.size(), 0.5 * eps, eps));
      } while (!admissible(f, req.base, coords, x));
      points.push_back(std::move(x));
      shells.push_back(j);
    }
  }

  std::vector<std::optional<SampleRecord>> slots(points.size());
  parallel_for(points.size(), req.jobs, [&](std::size_t i) {
    const Vector& x = points[i];
    const auto sd = subdiff_distance(f, x);
    if (!sd) return;
    SampleRecord rec;
    rec.x = x;
    rec.fgap = evaluate(f, x).value() - cloud.reference;
    rec.sdist = *sd;
    rec.cdist = critical_distance(cs, x);
    rec.rnorm = cloud.composite ? residual_map(f, x).norm() : kNaN;
    rec.shell = shells[i];
    slots[i] = std::move(rec);
  });
  for (auto& s : slots) {
    if (s) {
      cloud.records.push_back(std::move(*s));
    } else {
      ++cloud.excluded;
    }
  }
  return cloud;
}

std::string_view modulus_kind_name(ModulusKind kind) {
  switch (kind) {
    case ModulusKind::kl:
      return "kl";
    case ModulusKind::subregularity:
      return "subregularity";
    case ModulusKind::quadratic_growth:
      return "quadratic-growth";
    case ModulusKind::luo_tseng:
      return "luo-tseng";
    case ModulusKind::prox_regularity:
      return "prox-regularity";
  }
  return "kl";
}

bool divergence_rule(const std::vector<double>& worse, const std::vector<double>& radii,
                     std::vector<double>* factors) {
  bool divergent = false;
  for (double v : worse) {
    if (v == kInfinity) divergent = true;
  }
  std::vector<double> out;
  int run = 0;
  for (std::size_t j = 0; j + 1 < worse.size(); ++j) {
    const double a = worse[j];
    const double b = worse[j + 1];
    double ratio = kNaN;
    if (std::isnan(a) || std::isnan(b)) {
      ratio = kNaN;
    } else if (b == kInfinity) {
      ratio = kInfinity;
    } else if (a == kInfinity) {
      ratio = 0.0;
    } else if (a == 0.0) {
      ratio = b == 0.0 ? 1.0 : kInfinity;
    } else {
      ratio = b / a;
    }
    const double halvings = std::log2(radii[j] / radii[j + 1]);
    const double factor = (std::isfinite(ratio) && ratio > 0.0) ? std::pow(ratio, 1.0 / halvings) : ratio;
    out.push_back(factor);
    run = factor >= 2.0 ? run + 1 : 0;
    if (run >= 2) divergent = true;
  }
  if (factors) *factors = std::move(out);
  return divergent;
}

ModulusEstimate estimate_kl(const SampleCloud& cloud) {
  ModulusEstimate est;
  est.kind = ModulusKind::kl;
  std::vector<std::pair<double, double>> pts;
  std::size_t strict = 0;
  double cmin = kInfinity;
  double window = 0.0;
  est.per_radius.assign(cloud.radii.size(), kInfinity);
  for (const auto& r : cloud.records) {
    if (!(r.fgap > kGapFloor)) continue;
    ++strict;
    const double ratio = r.sdist / std::sqrt(r.fgap);
    cmin = std::min(cmin, ratio);
    est.per_radius[r.shell] = std::min(est.per_radius[r.shell], ratio);
    window = std::max(window, r.fgap);
    if (r.sdist > 0.0) pts.emplace_back(std::log(r.fgap), std::log(r.sdist));
  }
  if (strict < 16) {
    throw InsufficientDataError("KL estimate needs at least 16 samples strictly above the base level (got " +
                                std::to_string(strict) + ")");
  }
  for (double& v : est.per_radius) {
    if (v == kInfinity) v = kNaN;
  }
  est.value = cmin;
  est.samples_used = strict;
  est.window = window;
  if (pts.size() >= 2) {
    const Stats s = fit_line(std::move(pts));
    if (!std::isnan(s.slope)) {
      est.exponent = s.slope;
      est.fit_residual = s.residual;
    }
  }
  return finish_extremal(std::move(est), cloud, false);
}

ModulusEstimate estimate_subregularity(const SampleCloud& cloud) {
  ModulusEstimate est;
  est.kind = ModulusKind::subregularity;
  est.per_radius.assign(cloud.radii.size(), kNaN);
  double overall = 0.0;
  for (const auto& r : cloud.records) {
    const bool num_zero = r.cdist <= kZero;
    const bool den_zero = r.sdist <= kZero;
    if (num_zero && den_zero) continue;
    const double ratio = den_zero ? kInfinity : r.cdist / r.sdist;
    ++est.samples_used;
    overall = std::max(overall, ratio);
    double& slot = est.per_radius[r.shell];
    slot = std::isnan(slot) ? ratio : std::max(slot, ratio);
  }
  est.value = overall;
  return finish_extremal(std::move(est), cloud, true);
}

ModulusEstimate estimate_quadratic_growth(const SampleCloud& cloud) {
  ModulusEstimate est;
  est.kind = ModulusKind::quadratic_growth;
  est.per_radius.assign(cloud.radii.size(), kNaN);
  double overall = kInfinity;
  for (const auto& r : cloud.records) {
    if (!(r.cdist > 1e-10)) continue;
    const double ratio = r.fgap / (r.cdist * r.cdist);
    ++est.samples_used;
    overall = std::min(overall, ratio);
    double& slot = est.per_radius[r.shell];
    slot = std::isnan(slot) ? ratio : std::min(slot, ratio);
  }
  est.value = overall;
  est.growth_failure = overall < 0.0;
  if (est.samples_used == 0) est.unavailable = "no sample lies off the critical set";
  return finish_extremal(std::move(est), cloud, false);
}

ModulusEstimate check_luo_tseng(const SampleCloud& cloud) {
  if (!cloud.composite) {
    throw CapabilityError("Luo-Tseng bound needs a composite instance with a prox kernel");
  }
  ModulusEstimate est;
  est.kind = ModulusKind::luo_tseng;
  est.per_radius.assign(cloud.radii.size(), kNaN);
  double overall = 0.0;
  double window = 0.0;
  for (const auto& r : cloud.records) {
    window = std::max(window, r.rnorm);
    if (!(r.rnorm > 1e-12)) continue;
    const double ratio = r.cdist / r.rnorm;
    ++est.samples_used;
    overall = std::max(overall, ratio);
    double& slot = est.per_radius[r.shell];
    slot = std::isnan(slot) ? ratio : std::max(slot, ratio);
  }
  est.value = overall;
  est.window = window;
  return finish_extremal(std::move(est), cloud, true);
}

std::optional<Vector> min_norm_subgradient(const FunctionInstance& f, const Vector& x) {
  if (!in_domain(f, x)) return std::nullopt;
  const auto& h = f.nonsmooth;
  Vector v = smooth_gradient(f, x);
  switch (h.kind) {
    case NonsmoothKind::none:
      return v;
    case NonsmoothKind::quartic_gap:
      v(0) = x(0) == 0.0 ? 0.0 : 4.0 * x(0) * x(0) * x(0);
      return v;
    case NonsmoothKind::l1:
      for (Index i = 0; i < x.size(); ++i) {
        if (x(i) > 0.0) {
          v(i) += h.weight;
        } else if (x(i) < 0.0) {
          v(i) -= h.weight;
        } else {
          v(i) = std::clamp(0.0, v(i) - h.weight, v(i) + h.weight);
        }
      }
      return v;
    case NonsmoothKind::plq:
      for (Index i = 0; i < x.size(); ++i) {
        v(i) = std::clamp(0.0, v(i) + h.plq.left_derivative(x(i)), v(i) + h.plq.right_derivative(x(i)));
      }
      return v;
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg: {
      const bool nonneg = h.kind == NonsmoothKind::sparse_nonneg;
      for (const auto& blk : h.blocks) {
        std::size_t nnz = 0;
        for (std::size_t i = blk.offset; i < blk.offset + blk.length; ++i) {
          if (x(static_cast<Index>(i)) != 0.0) ++nnz;
        }
        const bool whole = blk.level == blk.length;
        if (nnz < blk.level && !whole) return std::nullopt;
        for (std::size_t i = blk.offset; i < blk.offset + blk.length; ++i) {
          const auto k = static_cast<Index>(i);
          if (x(k) != 0.0) continue;
          if (!whole) {
            v(k) = 0.0;
          } else if (nonneg) {
            v(k) = std::max(0.0, v(k));
          }
        }
      }
      return v;
    }
  }
  return std::nullopt;
}

ProxRegularityReport check_prox_regularity(const FunctionInstance& f, const ProxRegularityRequest& req) {
  if (!(req.delta > 0.0)) throw UsageError("prox-regularity check needs delta > 0");
  if (req.pairs == 0) throw UsageError("prox-regularity check needs at least one pair");
  const double fbar = reference_level(f, req.base);
  const auto coords = free_coordinates(f, req.base);

  ProxRegularityReport rep;
  rep.rho = req.rho;
  rep.delta = req.delta;
  auto rng = stream(req.seed, 0x70726f78ULL);
  auto draw = [&]() {
    for (std::size_t tries = 0; tries < kMaxRejections; ++tries) {
      Vector x = embed(req.base, coords, draw_shell(rng, coords.size(), 0.0, req.delta));
      if (admissible(f, req.base, coords, x)) return x;
    }
    throw UsageError("prox-regularity check: cannot draw admissible points near the base");
  };

  double rho_min = 0.0;
  for (std::size_t k = 0; k < req.pairs; ++k) {
    Vector x;
    std::optional<Vector> v;
    for (std::size_t tries = 0;; ++tries) {
      if (tries > kMaxRejections) throw UsageError("prox-regularity check: no admissible base sample");
      x = draw();
      const double fx = evaluate(f, x).value();
      if (fx > fbar + req.delta) continue;
      v = min_norm_subgradient(f, x);
      if (v) break;
    }
    const Vector y = draw();
    const Vector d = y - x;
    const double lin = evaluate(f, y).value() - evaluate(f, x).value() - v->dot(d);
    const double slack = lin + 0.5 * req.rho * d.squaredNorm();
    ++rep.pairs;
    if (d.squaredNorm() > 0.0) rho_min = std::max(rho_min, -2.0 * lin / d.squaredNorm());
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      rep.worst_x = x;
      rep.worst_y = y;
    }
  }
  rep.rho_min = rho_min;
  rep.certified = rep.worst_slack >= -1e-10;
  return rep;
}

}  // namespace regmod
