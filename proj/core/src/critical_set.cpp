#include "regmod/critical_set.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "regmod/errors.hpp"
#include "regmod/prox.hpp"

namespace regmod {

namespace {

using Index = Eigen::Index;

constexpr double kFeasTol = 1e-9;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void subsets_of_size(const std::vector<std::size_t>& pool, std::size_t r,
                     std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == r) {
      out.push_back(cur);
      return;
    }
    for (std::size_t i = start; i + (r - cur.size()) <= pool.size(); ++i) {
      cur.push_back(pool[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

// Nullspace basis and least-norm solution of the symmetric system q y = c.
struct SymSolve {
  Matrix kernel;
  Vector particular;
  bool consistent = true;
};

SymSolve solve_symmetric(const Matrix& q, const Vector& c) {
  SymSolve out;
  const Index n = q.rows();
  if (n == 0) {
    out.kernel = Matrix(0, 0);
    out.particular = Vector(0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  const Vector& lam = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  const double tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  out.particular = Vector::Zero(n);
  std::vector<Index> null_cols;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(lam(i)) <= tol) {
      null_cols.push_back(i);
    } else {
      out.particular += (v.col(i).dot(c) / lam(i)) * v.col(i);
    }
  }
  out.kernel = Matrix(n, static_cast<Index>(null_cols.size()));
  for (std::size_t j = 0; j < null_cols.size(); ++j) out.kernel.col(idx(j)) = v.col(null_cols[j]);
  out.consistent = (q * out.particular - c).norm() <= kFeasTol * (1.0 + c.norm());
  return out;
}

// Drops constant rows of G w >= h; false if a constant row is violated.
bool tidy_constraints(Matrix& g, Vector& h) {
  std::vector<Index> keep;
  for (Index r = 0; r < g.rows(); ++r) {
    if (g.row(r).norm() <= 1e-13) {
      if (h(r) > kFeasTol) return false;
    } else {
      keep.push_back(r);
    }
  }
  Matrix g2(static_cast<Index>(keep.size()), g.cols());
  Vector h2(static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    g2.row(idx(k)) = g.row(keep[k]);
    h2(idx(k)) = h(keep[k]);
  }
  g = std::move(g2);
  h = std::move(h2);
  return true;
}

// Minimizes |t - y| over {y : G y >= h} by enumerating active sets.
std::optional<Vector> project_coefficients(const Matrix& g, const Vector& h, const Vector& t) {
  const Index k = t.size();
  const Index m = g.rows();
  auto feasible = [&](const Vector& y) {
    return m == 0 || ((g * y - h).array() >= -kFeasTol * (1.0 + h.cwiseAbs().maxCoeff())).all();
  };
  if (feasible(t)) return t;

  std::vector<std::size_t> rows(static_cast<std::size_t>(m));
  std::iota(rows.begin(), rows.end(), 0);
  std::optional<Vector> best;
  double best_dist = kInfinity;
  for (std::size_t r = 1; r <= static_cast<std::size_t>(std::min(k, m)); ++r) {
    std::vector<std::vector<std::size_t>> active;
    subsets_of_size(rows, r, active);
    for (const auto& act : active) {
      Matrix ga(idx(act.size()), k);
      Vector ha(idx(act.size()));
      for (std::size_t a = 0; a < act.size(); ++a) {
        ga.row(idx(a)) = g.row(idx(act[a]));
        ha(idx(a)) = h(idx(act[a]));
      }
      Eigen::JacobiSVD<Matrix> svd(ga, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-12);
      const Vector y0 = svd.solve(ha);
      if ((ga * y0 - ha).norm() > kFeasTol * (1.0 + ha.norm())) continue;
      const Index rank = svd.rank();
      const Matrix z = svd.matrixV().rightCols(k - rank);
      const Vector y = y0 + z * (z.transpose() * (t - y0));
      if (!feasible(y)) continue;
      const double d = (t - y).norm();
      if (d < best_dist) {
        best_dist = d;
        best = y;
      }
    }
  }
  return best;
}

CriticalPiece make_piece(std::size_t p, const std::vector<std::size_t>& support, const Vector& anchor,
                         const Matrix& basis, Matrix g, Vector h) {
  CriticalPiece pc;
  pc.support = support;
  pc.anchor = anchor;
  pc.basis = basis;
  pc.constraints = std::move(g);
  pc.bounds = std::move(h);
  if (basis.cols() == 0) {
    pc.kind = CriticalPiece::Kind::point;
    pc.basis = Matrix(idx(p), 0);
  } else {
    pc.kind = pc.constraints.rows() == 0 ? CriticalPiece::Kind::affine
                                          : CriticalPiece::Kind::polyhedral;
  }
  return pc;
}

std::vector<std::size_t> all_coordinates(std::size_t p) {
  std::vector<std::size_t> s(p);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

// {x : supp x in S, (Qx - c)_S = 0, plus sign rows}. nonneg adds x_S >= 0 and
// (Qx - c)_j >= 0 for j in `sign_rows`.
std::optional<CriticalPiece> support_piece(const Matrix& q, const Vector& c,
                                           const std::vector<std::size_t>& s, bool nonneg,
                                           const std::vector<std::size_t>& sign_rows) {
  const std::size_t p = static_cast<std::size_t>(q.rows());
  const Index k = idx(s.size());
  Matrix qs(k, k);
  Vector cs(k);
  for (Index a = 0; a < k; ++a) {
    cs(a) = c(idx(s[a]));
    for (Index b = 0; b < k; ++b) qs(a, b) = q(idx(s[a]), idx(s[b]));
  }
  const SymSolve sol = solve_symmetric(qs, cs);
  if (!sol.consistent) return std::nullopt;

  Vector anchor = Vector::Zero(idx(p));
  Matrix basis = Matrix::Zero(idx(p), sol.kernel.cols());
  for (Index a = 0; a < k; ++a) {
    anchor(idx(s[a])) = sol.particular(a);
    basis.row(idx(s[a])) = sol.kernel.row(a);
  }

  Matrix g(0, basis.cols());
  Vector h(0);
  if (nonneg) {
    const Index rows = k + idx(sign_rows.size());
    g.resize(rows, basis.cols());
    h.resize(rows);
    for (Index a = 0; a < k; ++a) {
      g.row(a) = basis.row(idx(s[a]));
      h(a) = -anchor(idx(s[a]));
    }
    const Matrix qb = q * basis;
    const Vector grad0 = q * anchor - c;
    for (std::size_t j = 0; j < sign_rows.size(); ++j) {
      g.row(k + idx(j)) = qb.row(idx(sign_rows[j]));
      h(k + idx(j)) = -grad0(idx(sign_rows[j]));
    }
    if (!tidy_constraints(g, h)) return std::nullopt;
    if (g.rows() > 0 && !project_coefficients(g, h, Vector::Zero(basis.cols()))) {
      return std::nullopt;
    }
  }
  return make_piece(p, s, anchor, basis, std::move(g), std::move(h));
}

std::vector<CriticalPiece> sparse_pieces(const FunctionInstance& f) {
  const std::size_t p = f.dimension;
  const Matrix q = f.smooth.hessian(p);
  const Vector c = f.smooth.linear(p);
  const bool nonneg = f.nonsmooth.kind == NonsmoothKind::sparse_nonneg;

  // Per block: candidate supports and the off-support rows that carry sign conditions.
  struct Choice {
    std::vector<std::size_t> support;
    std::vector<std::size_t> sign_rows;
  };
  std::vector<std::vector<Choice>> per_block;
  for (const auto& blk : f.nonsmooth.blocks) {
    std::vector<std::size_t> pool(blk.length);
    std::iota(pool.begin(), pool.end(), blk.offset);
    std::vector<Choice> choices;
    const std::size_t smallest = nonneg ? 0 : blk.level;
    for (std::size_t r = smallest; r <= blk.level; ++r) {
      std::vector<std::vector<std::size_t>> subs;
      subsets_of_size(pool, r, subs);
      for (auto& t : subs) {
        Choice ch;
        ch.support = t;
        if (nonneg && r < blk.level) {
          for (std::size_t i : pool) {
            if (!std::binary_search(t.begin(), t.end(), i)) ch.sign_rows.push_back(i);
          }
        }
        choices.push_back(std::move(ch));
      }
    }
    per_block.push_back(std::move(choices));
  }

  std::vector<CriticalPiece> pieces;
  std::vector<std::size_t> pick(per_block.size(), 0);
  while (true) {
    std::vector<std::size_t> s;
    std::vector<std::size_t> sign_rows;
    for (std::size_t b = 0; b < per_block.size(); ++b) {
      const auto& ch = per_block[b][pick[b]];
      s.insert(s.end(), ch.support.begin(), ch.support.end());
      sign_rows.insert(sign_rows.end(), ch.sign_rows.begin(), ch.sign_rows.end());
    }
    std::sort(s.begin(), s.end());
    if (auto pc = support_piece(q, c, s, nonneg, sign_rows)) pieces.push_back(std::move(*pc));

    std::size_t b = 0;
    while (b < pick.size() && ++pick[b] == per_block[b].size()) pick[b++] = 0;
    if (b == pick.size()) break;
  }
  return pieces;
}

CriticalPiece box_piece(std::size_t p, double lo, double hi) {
  CriticalPiece pc;
  pc.kind = CriticalPiece::Kind::box;
  pc.support = all_coordinates(p);
  pc.lower = Vector::Constant(idx(p), lo);
  pc.upper = Vector::Constant(idx(p), hi);
  return pc;
}

std::vector<CriticalPiece> pieces_for(const FunctionInstance& f) {
  const std::size_t p = f.dimension;
  const auto all = all_coordinates(p);
  switch (f.nonsmooth.kind) {
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg:
      return sparse_pieces(f);
    case NonsmoothKind::quartic_gap:
      return {make_piece(p, all, Vector::Zero(idx(p)), Matrix(idx(p), 0), Matrix(0, 0), Vector(0))};
    case NonsmoothKind::none: {
      auto pc = support_piece(f.smooth.hessian(p), f.smooth.linear(p), all, false, {});
      if (!pc) return {};
      return {std::move(*pc)};
    }
    case NonsmoothKind::plq: {
      if (f.smooth.kind != SmoothKind::none) {
        throw CapabilityError("plq critical sets are enumerated only without a smooth part");
      }
      const auto [lo, hi] = f.nonsmooth.plq.minimizers();
      if (lo > hi) return {};
      return {box_piece(p, lo, hi)};
    }
    case NonsmoothKind::l1: {
      const double lambda = f.nonsmooth.weight;
      if (f.smooth.kind == SmoothKind::none) {
        if (lambda > 0.0) return {box_piece(p, 0.0, 0.0)};
        return {box_piece(p, -kInfinity, kInfinity)};
      }
      const Vector u = minimize_l1_quadratic(f.smooth.hessian(p), f.smooth.linear(p), lambda);
      return {make_piece(p, all, u, Matrix(idx(p), 0), Matrix(0, 0), Vector(0))};
    }
  }
  throw CapabilityError("unsupported family for critical-set enumeration");
}

}  // namespace

Vector CriticalPiece::project(const Vector& x) const {
  switch (kind) {
    case Kind::box:
      return x.cwiseMax(lower).cwiseMin(upper);
    case Kind::point:
      return anchor;
    case Kind::affine:
      return anchor + basis * (basis.transpose() * (x - anchor));
    case Kind::polyhedral: {
      const Vector t = basis.transpose() * (x - anchor);
      const auto y = project_coefficients(constraints, bounds, t);
      if (!y) throw DomainError("empty polyhedral critical piece");
      return anchor + basis * *y;
    }
  }
  return anchor;
}

std::string_view piece_kind_name(CriticalPiece::Kind kind) {
  switch (kind) {
    case CriticalPiece::Kind::point:
      return "point";
    case CriticalPiece::Kind::affine:
      return "affine";
    case CriticalPiece::Kind::polyhedral:
      return "polyhedral";
    case CriticalPiece::Kind::box:
      return "box";
  }
  return "point";
}

CriticalSet::CriticalSet(std::string instance, std::size_t dimension,
                         std::vector<CriticalPiece> pieces)
    : instance_(std::move(instance)), dimension_(dimension), pieces_(std::move(pieces)) {}

CriticalSet enumerate_critical_set(const FunctionInstance& f) {
  std::vector<CriticalPiece> raw = pieces_for(f);

  // Points covered by a larger piece (or repeated) add nothing to distance queries.
  std::vector<CriticalPiece> kept;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].kind == CriticalPiece::Kind::point) {
      bool covered = false;
      for (std::size_t j = 0; j < raw.size() && !covered; ++j) {
        if (j == i) continue;
        const bool later_point = raw[j].kind == CriticalPiece::Kind::point && j > i;
        if (later_point) continue;
        covered = raw[j].distance(raw[i].anchor) <= 1e-12;
      }
      if (covered) continue;
    }
    kept.push_back(std::move(raw[i]));
  }
  return CriticalSet(f.name, f.dimension, std::move(kept));
}

double critical_distance(const CriticalSet& cs, const Vector& x) {
  if (cs.empty()) throw DomainError("critical set is empty");
  if (static_cast<std::size_t>(x.size()) != cs.dimension()) {
    throw UsageError("critical_distance: dimension mismatch");
  }
  double best = kInfinity;
  for (const auto& pc : cs.pieces()) best = std::min(best, pc.distance(x));
  return best;
}

Vector project_onto_critical_set(const CriticalSet& cs, const Vector& x) {
  if (cs.empty()) throw DomainError("critical set is empty");
  Vector best;
  double best_dist = kInfinity;
  for (const auto& pc : cs.pieces()) {
    Vector z = pc.project(x);
    const double d = (x - z).norm();
    if (d < best_dist) {
      best_dist = d;
      best = std::move(z);
    }
  }
  return best;
}

std::vector<Vector> critical_grid(const CriticalSet& cs, const Vector& center, double radius) {
  std::vector<Vector> grid;
  const auto p = center.size();
  for (const auto& pc : cs.pieces()) {
    const Vector z0 = pc.project(center);
    grid.push_back(z0);
    if (pc.kind == CriticalPiece::Kind::point) continue;
    const Matrix dirs = pc.kind == CriticalPiece::Kind::box ? Matrix(Matrix::Identity(p, p)) : pc.basis;
    for (Index j = 0; j < dirs.cols(); ++j) {
      for (double s : {-1.0, 1.0}) {
        Vector z = pc.project(z0 + s * radius * dirs.col(j));
        if ((z - z0).norm() > 1e-12) grid.push_back(std::move(z));
      }
    }
  }
  return grid;
}

}  // namespace regmod
