#include "regmod/function_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "regmod/errors.hpp"

namespace regmod {

namespace {

constexpr std::array<std::pair<Family, std::string_view>, 9> kFamilyNames{{
    {Family::zero_norm_quadratic, "zero-norm-quadratic"},
    {Family::zero_norm_quadratic_nonneg, "zero-norm-quadratic-nonneg"},
    {Family::bilinear_sparse, "bilinear-sparse"},
    {Family::quadratic, "quadratic"},
    {Family::least_squares, "least-squares"},
    {Family::l1, "l1"},
    {Family::l1_least_squares, "l1-least-squares"},
    {Family::plq_separable, "plq-separable"},
    {Family::quartic_gap, "quartic-gap"},
}};

void check_dimension(const FunctionInstance& f, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != f.dimension) {
    throw UsageError("dimension mismatch: instance '" + f.name + "' has p=" +
                     std::to_string(f.dimension) + ", got vector of size " +
                     std::to_string(x.size()));
  }
  if (!x.allFinite()) {
    throw UsageError("point must have finite coordinates");
  }
}

std::size_t block_nonzeros(const SparsityBlock& block, const Vector& x) {
  std::size_t count = 0;
  for (std::size_t i = block.offset; i < block.offset + block.length; ++i) {
    if (x(static_cast<Eigen::Index>(i)) != 0.0) ++count;
  }
  return count;
}

// Spectral data of a symmetric matrix: (min eigenvalue, max |eigenvalue|).
std::pair<double, double> spectrum_bounds(const Matrix& q) {
  if (q.size() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(q, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return {ev.minCoeff(), ev.cwiseAbs().maxCoeff()};
}

bool psd(double min_eig, double scale) { return min_eig >= -1e-12 * std::max(1.0, scale); }

void finish(FunctionInstance& f) {
  const Matrix q = f.smooth.hessian(f.dimension);
  const auto [min_eig, norm] = spectrum_bounds(q);
  f.smoothness = norm;
  bool h_convex = true;
  switch (f.nonsmooth.kind) {
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg:
      h_convex = std::all_of(f.nonsmooth.blocks.begin(), f.nonsmooth.blocks.end(),
                             [](const SparsityBlock& b) { return b.level == b.length; });
      break;
    case NonsmoothKind::quartic_gap:
      h_convex = false;
      break;
    default:
      break;
  }
  f.convex = h_convex && psd(min_eig, norm);
}

Matrix symmetrize(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw UsageError(std::string(what) + " must be a nonempty square matrix");
  }
  return 0.5 * (m + m.transpose());
}

void check_level(std::size_t level, std::size_t length) {
  if (level < 1 || level > length) {
    throw UsageError("sparsity level must lie in [1, " + std::to_string(length) + "]");
  }
  if (length > 24) {
    throw UsageError("sparsity blocks are limited to 24 coordinates");
  }
}

}  // namespace

std::string_view family_name(Family family) {
  for (const auto& [fam, name] : kFamilyNames) {
    if (fam == family) return name;
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  for (const auto& [fam, n] : kFamilyNames) {
    if (n == name) return fam;
  }
  return std::nullopt;
}

Matrix SmoothPart::hessian(std::size_t p) const {
  const auto n = static_cast<Eigen::Index>(p);
  switch (kind) {
    case SmoothKind::quadratic:
      return sym;
    case SmoothKind::least_squares:
      return a.transpose() * a;
    case SmoothKind::none:
      break;
  }
  return Matrix::Zero(n, n);
}

Vector SmoothPart::linear(std::size_t p) const {
  if (kind == SmoothKind::least_squares) return a.transpose() * b;
  return Vector::Zero(static_cast<Eigen::Index>(p));
}

// ---------------------------------------------------------------------------
// PlqTable

PlqTable::PlqTable(std::vector<double> knots, std::vector<Piece> pieces)
    : knots_(std::move(knots)), pieces_(std::move(pieces)) {
  if (pieces_.size() != knots_.size() + 1) {
    throw ConfigError("pieces", "expected one more piece than knots");
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || (i > 0 && knots_[i] <= knots_[i - 1])) {
      throw ConfigError("knots[" + std::to_string(i) + "]", "knots must be finite and increasing");
    }
  }
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    if (pieces_[j].a < 0.0) {
      throw ConfigError("pieces[" + std::to_string(j) + "]", "negative curvature breaks convexity");
    }
  }
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const double t = knots_[i];
    const auto& l = pieces_[i];
    const auto& r = pieces_[i + 1];
    const double vl = 0.5 * l.a * t * t + l.b * t + l.c;
    const double vr = 0.5 * r.a * t * t + r.b * t + r.c;
    if (std::abs(vl - vr) > 1e-9 * (1.0 + std::abs(vl))) {
      throw ConfigError("pieces[" + std::to_string(i + 1) + "]", "discontinuous at knot");
    }
    if (l.a * t + l.b > r.a * t + r.b + 1e-12) {
      throw ConfigError("pieces[" + std::to_string(i + 1) + "]", "slope decreases at knot");
    }
  }
}

std::size_t PlqTable::piece_index(double t) const {
  return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) -
                                  knots_.begin());
}

double PlqTable::lower(std::size_t j) const { return j == 0 ? -kInfinity : knots_[j - 1]; }
double PlqTable::upper(std::size_t j) const {
  return j == knots_.size() ? kInfinity : knots_[j];
}

double PlqTable::value(double t) const {
  const auto& pc = pieces_[piece_index(t)];
  return 0.5 * pc.a * t * t + pc.b * t + pc.c;
}

double PlqTable::left_derivative(double t) const {
  const auto j = static_cast<std::size_t>(std::lower_bound(knots_.begin(), knots_.end(), t) -
                                          knots_.begin());
  return pieces_[j].a * t + pieces_[j].b;
}

double PlqTable::right_derivative(double t) const {
  const auto& pc = pieces_[piece_index(t)];
  return pc.a * t + pc.b;
}

double PlqTable::prox(double z, double tau) const {
  double best = z;
  double best_obj = kInfinity;
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    const auto& pc = pieces_[j];
    double u = (z / tau - pc.b) / (pc.a + 1.0 / tau);
    u = std::clamp(u, lower(j), upper(j));
    const double obj = value(u) + (u - z) * (u - z) / (2.0 * tau);
    if (obj < best_obj) {
      best_obj = obj;
      best = u;
    }
  }
  return best;
}

std::pair<double, double> PlqTable::minimizers() const {
  double lo = kInfinity;
  double hi = -kInfinity;
  auto take = [&](double a, double b) {
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  };
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    const auto& pc = pieces_[j];
    if (pc.a > 0.0) {
      const double t = -pc.b / pc.a;
      if (t >= lower(j) && t <= upper(j)) take(t, t);
    } else if (pc.b == 0.0) {
      take(lower(j), upper(j));
    }
  }
  for (double t : knots_) {
    if (left_derivative(t) <= 0.0 && right_derivative(t) >= 0.0) take(t, t);
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Oracles

double smooth_value(const FunctionInstance& f, const Vector& x) {
  check_dimension(f, x);
  switch (f.smooth.kind) {
    case SmoothKind::quadratic:
      return 0.5 * x.dot(f.smooth.sym * x);
    case SmoothKind::least_squares:
      return 0.5 * (f.smooth.a * x - f.smooth.b).squaredNorm();
    case SmoothKind::none:
      break;
  }
  return 0.0;
}

Vector smooth_gradient(const FunctionInstance& f, const Vector& x) {
  check_dimension(f, x);
  switch (f.smooth.kind) {
    case SmoothKind::quadratic:
      return f.smooth.sym * x;
    case SmoothKind::least_squares:
      return f.smooth.a.transpose() * (f.smooth.a * x - f.smooth.b);
    case SmoothKind::none:
      break;
  }
  return Vector::Zero(x.size());
}

bool in_domain(const FunctionInstance& f, const Vector& x) {
  check_dimension(f, x);
  const auto& h = f.nonsmooth;
  if (h.kind == NonsmoothKind::sparse_nonneg && (x.array() < 0.0).any()) return false;
  if (h.kind == NonsmoothKind::sparse || h.kind == NonsmoothKind::sparse_nonneg) {
    for (const auto& block : h.blocks) {
      if (block_nonzeros(block, x) > block.level) return false;
    }
  }
  return true;
}

ExtendedReal evaluate(const FunctionInstance& f, const Vector& x) {
  if (!in_domain(f, x)) return ExtendedReal::plus_infinity();
  const auto& h = f.nonsmooth;
  double value = smooth_value(f, x);
  switch (h.kind) {
    case NonsmoothKind::l1:
      value += h.weight * x.lpNorm<1>();
      break;
    case NonsmoothKind::plq:
      for (Eigen::Index i = 0; i < x.size(); ++i) value += h.plq.value(x(i));
      break;
    case NonsmoothKind::quartic_gap: {
      const double t = x(0);
      value += t == 0.0 ? -1.0 : t * t * t * t;
      break;
    }
    default:
      break;
  }
  return ExtendedReal(value);
}

SubdiffDistance subdiff_distance(const FunctionInstance& f, const Vector& x) {
  if (!in_domain(f, x)) return kInfinity;
  const auto& h = f.nonsmooth;
  const Vector grad = smooth_gradient(f, x);
  switch (h.kind) {
    case NonsmoothKind::none:
      return grad.norm();
    case NonsmoothKind::quartic_gap: {
      const double t = x(0);
      return t == 0.0 ? 0.0 : std::abs(4.0 * t * t * t);
    }
    case NonsmoothKind::l1: {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double g = grad(i);
        double d = 0.0;
        if (x(i) > 0.0) {
          d = g + h.weight;
        } else if (x(i) < 0.0) {
          d = g - h.weight;
        } else {
          d = std::max(0.0, std::abs(g) - h.weight);
        }
        sq += d * d;
      }
      return std::sqrt(sq);
    }
    case NonsmoothKind::plq: {
      double sq = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        // distance of -g to [phi'_-(x_i), phi'_+(x_i)]
        const double lo = h.plq.left_derivative(x(i));
        const double hi = h.plq.right_derivative(x(i));
        const double target = -grad(i);
        const double d = target < lo ? lo - target : (target > hi ? target - hi : 0.0);
        sq += d * d;
      }
      return std::sqrt(sq);
    }
    case NonsmoothKind::sparse:
    case NonsmoothKind::sparse_nonneg: {
      const bool nonneg = h.kind == NonsmoothKind::sparse_nonneg;
      double sq = 0.0;
      for (const auto& block : h.blocks) {
        const std::size_t nnz = block_nonzeros(block, x);
        const bool whole = block.level == block.length;
        if (nnz < block.level && !whole) return std::nullopt;
        for (std::size_t k = block.offset; k < block.offset + block.length; ++k) {
          const auto i = static_cast<Eigen::Index>(k);
          if (x(i) != 0.0) {
            sq += grad(i) * grad(i);
          } else if (whole) {
            // N is {0} (plain) or (-inf, 0] (nonneg orthant) in this coordinate.
            const double d = nonneg ? std::max(0.0, -grad(i)) : grad(i);
            sq += d * d;
          }
        }
      }
      return std::sqrt(sq);
    }
  }
  return std::nullopt;
}

bool is_composite(const FunctionInstance& f) {
  return f.nonsmooth.kind != NonsmoothKind::quartic_gap;
}

double reference_level(const FunctionInstance& f, const Vector& base) {
  const ExtendedReal v = evaluate(f, base);
  if (!v.is_finite()) throw UsageError("base point lies outside dom f");
  if (f.nonsmooth.kind == NonsmoothKind::quartic_gap && base(0) == 0.0) return 0.0;
  return v.value();
}

std::vector<std::size_t> support_of(const Vector& x) {
  std::vector<std::size_t> s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) != 0.0) s.push_back(static_cast<std::size_t>(i));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Factories

FunctionInstance make_quadratic(std::string name, const Matrix& m) {
  FunctionInstance f;
  f.name = std::move(name);
  f.family = Family::quadratic;
  f.dimension = static_cast<std::size_t>(m.rows());
  f.smooth.kind = SmoothKind::quadratic;
  f.smooth.sym = symmetrize(m, "M");
  finish(f);
  return f;
}

FunctionInstance make_least_squares(std::string name, const Matrix& a, const Vector& b) {
  if (a.rows() != b.size() || a.cols() == 0) {
    throw UsageError("least squares: A must be q x p with b of length q");
  }
  FunctionInstance f;
  f.name = std::move(name);
  f.family = Family::least_squares;
  f.dimension = static_cast<std::size_t>(a.cols());
  f.smooth.kind = SmoothKind::least_squares;
  f.smooth.a = a;
  f.smooth.b = b;
  finish(f);
  return f;
}

FunctionInstance make_l1(std::string name, std::size_t p, double lambda) {
  if (p == 0 || !(lambda >= 0.0)) throw UsageError("l1: need p >= 1 and lambda >= 0");
  FunctionInstance f;
  f.name = std::move(name);
  f.family = Family::l1;
  f.dimension = p;
  f.nonsmooth.kind = NonsmoothKind::l1;
  f.nonsmooth.weight = lambda;
  finish(f);
  return f;
}

FunctionInstance make_l1_least_squares(std::string name, const Matrix& a, const Vector& b,
                                       double lambda) {
  if (!(lambda >= 0.0)) throw UsageError("l1: lambda must be nonnegative");
  FunctionInstance f = make_least_squares(std::move(name), a, b);
  f.family = Family::l1_least_squares;
  f.nonsmooth.kind = NonsmoothKind::l1;
  f.nonsmooth.weight = lambda;
  finish(f);
  return f;
}

FunctionInstance make_zero_norm_quadratic(std::string name, const Matrix& m, std::size_t level,
                                          bool nonneg) {
  FunctionInstance f = make_quadratic(std::move(name), m);
  f.family = nonneg ? Family::zero_norm_quadratic_nonneg : Family::zero_norm_quadratic;
  check_level(level, f.dimension);
  f.nonsmooth.kind = nonneg ? NonsmoothKind::sparse_nonneg : NonsmoothKind::sparse;
  f.nonsmooth.blocks = {SparsityBlock{0, f.dimension, level}};
  finish(f);
  return f;
}

FunctionInstance make_bilinear(std::string name, const Matrix& a, std::size_t cols,
                               std::size_t level) {
  if (a.rows() != a.cols() || a.rows() == 0 || cols == 0) {
    throw UsageError("bilinear: A must be a nonempty square matrix and m >= 1");
  }
  const auto n = static_cast<std::size_t>(a.rows());
  const auto nm = static_cast<Eigen::Index>(n * cols);
  check_level(level, n * cols);

  // <U, AV> = vec(U)' (I_m kron A) vec(V) = 1/2 z' [[0 K] [K' 0]] z.
  Matrix k = Matrix::Zero(nm, nm);
  for (std::size_t j = 0; j < cols; ++j) {
    const auto off = static_cast<Eigen::Index>(j * n);
    k.block(off, off, a.rows(), a.cols()) = a;
  }
  Matrix m = Matrix::Zero(2 * nm, 2 * nm);
  m.topRightCorner(nm, nm) = k;
  m.bottomLeftCorner(nm, nm) = k.transpose();

  FunctionInstance f = make_quadratic(std::move(name), m);
  f.family = Family::bilinear_sparse;
  f.nonsmooth.kind = NonsmoothKind::sparse;
  f.nonsmooth.blocks = {SparsityBlock{0, n * cols, level},
                        SparsityBlock{n * cols, n * cols, level}};
  f.bilinear = BilinearShape{n, cols, a};
  finish(f);
  return f;
}

FunctionInstance make_plq(std::string name, std::size_t p, PlqTable table) {
  if (p == 0) throw UsageError("plq: p must be positive");
  FunctionInstance f;
  f.name = std::move(name);
  f.family = Family::plq_separable;
  f.dimension = p;
  f.nonsmooth.kind = NonsmoothKind::plq;
  f.nonsmooth.plq = std::move(table);
  finish(f);
  return f;
}

FunctionInstance make_quartic_gap() {
  FunctionInstance f;
  f.name = "quartic-gap";
  f.family = Family::quartic_gap;
  f.dimension = 1;
  f.nonsmooth.kind = NonsmoothKind::quartic_gap;
  finish(f);
  return f;
}

Vector vectorize_pair(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw UsageError("U and V must have the same shape");
  }
  Vector z(u.size() + v.size());
  z << u.reshaped(), v.reshaped();
  return z;
}

std::pair<Matrix, Matrix> unvectorize_pair(const BilinearShape& shape, const Vector& z) {
  const auto n = static_cast<Eigen::Index>(shape.rows);
  const auto m = static_cast<Eigen::Index>(shape.cols);
  if (z.size() != 2 * n * m) throw UsageError("vector length does not match bilinear shape");
  Matrix u = z.head(n * m).reshaped(n, m);
  Matrix v = z.tail(n * m).reshaped(n, m);
  return {u, v};
}

}  // namespace regmod
