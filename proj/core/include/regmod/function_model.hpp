#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regmod/types.hpp"

namespace regmod {

enum class Family {
  zero_norm_quadratic,
  zero_norm_quadratic_nonneg,
  bilinear_sparse,
  quadratic,
  least_squares,
  l1,
  l1_least_squares,
  plq_separable,
  quartic_gap,
};

std::string_view family_name(Family family);
std::optional<Family> parse_family(std::string_view name);

enum class SmoothKind { none, quadratic, least_squares };

/// Smooth part g. Quadratic: g(x) = 1/2 x'Mx with M already symmetrized.
/// Least squares: g(x) = 1/2 |Ax - b|^2.
struct SmoothPart {
  SmoothKind kind = SmoothKind::none;
  Matrix sym;  // quadratic
  Matrix a;    // least squares
  Vector b;

  /// Hessian Q and linear term c of g(x) = 1/2 x'Qx - c'x + const.
  [[nodiscard]] Matrix hessian(std::size_t p) const;
  [[nodiscard]] Vector linear(std::size_t p) const;
};

/// One coordinate range constrained to at most `level` nonzeros.
struct SparsityBlock {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::size_t level = 0;
};

/// Convex, continuous, separable piecewise linear-quadratic scalar function.
/// Piece j is 1/2 a t^2 + b t + c on [knots[j-1], knots[j]] (outer pieces unbounded).
class PlqTable {
 public:
  struct Piece {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
  };

  PlqTable() = default;
  /// Throws ConfigError (path "pieces"/"knots") unless the table is convex and continuous.
  PlqTable(std::vector<double> knots, std::vector<Piece> pieces);

  [[nodiscard]] double value(double t) const;
  [[nodiscard]] double left_derivative(double t) const;
  [[nodiscard]] double right_derivative(double t) const;
  /// argmin_u phi(u) + (u - z)^2 / (2 tau).
  [[nodiscard]] double prox(double z, double tau) const;
  /// Closed interval of minimizers; bounds may be infinite. Empty if lo > hi.
  [[nodiscard]] std::pair<double, double> minimizers() const;

  [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
  [[nodiscard]] const std::vector<Piece>& pieces() const { return pieces_; }

 private:
  [[nodiscard]] std::size_t piece_index(double t) const;
  [[nodiscard]] double lower(std::size_t j) const;
  [[nodiscard]] double upper(std::size_t j) const;

  std::vector<double> knots_;
  std::vector<Piece> pieces_;
};

enum class NonsmoothKind { none, l1, sparse, sparse_nonneg, plq, quartic_gap };

struct NonsmoothPart {
  NonsmoothKind kind = NonsmoothKind::none;
  double weight = 0.0;                // l1 lambda
  std::vector<SparsityBlock> blocks;  // sparse, sparse_nonneg
  PlqTable plq;
};

/// Premises that cannot be decided from samples. Unset entries are
/// derived by the implication checker.
struct PremiseFlags {
  std::optional<bool> continuous_on_crit;
  std::optional<bool> crit_level_bounded;
  std::optional<bool> local_min;
};

/// Shape of the matrix variables of the bilinear family: U, V in R^{rows x cols}.
struct BilinearShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Matrix a;  // rows x rows
};

/// f = g + h on R^p. Immutable after construction; safe to share between threads.
struct FunctionInstance {
  std::string name;
  Family family = Family::quadratic;
  std::size_t dimension = 0;
  SmoothPart smooth;
  NonsmoothPart nonsmooth;
  bool convex = false;
  double smoothness = 0.0;  // Lipschitz modulus of grad g on the working box
  double box_radius = 10.0;
  std::vector<Vector> base_points;
  PremiseFlags premises;
  std::optional<double> rho;
  std::optional<BilinearShape> bilinear;
};

/// dist(0, df(x)); nullopt means the catalog has no exact formula at x.
using SubdiffDistance = std::optional<double>;

ExtendedReal evaluate(const FunctionInstance& f, const Vector& x);
double smooth_value(const FunctionInstance& f, const Vector& x);
Vector smooth_gradient(const FunctionInstance& f, const Vector& x);
bool in_domain(const FunctionInstance& f, const Vector& x);
SubdiffDistance subdiff_distance(const FunctionInstance& f, const Vector& x);

/// True when h has a closed-form prox kernel and f = g + h is used as a composite.
bool is_composite(const FunctionInstance& f);

/// lim f(x) as x -> base inside dom f, x != base. Equals f(base) except where f
/// jumps at the base point itself (quartic-gap at 0).
double reference_level(const FunctionInstance& f, const Vector& base);

/// Indices i with x_i != 0.
std::vector<std::size_t> support_of(const Vector& x);

// Factories. Each validates dimensions and fills convexity and smoothness.
FunctionInstance make_quadratic(std::string name, const Matrix& m);
FunctionInstance make_least_squares(std::string name, const Matrix& a, const Vector& b);
FunctionInstance make_l1(std::string name, std::size_t p, double lambda);
FunctionInstance make_l1_least_squares(std::string name, const Matrix& a, const Vector& b,
                                       double lambda);
FunctionInstance make_zero_norm_quadratic(std::string name, const Matrix& m, std::size_t level,
                                          bool nonneg = false);
FunctionInstance make_bilinear(std::string name, const Matrix& a, std::size_t cols,
                               std::size_t level);
FunctionInstance make_plq(std::string name, std::size_t p, PlqTable table);
FunctionInstance make_quartic_gap();

/// vec(U) followed by vec(V), column-major.
Vector vectorize_pair(const Matrix& u, const Matrix& v);
std::pair<Matrix, Matrix> unvectorize_pair(const BilinearShape& shape, const Vector& z);

/// Parse a JSON instance record. Throws ConfigError with the offending field path.
FunctionInstance load_instance(std::string_view json_text, std::string default_name = {});
FunctionInstance load_instance_file(const std::filesystem::path& path);

}  // namespace regmod
