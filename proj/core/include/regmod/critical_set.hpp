#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "regmod/function_model.hpp"

namespace regmod {

/// One closed convex component of crit f.
///
/// point/affine/polyhedral pieces are {anchor + basis * y : constraints * y >= bounds}
/// with orthonormal basis columns; box pieces are {lower <= x <= upper}.
struct CriticalPiece {
  enum class Kind { point, affine, polyhedral, box };

  Kind kind = Kind::point;
  std::vector<std::size_t> support;  // coordinates allowed to be nonzero
  Vector anchor;
  Matrix basis;
  Matrix constraints;
  Vector bounds;
  Vector lower;
  Vector upper;

  [[nodiscard]] Vector project(const Vector& x) const;
  [[nodiscard]] double distance(const Vector& x) const { return (x - project(x)).norm(); }
};

std::string_view piece_kind_name(CriticalPiece::Kind kind);

class CriticalSet {
 public:
  CriticalSet(std::string instance, std::size_t dimension, std::vector<CriticalPiece> pieces);

  [[nodiscard]] const std::string& instance() const { return instance_; }
  [[nodiscard]] std::size_t dimension() const { return dimension_; }
  [[nodiscard]] const std::vector<CriticalPiece>& pieces() const { return pieces_; }
  [[nodiscard]] bool empty() const { return pieces_.empty(); }

 private:
  std::string instance_;
  std::size_t dimension_;
  std::vector<CriticalPiece> pieces_;
};

/// Exact description of (df)^{-1}(0) for catalog families.
CriticalSet enumerate_critical_set(const FunctionInstance& f);

/// dist(x, crit f). Throws DomainError on an empty set.
double critical_distance(const CriticalSet& cs, const Vector& x);

/// A nearest critical point to x.
Vector project_onto_critical_set(const CriticalSet& cs, const Vector& x);

/// Deterministic critical points around `center`: the projection of center onto
/// each piece plus the projections of its +-radius moves along the piece.
std::vector<Vector> critical_grid(const CriticalSet& cs, const Vector& center, double radius);

}  // namespace regmod
