#include <cmath>
#include <random>

#include "doctest.h"

#include "regmod/errors.hpp"
#include "regmod/prox.hpp"
#include "../support/oracles.hpp"

using namespace regmod;
using oracle::vec;

TEST_SUITE("prox-toolbox") {

TEST_CASE("closed-form kernels") {
  NonsmoothPart l1;
  l1.kind = NonsmoothKind::l1;
  l1.weight = 1.0;
  CHECK(prox_h({l1, vec({1}), 0.5})(0) == doctest::Approx(0.5));
  CHECK(prox_h({l1, vec({-0.2}), 0.5})(0) == 0.0);

  NonsmoothPart none;
  const Vector id = prox_h({none, vec({2, -3}), 7.0});
  CHECK(id(0) == 2.0);
  CHECK(id(1) == -3.0);

  NonsmoothPart sparse;
  sparse.kind = NonsmoothKind::sparse;
  sparse.blocks = {SparsityBlock{0, 3, 2}};
  const Vector s = prox_h({sparse, vec({3, 1, 2}), 0.3});
  CHECK(s == vec({3, 0, 2}));

  NonsmoothPart quartic;
  quartic.kind = NonsmoothKind::quartic_gap;
  CHECK_THROWS_AS(prox_h({quartic, vec({1}), 1.0}), CapabilityError);
  CHECK_THROWS_AS(prox_h({l1, vec({1}), 0.0}), UsageError);
}

TEST_CASE("hard thresholding") {
  CHECK(project_sparse(vec({3, 1, 2}), 2) == vec({3, 0, 2}));
  CHECK(project_sparse(vec({1, 1, 1}), 2) == vec({1, 1, 0}));
  CHECK(project_sparse(vec({-1, 1, -1}), 1) == vec({-1, 0, 0}));
  CHECK(project_sparse(vec({0.3, -7, 2}), 3) == vec({0.3, -7, 2}));
  CHECK_THROWS_AS(project_sparse(vec({1, 2}), 0), UsageError);
  CHECK_THROWS_AS(project_sparse(vec({1, 2}), 3), UsageError);
}

TEST_CASE("nonnegative hard thresholding") {
  CHECK(project_sparse_nonneg(vec({-5, 2, 1}), 1) == vec({0, 2, 0}));
  CHECK(project_sparse_nonneg(vec({-1, -2, -3}), 2) == vec({0, 0, 0}));
  CHECK(project_sparse_nonneg(vec({2, 3}), 2) == vec({2, 3}));
}

TEST_CASE("projection is optimal against brute-force support enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = dim(rng);
    std::uniform_int_distribution<int> lev(1, p);
    const auto level = static_cast<std::size_t>(lev(rng));
    Vector z(p);
    for (int i = 0; i < p; ++i) z(i) = gauss(rng);
    if (trial % 7 == 0) z(0) = z(p - 1);  // exercise ties
    const Vector u = project_sparse(z, level);
    CHECK(support_of(u).size() <= level);
    CHECK((u - z).norm() <= oracle::brute_sparse_distance(z, level, false) + 1e-12);
    const Vector w = project_sparse_nonneg(z, level);
    CHECK((w.array() >= 0.0).all());
    CHECK(support_of(w).size() <= level);
    CHECK((w - z).norm() <= oracle::brute_sparse_distance(z, level, true) + 1e-12);
  }
}

TEST_CASE("prox of convex h is firmly nonexpansive") {
  std::vector<NonsmoothPart> parts(3);
  parts[0].kind = NonsmoothKind::l1;
  parts[0].weight = 0.7;
  parts[1].kind = NonsmoothKind::plq;
  parts[1].plq = oracle::catalog("plq-huber").nonsmooth.plq;
  parts[2].kind = NonsmoothKind::sparse_nonneg;
  parts[2].blocks = {SparsityBlock{0, 4, 4}};  // the orthant
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss(0.0, 2.0);
  for (const auto& h : parts) {
    for (int trial = 0; trial < 500; ++trial) {
      Vector z(4);
      Vector w(4);
      for (int i = 0; i < 4; ++i) {
        z(i) = gauss(rng);
        w(i) = gauss(rng);
      }
      const double tau = 0.1 + 0.2 * (trial % 10);
      const Vector pz = prox_h({h, z, tau});
      const Vector pw = prox_h({h, w, tau});
      CHECK((pz - pw).norm() <= (z - w).norm() + 1e-12);
      CHECK((pz - pw).squaredNorm() <= (pz - pw).dot(z - w) + 1e-12);
    }
  }
}

TEST_CASE("plq prox matches grid minimization") {
  for (const char* name : {"plq-huber", "plq-deadzone"}) {
    const auto& t = oracle::catalog(name).nonsmooth.plq;
    for (double z : {-3.0, -1.2, -0.4, 0.0, 0.7, 1.05, 2.5}) {
      for (double tau : {0.1, 0.5, 2.0}) {
        CAPTURE(name);
        CAPTURE(z);
        CAPTURE(tau);
        const double ref = oracle::grid_argmin(
            [&](double u) { return t.value(u) + (u - z) * (u - z) / (2 * tau); }, -5, 5, 1e-4);
        CHECK(std::abs(t.prox(z, tau) - ref) <= 2e-4);
      }
    }
  }
}

TEST_CASE("residual map") {
  const auto lasso = oracle::catalog("lasso-toy");
  CHECK(residual_map(lasso, vec({2}))(0) == doctest::Approx(-1.5));
  CHECK(residual_map(lasso, vec({0.5}))(0) == doctest::Approx(0.0));

  const auto zq3 = oracle::catalog("zq3");
  const Vector r = residual_map(zq3, vec({1.1, 0.9, 0}));
  CHECK(r(0) == doctest::Approx(-0.2));
  CHECK(r(1) == doctest::Approx(0.2));
  CHECK(r(2) == 0.0);
  CHECK(residual_map(zq3, vec({2, 2, 0})).norm() == 0.0);

  CHECK_THROWS_AS(residual_map(make_quartic_gap(), vec({1})), CapabilityError);
}

TEST_CASE("l1-quadratic minimizer agrees with a grid search") {
  Matrix q(2, 2);
  q << 2, 0.5, 0.5, 1;
  const Vector c = vec({1, -0.3});
  const double lambda = 0.4;
  const Vector u = minimize_l1_quadratic(q, c, lambda);
  auto obj = [&](double a, double b) {
    const Vector v = vec({a, b});
    return 0.5 * v.dot(q * v) - c.dot(v) + lambda * v.lpNorm<1>();
  };
  double best = INFINITY;
  double ba = 0;
  double bb = 0;
  for (double a = -2; a <= 2; a += 2e-3) {
    for (double b = -2; b <= 2; b += 2e-3) {
      if (obj(a, b) < best) {
        best = obj(a, b);
        ba = a;
        bb = b;
      }
    }
  }
  CHECK(std::abs(u(0) - ba) <= 3e-3);
  CHECK(std::abs(u(1) - bb) <= 3e-3);
  CHECK(obj(u(0), u(1)) <= best + 1e-12);

  Matrix singular = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(minimize_l1_quadratic(singular, c, lambda), CapabilityError);
}

}
