#include <cmath>

#include "doctest.h"

#include "regmod/errors.hpp"
#include "regmod/estimators.hpp"
#include "../support/oracles.hpp"

using namespace regmod;
using oracle::vec;

namespace {

SampleCloud cloud_for(const FunctionInstance& f, const Vector& base, std::vector<double> radii, std::size_t n,
                      std::uint64_t seed, std::size_t jobs = 1) {
  const auto cs = enumerate_critical_set(f);
  CloudRequest req;
  req.base = base;
  req.radii = std::move(radii);
  req.per_radius = n;
  req.seed = seed;
  req.jobs = jobs;
  return sample_cloud(f, cs, req);
}

const std::vector<double> kRadii{0.2, 0.1, 0.05};

}  // namespace

TEST_SUITE("moduli-estimators") {

TEST_CASE("cloud size, containment and support preservation") {
  const auto zq3 = oracle::catalog("zq3");
  const Vector base = vec({1, 1, 0});
  const auto cloud = cloud_for(zq3, base, kRadii, 128, 7);
  CHECK(cloud.records.size() == 384);
  CHECK(cloud.excluded == 0);
  for (const auto& r : cloud.records) {
    const double dist = (r.x - base).norm();
    CHECK(dist <= kRadii[r.shell] + 1e-15);
    CHECK(dist > kRadii[r.shell] / 2);
    CHECK(r.x(2) == 0.0);
    CHECK(in_domain(zq3, r.x));
  }
}

TEST_CASE("quartic-gap clouds avoid the base point") {
  const auto q = make_quartic_gap();
  const auto cloud = cloud_for(q, vec({0}), kRadii, 64, 1);
  CHECK(cloud.reference == 0.0);
  for (const auto& r : cloud.records) {
    CHECK(r.x(0) != 0.0);
    CHECK(std::abs(r.x(0)) <= 0.2);
    CHECK(r.fgap == doctest::Approx(std::pow(r.x(0), 4)));
  }
}

TEST_CASE("clouds are deterministic and independent of the worker count") {
  const auto f = oracle::catalog("bilinear-4x4");
  const auto a = cloud_for(f, f.base_points.front(), kRadii, 64, 99, 1);
  const auto b = cloud_for(f, f.base_points.front(), kRadii, 64, 99, 4);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x == b.records[i].x);
    CHECK(a.records[i].cdist == b.records[i].cdist);
    CHECK(a.records[i].rnorm == b.records[i].rnorm);
  }
  const auto ka = estimate_subregularity(a);
  const auto kb = estimate_subregularity(b);
  CHECK(ka.value == kb.value);
  const auto c = cloud_for(f, f.base_points.front(), kRadii, 64, 100, 1);
  CHECK(c.records.front().x != a.records.front().x);
}

TEST_CASE("usage errors") {
  const auto zq3 = oracle::catalog("zq3");
  CHECK_THROWS_AS(cloud_for(zq3, vec({1, 1, 1}), kRadii, 64, 1), UsageError);
  CHECK_THROWS_AS(cloud_for(zq3, vec({1, 1, 0}), kRadii, 16, 1), UsageError);
  CHECK_THROWS_AS(cloud_for(zq3, vec({1, 1, 0}), {0.1, 0.2}, 64, 1), UsageError);
}

TEST_CASE("closed-form moduli on the zero-norm quadratic") {
  const auto cloud = cloud_for(oracle::catalog("zq3"), vec({1, 1, 0}), kRadii, 512, 7);
  const auto kl = estimate_kl(cloud);
  REQUIRE(kl.exponent);
  CHECK(*kl.exponent == doctest::Approx(0.5).epsilon(0.02));
  CHECK(kl.value == doctest::Approx(2.0).epsilon(0.01));
  const auto sub = estimate_subregularity(cloud);
  CHECK(sub.value == doctest::Approx(0.5).epsilon(0.01));
  CHECK_FALSE(sub.divergent);
  const auto qg = estimate_quadratic_growth(cloud);
  CHECK(qg.value == doctest::Approx(1.0).epsilon(0.01));
  CHECK_FALSE(qg.growth_failure);
  const auto lt = check_luo_tseng(cloud);
  CHECK(lt.value == doctest::Approx(0.5).epsilon(0.01));
  REQUIRE(lt.window);
  CHECK(*lt.window > 0.0);
}

TEST_CASE("scalar closed forms") {
  SUBCASE("half square") {
    const auto cloud = cloud_for(oracle::catalog("half-square"), vec({0}), kRadii, 512, 3);
    const auto kl = estimate_kl(cloud);
    CHECK(*kl.exponent == doctest::Approx(0.5).epsilon(0.01));
    CHECK(kl.value == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
    CHECK(estimate_subregularity(cloud).value == doctest::Approx(1.0).epsilon(0.01));
    CHECK(estimate_quadratic_growth(cloud).value == doctest::Approx(0.5).epsilon(0.01));
  }
  SUBCASE("absolute value is sharp") {
    const auto cloud = cloud_for(oracle::catalog("abs"), vec({0}), {0.5, 0.25, 0.125}, 512, 3);
    const auto kl = estimate_kl(cloud);
    CHECK(std::abs(*kl.exponent) <= 0.05);
    // |x| / x^2 is smallest at the outer radius
    CHECK(estimate_quadratic_growth(cloud).value == doctest::Approx(2.0).epsilon(0.02));
  }
  SUBCASE("lasso") {
    const auto cloud = cloud_for(oracle::catalog("lasso-toy"), vec({0.5}), kRadii, 512, 3);
    CHECK(check_luo_tseng(cloud).value == doctest::Approx(1.0).epsilon(0.01));
    CHECK(estimate_kl(cloud).value == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
    CHECK(estimate_quadratic_growth(cloud).value == doctest::Approx(0.5).epsilon(0.01));
    CHECK(estimate_subregularity(cloud).value == doctest::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("quartic gap: subregularity diverges, KL exponent 3/4") {
  const auto cloud = cloud_for(make_quartic_gap(), vec({0}), kRadii, 512, 7);
  const auto sub = estimate_subregularity(cloud);
  CHECK(sub.divergent);
  REQUIRE(sub.growth_factors.size() == 2);
  for (double g : sub.growth_factors) CHECK(g == doctest::Approx(4.0).epsilon(0.1));
  const auto kl = estimate_kl(cloud);
  CHECK(*kl.exponent == doctest::Approx(0.75).epsilon(0.02));
  CHECK(kl.divergent);
  CHECK_THROWS_AS(check_luo_tseng(cloud), CapabilityError);
}

TEST_CASE("flat regions give insufficient KL data") {
  const auto f = oracle::catalog("plq-deadzone");
  const auto cloud = cloud_for(f, vec({0}), {0.5, 0.25}, 64, 2);
  CHECK_THROWS_AS(estimate_kl(cloud), InsufficientDataError);
}

TEST_CASE("divergence rule conventions") {
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  std::vector<double> factors;
  CHECK(divergence_rule({1, 2, 4, 8}, radii, &factors));
  CHECK(factors == std::vector<double>{2, 2, 2});
  CHECK_FALSE(divergence_rule({1, 2, 2, 4}, radii));
  CHECK_FALSE(divergence_rule({1, 1.9, 3.6, 7}, radii));
  CHECK(divergence_rule({1, 1, kInfinity, kInfinity}, radii, &factors));
  CHECK(std::isinf(factors[1]));
  CHECK(std::isinf(factors[2]));
  CHECK_FALSE(divergence_rule({0, 0, 0, 0}, radii, &factors));
  CHECK(factors == std::vector<double>{1, 1, 1});
  // factors are normalized to one halving
  CHECK(divergence_rule({1, 16, 256}, {1.0, 0.25, 0.0625}, &factors));
  CHECK(factors[0] == doctest::Approx(4.0));
}

TEST_CASE("enlarging a cloud never improves the extremal statistics") {
  for (const char* name : {"zq3", "bilinear-4x4", "lasso-toy", "abs"}) {
    CAPTURE(name);
    const auto f = oracle::catalog(name);
    const Vector base = f.base_points.front();
    const auto small = cloud_for(f, base, kRadii, 64, 5);
    const auto large = cloud_for(f, base, kRadii, 256, 5);
    // the first 64 draws of each shell coincide
    for (std::size_t j = 0; j < kRadii.size(); ++j) {
      for (std::size_t i = 0; i < 64; ++i) {
        CHECK(small.records[j * 64 + i].x == large.records[j * 256 + i].x);
      }
    }
    CHECK(estimate_subregularity(large).value >= estimate_subregularity(small).value);
    CHECK(estimate_quadratic_growth(large).value <= estimate_quadratic_growth(small).value);
    CHECK(check_luo_tseng(large).value >= check_luo_tseng(small).value);
    CHECK(estimate_kl(large).value <= estimate_kl(small).value);
  }
}

TEST_CASE("prox-regularity certificates") {
  ProxRegularityRequest req;
  req.pairs = 1000;
  req.seed = 4;

  const auto ind = oracle::catalog("sparse-indicator");
  req.base = ind.base_points.front();
  req.rho = 0.0;
  req.delta = 0.5;
  const auto a = check_prox_regularity(ind, req);
  CHECK(a.pairs == 1000);
  CHECK(a.certified);

  const auto zq3 = oracle::catalog("zq3");
  req.base = vec({1, 1, 0});
  req.rho = 2.0;
  req.delta = 0.2;
  CHECK(check_prox_regularity(zq3, req).certified);

  const auto neg = oracle::catalog("neg-half-square");
  req.base = vec({0});
  req.rho = 0.5;
  const auto bad = check_prox_regularity(neg, req);
  CHECK_FALSE(bad.certified);
  CHECK(bad.worst_slack < 0.0);
  CHECK(bad.worst_x.size() == 1);
  CHECK(bad.rho_min == doctest::Approx(1.0).epsilon(1e-9));
  req.rho = 1.0;
  CHECK(check_prox_regularity(neg, req).certified);
}

TEST_CASE("minimum-norm subgradients") {
  const auto lasso = oracle::catalog("lasso-toy");
  CHECK((*min_norm_subgradient(lasso, vec({0})))(0) == doctest::Approx(-0.5));
  CHECK((*min_norm_subgradient(lasso, vec({0.5})))(0) == doctest::Approx(0.0));
  const auto zq3 = oracle::catalog("zq3");
  const Vector v = *min_norm_subgradient(zq3, vec({1.1, 0.9, 0}));
  CHECK(v.norm() == doctest::Approx(*subdiff_distance(zq3, vec({1.1, 0.9, 0}))));
  CHECK_FALSE(min_norm_subgradient(zq3, vec({1, 0, 0})).has_value());
}

}
