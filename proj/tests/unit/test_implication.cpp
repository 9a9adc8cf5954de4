#include <cmath>
#include <map>

#include "doctest.h"

#include "regmod/errors.hpp"
#include "regmod/implication.hpp"
#include "../support/oracles.hpp"

using namespace regmod;
using oracle::vec;

namespace {

struct Setup {
  FunctionInstance f;
  CriticalSet cs{"", 0, {}};
  SampleCloud cloud;
  EstimateBundle est;
  ProxRegularityReport prox;
};

Setup prepare(const FunctionInstance& f, const Vector& base, std::size_t n = 512, std::uint64_t seed = 7) {
  Setup s{f, enumerate_critical_set(f), {}, {}, {}};
  CloudRequest req;
  req.base = base;
  req.radii = {0.2, 0.1, 0.05};
  req.per_radius = n;
  req.seed = seed;
  s.cloud = sample_cloud(f, s.cs, req);
  s.est = estimate_all(s.cloud);
  ProxRegularityRequest pr;
  pr.base = base;
  pr.rho = f.rho.value_or(f.smoothness);
  pr.delta = 0.2;
  pr.pairs = 1000;
  pr.seed = seed;
  s.prox = check_prox_regularity(f, pr);
  return s;
}

std::map<std::string, ImplicationCheck> by_name(const ImplicationReport& rep) {
  std::map<std::string, ImplicationCheck> out;
  for (const auto& c : rep.checks) out[c.name] = c;
  return out;
}

}  // namespace

TEST_SUITE("implication-checker") {

TEST_CASE("zero-norm quadratic passes every applicable arrow") {
  const auto s = prepare(oracle::catalog("zq3"), vec({1, 1, 0}));
  const auto& pr = derive_premises(s.f, s.cs, s.cloud, s.prox);
  CHECK(pr.composite);
  CHECK_FALSE(pr.h_convex);
  CHECK(pr.base_critical);
  CHECK(pr.local_min);
  CHECK(pr.rho_certified);

  const auto rep = cross_check(s.f, s.cs, s.cloud, s.est, s.prox, 0.05);
  REQUIRE(rep.checks.size() == 8);
  const auto checks = by_name(rep);
  for (const char* n : {"A", "B", "C", "D", "E", "F", "H"}) {
    CAPTURE(n);
    CHECK(checks.at(n).status == CheckStatus::pass);
    CHECK(checks.at(n).slack >= 0.0);
  }
  CHECK(checks.at("G").status == CheckStatus::skipped);
  CHECK(checks.at("G").reason == "h is not convex");
  CHECK_FALSE(rep.any_failed());
}

TEST_CASE("lasso passes all eight arrows") {
  const auto s = prepare(oracle::catalog("lasso-toy"), vec({0.5}));
  const auto rep = cross_check(s.f, s.cs, s.cloud, s.est, s.prox, 0.05);
  for (const auto& c : rep.checks) {
    CAPTURE(c.name);
    CHECK(c.status == CheckStatus::pass);
  }
}

TEST_CASE("quartic gap skips the subregularity arrows") {
  const auto s = prepare(make_quartic_gap(), vec({0}));
  const auto checks = by_name(cross_check(s.f, s.cs, s.cloud, s.est, s.prox, 0.05));
  for (const char* n : {"C", "D", "E"}) {
    CAPTURE(n);
    CHECK(checks.at(n).status == CheckStatus::skipped);
    CHECK(checks.at(n).reason == "subregularity fails");
  }
  for (const auto& [name, c] : checks) CHECK(c.status != CheckStatus::fail);
}

TEST_CASE("the half square is tight in the KL to growth constant") {
  const auto s = prepare(oracle::catalog("half-square"), vec({0}));
  const double c = s.est.kl->value;
  const double nu = s.est.quadratic_growth->value;
  CHECK(std::abs(c * c / 4.0 - nu) <= 0.02 * nu);
  const auto checks = by_name(cross_check(s.f, s.cs, s.cloud, s.est, s.prox, 0.05));
  CHECK(checks.at("B").status == CheckStatus::pass);
  CHECK(checks.at("B").slack <= 0.05 * nu + 1e-12);
}

TEST_CASE("tampered estimates are caught") {
  const auto s = prepare(oracle::catalog("zq3"), vec({1, 1, 0}), 256);
  const auto status_of = [&](const EstimateBundle& est, const char* name) {
    return by_name(cross_check(s.f, s.cs, s.cloud, est, s.prox, 0.05)).at(name);
  };
  auto low_c = s.est;
  low_c.kl->value = 0.5;
  CHECK(status_of(low_c, "A").status == CheckStatus::fail);

  auto low_nu = s.est;
  low_nu.quadratic_growth->value = 0.1;
  CHECK(status_of(low_nu, "B").status == CheckStatus::fail);

  auto big_varpi = s.est;
  big_varpi.luo_tseng->value = 10.0;
  const auto d = status_of(big_varpi, "D");
  CHECK(d.status == CheckStatus::fail);
  CHECK(d.violations > 0);

  auto big_kappa = s.est;
  big_kappa.subregularity->value = 5.0;
  CHECK(status_of(big_kappa, "H").status == CheckStatus::fail);
  CHECK(cross_check(s.f, s.cs, s.cloud, big_kappa, s.prox, 0.05).any_failed());
}

TEST_CASE("estimate bundle records why an estimate is missing") {
  const auto s = prepare(make_quartic_gap(), vec({0}), 128);
  CHECK_FALSE(s.est.luo_tseng.has_value());
  CHECK_FALSE(s.est.luo_tseng_reason.empty());
  CHECK(s.est.kl.has_value());
}

TEST_CASE("proximal gradient on closed-form examples") {
  SUBCASE("lasso contracts by one half") {
    const auto f = oracle::catalog("lasso-toy");
    const auto rec = prox_grad_run(f, enumerate_critical_set(f), vec({2}), 0.5, 60);
    CHECK(rec.mode == "prox-gradient");
    CHECK(rec.rate == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rec.iterates.back()(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(rec.diverged);
  }
  SUBCASE("half square with unit step stops after one step") {
    const auto f = oracle::catalog("half-square");
    const auto rec = prox_grad_run(f, enumerate_critical_set(f), vec({3}), 1.0, 10);
    CHECK(rec.iterates[1](0) == 0.0);
    CHECK(rec.rate == 0.0);
  }
  SUBCASE("zero-norm quadratic contracts by 1 - 2 tau") {
    const auto f = oracle::catalog("zq3");
    const auto rec = prox_grad_run(f, enumerate_critical_set(f), vec({1.3, 0.7, 0}), 0.4, 200);
    CHECK(rec.rate == doctest::Approx(0.2).epsilon(1e-6));
    CHECK((rec.iterates.back() - vec({1, 1, 0})).norm() <= 1e-12);
    for (double r : rec.residuals) CHECK(std::isfinite(r));
  }
  SUBCASE("tail rate agrees with consecutive distance ratios") {
    const auto f = oracle::catalog("bilinear-4x4");
    Vector x0 = f.base_points.front();
    for (auto& v : x0) {
      if (v != 0.0) v += 0.01;
    }
    const auto rec = prox_grad_run(f, enumerate_critical_set(f), x0, 0.9 / f.smoothness, 200);
    if (rec.rate > 0.0 && rec.rate < 1.0 && rec.rate_points >= 3) {
      std::size_t k = rec.distances.size() - 1;
      while (k > 0 && !(rec.distances[k] > 1e-10)) --k;
      const double ratio = rec.distances[k] / rec.distances[k - 1];
      CHECK(std::abs(ratio - rec.rate) <= 0.1);
    }
  }
  SUBCASE("quartic gap is sublinear") {
    const auto f = make_quartic_gap();
    const double tau = f.smoothness > 0.0 ? 0.9 / f.smoothness : 0.1;
    const auto rec = prox_grad_run(f, enumerate_critical_set(f), vec({0.5}), tau, 200);
    CHECK(rec.mode == "gradient");
    CHECK(rec.rate == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("solver rejects steps above 1/L") {
  const auto f = oracle::catalog("zq3");
  CHECK_THROWS_AS(prox_grad_run(f, enumerate_critical_set(f), vec({1, 1, 0}), 0.6, 10), UsageError);
  CHECK_THROWS_AS(prox_grad_run(f, enumerate_critical_set(f), vec({1, 1, 0}), 0.0, 10), UsageError);
}

TEST_CASE("status names") {
  CHECK(check_status_name(CheckStatus::pass) == "pass");
  CHECK(check_status_name(CheckStatus::fail) == "fail");
  CHECK(check_status_name(CheckStatus::skipped) == "skipped");
}

}
