#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "xiwf/errors.hpp"
#include "xiwf/simplex.hpp"

using namespace xiwf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
XiMeasure two_atoms(double w1 = 1.0, double w2 = 1.0) {
  return XiMeasure::finite_atomic({{w1, SimplexPoint({0.5})}, {w2, SimplexPoint({0.3, 0.2})}});
}

void check_point(const SimplexPoint& z) {
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    REQUIRE(z[i] > 0.0);
    if (i > 0) REQUIRE(z[i] <= z[i - 1]);
    sum += z[i];
  }
  REQUIRE(sum <= 1.0 + kSimplexSlack);
}
}  // namespace

TEST_CASE("simplex points are ranked without zeros") {
  const SimplexPoint z({0.1, 0.0, 0.3, 0.2});
  REQUIRE(z.size() == 3);
  CHECK(z[0] == 0.3);
  CHECK(z[2] == 0.1);
  CHECK_THAT(z.total(), WithinAbs(0.6, 1e-15));
  CHECK_THAT(z.residual(), WithinAbs(0.4, 1e-15));
  CHECK_THAT(z.sum_squares(), WithinAbs(0.14, 1e-15));
  CHECK_THROWS_AS(SimplexPoint({0.7, 0.4}), std::invalid_argument);
  CHECK_THROWS_AS(SimplexPoint({-0.1}), std::invalid_argument);
}

TEST_CASE("measure construction validates") {
  CHECK_THROWS(XiMeasure::lambda_dirac(0.0));
  CHECK_THROWS(XiMeasure::lambda_dirac(0.5, -1.0));
  CHECK_THROWS(XiMeasure::finite_atomic({}));
  CHECK_THROWS(XiMeasure::finite_atomic({{1.0, SimplexPoint()}}));
  CHECK_THROWS(XiMeasure::lambda_beta(0.0, 1.0));
  CHECK_THAT(two_atoms(2.0, 1.0).total_mass(), WithinAbs(3.0, 1e-15));
  CHECK_THAT(two_atoms(2.0, 1.0).normalized().total_mass(), WithinAbs(1.0, 1e-15));
  CHECK(two_atoms().max_support() == 2);
}

TEST_CASE("sampling a point mass") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(sample_point(XiMeasure::lambda_dirac(0.5), rng) == SimplexPoint({0.5}));
}

TEST_CASE("atomic sampling frequencies follow the weights") {
  const auto xi = XiMeasure::finite_atomic({{2.0, SimplexPoint({0.3, 0.2})}, {1.0, SimplexPoint({0.5})}});
  Rng rng(2);
  const int draws = 100000;
  int first = 0;
  for (int i = 0; i < draws; ++i) first += sample_point(xi, rng).size() == 2;
  const double p = 2.0 / 3.0;
  const double se = std::sqrt(p * (1 - p) / draws);
  CHECK(std::abs(double(first) / draws - p) < 3 * se);
}

TEST_CASE("sampled points stay on the simplex for every family") {
  Rng rng(3);
  const XiMeasure families[] = {
      two_atoms(), XiMeasure::lambda_dirac(0.3), XiMeasure::lambda_beta(2.0, 2.0),
      XiMeasure::stick_breaking({}), XiMeasure::stick_breaking({StickLaw::Kind::beta, 0.5, 2.0})};
  for (const auto& xi : families)
    for (int i = 0; i < 100000; ++i) check_point(sample_point(xi, rng));
}

TEST_CASE("truncation floors") {
  const auto t = truncate_alpha(XiMeasure::lambda_dirac(0.5), 16, 0.5);
  CHECK_THAT(t.floor, WithinAbs(0.25, 1e-15));
  CHECK_THAT(t.mass.value, WithinAbs(4.0, 1e-12));
  CHECK(t.mass.mode == EvalMode::exact);
  CHECK(truncate_alpha(XiMeasure::lambda_dirac(0.1), 16, 0.5).mass.value == 0.0);

  const auto u = truncate_alpha(two_atoms(), 10000, 0.25);
  CHECK_THAT(u.floor, WithinAbs(0.1, 1e-15));
  CHECK_THAT(u.mass.value, WithinAbs(1 / 0.25 + 1 / 0.13, 1e-12));
  CHECK_THROWS(truncate_alpha(two_atoms(), 1, 0.25));
  CHECK_THROWS(truncate_alpha(two_atoms(), 10, 0.6));
}

TEST_CASE("intensity above a floor") {
  CHECK_THAT(intensity_mass(XiMeasure::lambda_dirac(0.5), 0.1).value, WithinAbs(4.0, 1e-12));
  CHECK(intensity_mass(XiMeasure::lambda_dirac(0.5), 0.6).value == 0.0);
  const auto total = XiMeasure::finite_atomic({{2.5, SimplexPoint({1.0})}, {1.0, SimplexPoint({0.3})}});
  CHECK_THAT(intensity_mass(total, 1.0).value, WithinAbs(2.5, 1e-15));
  CHECK_THAT(intensity_mass(two_atoms(), 0.0).value, WithinAbs(4.0 + 1 / 0.13, 1e-12));
}

TEST_CASE("beta intensities match closed forms") {
  for (double eps : {0.01, 0.1, 0.5}) {
    // density 1: int y^-2 = 1/eps - 1
    CHECK_THAT(intensity_mass(XiMeasure::lambda_beta(1, 1), eps).value, WithinRel(1 / eps - 1, 1e-9));
    // density 3y^2
    CHECK_THAT(intensity_mass(XiMeasure::lambda_beta(3, 1, 2.0), eps).value,
               WithinRel(2.0 * 3 * (1 - eps), 1e-9));
    // density 6y(1-y)
    CHECK_THAT(intensity_mass(XiMeasure::lambda_beta(2, 2), eps).value,
               WithinRel(6 * (-std::log(eps) - 1 + eps), 1e-9));
  }
  CHECK(intensity_mass(XiMeasure::lambda_beta(2, 2), 0.1).mode == EvalMode::quadrature);
  CHECK_THAT(intensity_mass(XiMeasure::lambda_beta(3.5, 1), 0.0).value, WithinRel(3.5 / 1.5, 1e-12));
}

TEST_CASE("infinite activity needs a floor") {
  CHECK_THROWS_AS(intensity_mass(XiMeasure::lambda_beta(2, 2), 0.0), InfiniteIntensity);
  CHECK_THROWS_AS(intensity_mass(XiMeasure::stick_breaking({}), 0.0), InfiniteIntensity);
  CHECK_NOTHROW(intensity_mass(XiMeasure::lambda_beta(3.5, 1), 0.0));
}

TEST_CASE("stick-breaking intensity is a Monte Carlo estimate") {
  const auto m = intensity_mass(XiMeasure::stick_breaking({}), 0.2, {50000, 9});
  CHECK(m.mode == EvalMode::monte_carlo);
  CHECK(m.std_error > 0.0);
  CHECK(m.value > 0.0);
}

TEST_CASE("intensity is non-increasing in the floor") {
  const XiMeasure families[] = {two_atoms(), XiMeasure::lambda_beta(2, 2), XiMeasure::lambda_beta(0.5, 1.5),
                                XiMeasure::stick_breaking({})};
  for (const auto& xi : families) {
    double previous = INFINITY;
    for (double f = 0.05; f <= 1.0; f += 0.05) {
      const double v = intensity_mass(xi, f, {20000, 4}).value;
      CHECK(v <= previous + 1e-12);
      previous = v;
    }
  }
}

TEST_CASE("truncated mass is bounded by total mass times N^(2 alpha)") {
  const XiMeasure families[] = {two_atoms(3.0, 0.5), XiMeasure::lambda_dirac(0.2, 2.0),
                                XiMeasure::lambda_beta(0.5, 1.0), XiMeasure::stick_breaking({}, 1.5)};
  for (const auto& xi : families)
    for (int n : {4, 16, 100})
      for (double alpha : {0.1, 0.25, 0.45}) {
        const auto t = truncate_alpha(xi, n, alpha, {20000, 5});
        CHECK(t.mass.value <= xi.total_mass() * std::pow(n, 2 * alpha) + 1e-9);
      }
}

TEST_CASE("small-mass gap examples") {
  CHECK(small_mass_gap(XiMeasure::lambda_dirac(0.5), 16, 0.5, 0.5).value == 0.0);
  CHECK_THAT(small_mass_gap(XiMeasure::lambda_dirac(0.1), 16, 0.5, 0.5).value, WithinAbs(0.25, 1e-15));
  CHECK(small_mass_gap(XiMeasure::lambda_dirac(0.1), 16, 0.5, 0.0).value == 0.0);
  CHECK(small_mass_gap(XiMeasure::lambda_dirac(0.1), 16, 0.5, 1.0).value == 0.0);
}

TEST_CASE("small-mass gap equals the enumerated second-moment difference") {
  const std::vector<std::vector<oracle::PointMass>> cases = {
      {{1.0, {0.5}}, {1.0, {0.3, 0.2}}},
      {{0.7, {0.05, 0.04, 0.01}}, {2.0, {0.4}}, {0.3, {0.08, 0.08}}},
      {{1.5, {0.2, 0.1, 0.1, 0.05}}, {0.5, {0.09}}}};
  for (const auto& atoms : cases) {
    std::vector<Atom> lib;
    for (const auto& a : atoms) lib.push_back({a.weight, SimplexPoint(a.z)});
    const auto xi = XiMeasure::finite_atomic(lib);
    for (int n : {16, 100, 10000})
      for (double x : {0.1, 0.5, 0.8}) {
        const double floor = std::pow(double(n), -0.25);
        CHECK_THAT(small_mass_gap(xi, n, 0.25, x).value,
                   WithinAbs(oracle::small_jump_lhs(atoms, floor, x), 1e-10));
      }
  }
}

TEST_CASE("admissibility index") {
  CHECK(admissibility_index(SimplexPoint({0.5}), 0.3) == 1);
  CHECK(admissibility_index(SimplexPoint({0.5}), 1e-9) == 1);
  CHECK(admissibility_index(SimplexPoint({0.3, 0.2, 0.1}), 0.4) == 2);
  CHECK(admissibility_index(SimplexPoint({0.3, 0.2, 0.1}), 0.05) == 3);
  const SimplexPoint z({0.25, 0.2, 0.15, 0.1, 0.05, 0.05});
  std::size_t previous = z.size();
  for (double c = 0.01; c < 1.0; c += 0.01) {
    const auto m = admissibility_index(z, c);
    CHECK(m <= previous);
    previous = m;
  }
}

TEST_CASE("admissibility probe reports one row per n") {
  Rng rng(6);
  const std::uint64_t ns[] = {10, 100, 1000};
  const auto rows = admissibility_probe(XiMeasure::stick_breaking({}), ns, 2000, rng);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK_THAT(row.c, WithinRel(1.0 / (double(row.n) * row.n), 1e-12));
    CHECK(row.mean_ratio <= row.max_ratio);
  }
  CHECK(rows[2].mean_ratio < rows[0].mean_ratio);
}

TEST_CASE("jump samplers reproduce the truncated intensity") {
  Rng rng(7);
  SECTION("beta family: fraction of jumps above 0.5") {
    const auto xi = XiMeasure::lambda_beta(2, 2);
    const JumpSampler sampler(xi, 0.05);
    CHECK_THAT(sampler.candidate_rate(), WithinRel(intensity_mass(xi, 0.05).value, 1e-12));
    const int draws = 100000;
    int above = 0;
    for (int i = 0; i < draws; ++i) {
      const auto z = sampler.draw(rng);
      REQUIRE(z);
      REQUIRE(z->largest() >= 0.05);
      above += z->largest() >= 0.5;
    }
    // 6 int_0.5^1 (1-y)/y dy over 6 int_0.05^1 (1-y)/y dy
    const double p = (std::log(2.0) - 0.5) / (-std::log(0.05) - 0.95);
    CHECK(std::abs(double(above) / draws - p) < 4 * std::sqrt(p * (1 - p) / draws));
  }
  SECTION("stick-breaking: accepted rate matches the intensity") {
    const auto xi = XiMeasure::stick_breaking({});
    const JumpSampler sampler(xi, 0.3);
    const int draws = 200000;
    int accepted = 0;
    for (int i = 0; i < draws; ++i) {
      const auto z = sampler.draw(rng);
      if (!z) continue;
      ++accepted;
      REQUIRE(z->largest() >= 0.3);
    }
    const auto truth = intensity_mass(xi, 0.3, {400000, 11});
    const double p = truth.value / sampler.candidate_rate();
    const double rate = sampler.candidate_rate() * accepted / draws;
    const double se = sampler.candidate_rate() * std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(rate - truth.value) < 4 * std::hypot(se, truth.std_error));
  }
}
