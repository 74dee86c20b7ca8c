#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "xiwf/selection.hpp"

using namespace xiwf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
std::vector<double> grid(double step = 0.05) {
  std::vector<double> xs;
  for (int i = 0; i * step <= 1.0 + 1e-12; ++i) xs.push_back(std::min(1.0, i * step));
  return xs;
}

std::vector<SelectionLaw> offspring_laws() {
  return {SelectionLaw::offspring_dirac(1), SelectionLaw::offspring_dirac(2),
          SelectionLaw::offspring_dirac(5), SelectionLaw::geometric(0.1),
          SelectionLaw::geometric(0.5), SelectionLaw::offspring({0.2, 0.0, 0.5, 0.3})};
}
}  // namespace

TEST_CASE("pgf normalisation and the infinity convention") {
  for (const auto& law : offspring_laws()) {
    CHECK_THAT(pgf(law, 1.0), WithinAbs(1.0, 1e-12));
    CHECK(pgf(law, 0.0) == 0.0);
  }
  const auto with_inf = SelectionLaw::explicit_pmf({0.5, 0.3}, 0.2);
  CHECK_THAT(pgf(with_inf, 1.0), WithinAbs(0.8, 1e-15));
  CHECK_THAT(pgf(with_inf, 0.5), WithinAbs(0.5 * 0.5 + 0.3 * 0.25, 1e-15));
  CHECK(with_inf.mass_at_infinity() == 0.2);
  CHECK_FALSE(with_inf.beta_finite());
}

TEST_CASE("geometric pgf matches the weak-selection closed form") {
  CHECK_THAT(pgf(SelectionLaw::geometric(0.1), 0.5), WithinAbs(0.5 * 0.9 / 0.95, 1e-13));
  CHECK_THAT(pgf(SelectionLaw::geometric(0.1), 0.5), WithinAbs(0.47368421052631579, 1e-12));
  for (double s : {0.01, 0.1, 0.5}) {
    const auto law = SelectionLaw::geometric(s);
    for (double x : grid(0.01)) {
      CHECK_THAT(pgf(law, x), WithinAbs(x * (1 - s) / (1 - x * s), 1e-12));
      CHECK_THAT(pgf(law, x), WithinAbs(x * (1 - s) / (1 - x + x * (1 - s)), 1e-12));
    }
  }
}

TEST_CASE("geometric branching data") {
  const auto law = SelectionLaw::geometric(0.1);
  CHECK_THAT(law.rho(), WithinAbs(0.1, 1e-15));
  CHECK_THAT(law.tail(2), WithinAbs(0.1, 1e-15));
  CHECK_THAT(law.pmf(1), WithinAbs(0.9, 1e-15));
  for (int i = 1; i <= 10; ++i) CHECK_THAT(law.pi(i), WithinRel(std::pow(0.1, i - 1) * 0.9, 1e-12));
  CHECK_THAT(law.beta(), WithinRel(1 / 0.9, 1e-12));
  CHECK(law.max_finite_support() == 0);
  CHECK_THAT(SelectionLaw::geometric(1e-6).pmf(1), WithinAbs(1.0, 1e-5));
}

TEST_CASE("selection function s(x)") {
  for (double x : grid()) {
    CHECK_THAT(selection_s(SelectionLaw::offspring_dirac(1), x), WithinAbs(1.0, 1e-15));
    CHECK_THAT(selection_s(SelectionLaw::offspring_dirac(2), x), WithinAbs(1.0 + x, 1e-15));
    // geometric: P(K* >= k) = s^(k-1), so s(x) = 1/(1 - s x)
    CHECK_THAT(selection_s(SelectionLaw::geometric(0.5), x), WithinAbs(1.0 / (1 - 0.5 * x), 1e-12));
  }
  for (const auto& law : offspring_laws())
    CHECK_THAT(selection_s(law, 1.0), WithinRel(law.beta(), 1e-12));
  CHECK_THROWS(selection_s(SelectionLaw::from_branching(1.0, {0.5}, 0.5), 0.5));
}

TEST_CASE("branching drift identity") {
  for (const auto& law : offspring_laws())
    for (double x : grid()) {
      double direct = 0.0;
      for (std::uint64_t i = 1; i < 200; ++i) direct += law.pi(i) * (std::pow(x, i + 1.0) - x);
      CHECK_THAT(branching_drift(law, x), WithinAbs(direct, 1e-12));
      CHECK(std::abs(branching_drift(law, x) + x * (1 - x) * selection_s(law, x)) < 1e-12);
      CHECK(branching_drift(law, x) <= 0.0);
    }
  CHECK_THAT(branching_drift(SelectionLaw::offspring_dirac(2), 0.5), WithinAbs(-0.375, 1e-15));
  CHECK_THAT(branching_drift(SelectionLaw::offspring_dirac(1), 0.25), WithinAbs(-0.1875, 1e-15));
  for (const auto& law : offspring_laws()) {
    CHECK(branching_drift(law, 0.0) == 0.0);
    CHECK(std::abs(branching_drift(law, 1.0)) < 1e-15);
    CHECK(branching_drift(law, 0.3) < 0.0);
  }
}

TEST_CASE("pgf is non-decreasing and convex") {
  for (const auto& law : offspring_laws()) {
    const auto xs = grid(0.01);
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
      const double a = pgf(law, xs[i - 1]), b = pgf(law, xs[i]), c = pgf(law, xs[i + 1]);
      CHECK(b >= a);
      CHECK(a + c - 2 * b >= -1e-12);
    }
  }
}

TEST_CASE("law construction validates") {
  CHECK_THROWS(SelectionLaw::geometric(0.0));
  CHECK_THROWS(SelectionLaw::geometric(1.0));
  CHECK_THROWS(SelectionLaw::explicit_pmf({0.5, 0.4}));
  CHECK_THROWS(SelectionLaw::explicit_pmf({-0.1, 1.1}));
  CHECK_THROWS(SelectionLaw::from_branching(1.5, {1.0}));
  const auto law = SelectionLaw::from_branching(0.3, {0.5, 0.5});
  CHECK_THAT(law.pmf(1), WithinAbs(0.7, 1e-15));
  CHECK_THAT(law.pmf(3), WithinAbs(0.15, 1e-15));
  CHECK(law.max_finite_support() == 3);
  CHECK(law.support_size() == 3);
  CHECK(SelectionLaw::neutral().rho() == 0.0);
}

TEST_CASE("sampling frequencies follow the law") {
  Rng rng(11);
  const auto law = SelectionLaw::geometric(0.3);
  const int draws = 200000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < draws; ++i) {
    const auto k = law.sample(rng);
    if (k < counts.size()) ++counts[k];
  }
  for (int k = 1; k < 6; ++k) {
    const double p = law.pmf(k);
    CHECK(std::abs(double(counts[k]) / draws - p) < 4 * std::sqrt(p * (1 - p) / draws));
  }
  const auto off = SelectionLaw::offspring({0.2, 0.0, 0.5, 0.3});
  std::vector<int> oc(5, 0);
  for (int i = 0; i < draws; ++i) ++oc.at(off.sample_offspring(rng));
  CHECK(oc[0] == 0);
  CHECK(oc[2] == 0);
  for (int i : {1, 3, 4}) {
    const double p = off.pi(i);
    CHECK(std::abs(double(oc[i]) / draws - p) < 4 * std::sqrt(p * (1 - p) / draws));
  }
  const auto inf = SelectionLaw::explicit_pmf({0.5}, 0.5);
  int infinite = 0;
  for (int i = 0; i < 10000; ++i) infinite += inf.sample(rng) == kInfiniteParents;
  CHECK(std::abs(infinite / 10000.0 - 0.5) < 4 * 0.005);
}
