#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "xiwf/config.hpp"
#include "xiwf/experiment.hpp"
#include "xiwf/fixation.hpp"

using namespace xiwf;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const char* kDiscrete = R"(# small enumerable model
model.kind = discrete
model.N = 4
model.gamma = 0.2
model.q.law = geometric
model.q.s = 0.1
model.xi.family = lambda_dirac
model.xi.y = 0.5
run.seed = 17
run.generations = 3
run.x = 0.5
run.n = 2
)";

const char* kLimit = R"(model.kind = limit
model.kappa = 1
model.sigma = 0
model.pi.law = dirac
model.pi.k = 1
model.xi.family = lambda_dirac
model.xi.y = 0.5
run.seed = 5
run.replicates = 2000
run.T = 1
)";

ConfigError config_error(const std::string& text) {
  try {
    build_experiment(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  throw;
}

// Closed form by Simpson's rule on (1/2b) int_0^1 2s / (sy(1 - sy)) ds.
double kappa_star_simpson(double y, double beta) {
  const int m = 2000;
  const double h = 1.0 / m;
  double acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double s = i * h;
    const double f = 2.0 / (y * (1.0 - s * y));
    acc += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return acc * h / 3.0 / (2.0 * beta);
}

}  // namespace

TEST_CASE("McEstimate merging is associative") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(2.0, 3.0);
  std::vector<double> all;
  McEstimate a, b, c;
  for (int i = 0; i < 1000; ++i) all.push_back(normal(rng)), a.add(all.back());
  for (int i = 0; i < 37; ++i) all.push_back(normal(rng)), b.add(all.back());
  for (int i = 0; i < 5000; ++i) all.push_back(normal(rng)), c.add(all.back());

  const auto left = McEstimate::merged(McEstimate::merged(a, b), c);
  const auto right = McEstimate::merged(a, McEstimate::merged(b, c));
  const auto flat = McEstimate::from_samples(all);
  CHECK_THAT(left.mean(), WithinAbs(right.mean(), 1e-12));
  CHECK_THAT(left.std_error(), WithinAbs(right.std_error(), 1e-12));
  CHECK_THAT(left.mean(), WithinAbs(flat.mean(), 1e-12));
  CHECK_THAT(left.std_error(), WithinAbs(flat.std_error(), 1e-12));
  CHECK(left.replicates() == 6037);

  const auto ci = left.interval(0.95);
  CHECK(ci.lower <= left.mean());
  CHECK(ci.upper >= left.mean());
  CHECK_THAT(ci.upper - left.mean(), WithinRel(1.959963984540054 * left.std_error(), 1e-9));
  CHECK(left.std_error() >= 0.0);

  const auto e = McEstimate::exact(1.5);
  CHECK(e.is_exact());
  CHECK(e.std_error() == 0.0);
  CHECK(e.interval().lower == 1.5);
}

TEST_CASE("kappa-star closed form") {
  CHECK_THAT(kappa_star_lambda_dirac(0.5, 1.0), WithinAbs(4.0 * std::numbers::ln2, 1e-15));
  CHECK_THAT(kappa_star_lambda_dirac(0.5, 2.0), WithinAbs(2.0 * std::numbers::ln2, 1e-15));
  for (double y : {0.05, 0.3, 0.5, 0.9})
    CHECK_THAT(kappa_star_lambda_dirac(y, 1.0), WithinRel(kappa_star_simpson(y, 1.0), 1e-8));

  double prev = kappa_star_lambda_dirac(0.01, 1.0);
  for (int i = 2; i < 100; ++i) {
    const double next = kappa_star_lambda_dirac(0.01 * i, 1.0);
    CHECK(next < prev);  // decreasing on (0, ~0.7)
    if (0.01 * i > 0.7) break;
    prev = next;
  }
  CHECK(kappa_star_lambda_dirac(0.99, 1.0) < kappa_star_lambda_dirac(0.999999, 1.0));
  CHECK(kappa_star_lambda_dirac(1.0 - 1e-12, 1.0) > 25.0);
  for (double y : {1e-3, 1e-4, 1e-6})
    CHECK_THAT(kappa_star_lambda_dirac(y, 1.0) * y, WithinAbs(1.0, y));
  CHECK_THROWS(kappa_star_lambda_dirac(0.0, 1.0));
  CHECK_THROWS(kappa_star_lambda_dirac(1.0, 1.0));
}

TEST_CASE("kappa-star Monte Carlo") {
  const auto xi = XiMeasure::lambda_dirac(0.5);
  const auto r = kappa_star_mc(xi, 1.0, 200000, 11);
  CHECK(std::abs(r.estimate.mean() - 4.0 * std::numbers::ln2) < 4.0 * r.estimate.std_error());

  const auto half = kappa_star_mc(xi, 2.0, 200000, 11);
  CHECK_THAT(half.estimate.mean(), WithinRel(0.5 * r.estimate.mean(), 1e-14));
  CHECK_THAT(half.estimate.std_error(), WithinRel(0.5 * r.estimate.std_error(), 1e-12));

  const auto heavier = kappa_star_mc(XiMeasure::lambda_dirac(0.5, 7.0), 1.0, 200000, 11);
  CHECK(heavier.estimate.mean() == r.estimate.mean());

  const auto again = kappa_star_mc(xi, 1.0, 200000, 11);
  CHECK(again.estimate.mean() == r.estimate.mean());

  // Two-fragment atom: (1/2b) E[1/sum Z*^2 * 1/(W(1-W))] with sum Z*^2 = 1/2.
  const auto split = XiMeasure::finite_atomic({{1.0, SimplexPoint({0.25, 0.25})}});
  const auto s = kappa_star_mc(split, 1.0, 200000, 12);
  CHECK(std::abs(s.estimate.mean() - 2.0 * kappa_star_lambda_dirac(0.5, 1.0)) <
        4.0 * s.estimate.std_error());

  CHECK(!r.possible_infinite_variance);
  CHECK(r.tail_share < 0.2);
  // W close to 1 puts almost all weight on a handful of draws.
  const auto edge = kappa_star_mc(XiMeasure::lambda_dirac(1.0 - 1e-12), 1.0, 20000, 13);
  CHECK(edge.possible_infinite_variance);

  CHECK_THROWS(kappa_star_mc(xi, 0.0, 10, 1));
  CHECK_THROWS(kappa_star_mc(xi, 1.0, 0, 1));
}

TEST_CASE("fixation probability from the dual") {
  const LimitParams low(0.5, 0.0, SelectionLaw::offspring_dirac(1), XiMeasure::lambda_dirac(0.5));
  const auto probe = recurrence_probe(low, 1, 200.0, 10000, 50, 3);
  REQUIRE(probe.verdict == RecurrenceVerdict::recurrent_looking);
  const auto mu = stationary_estimate(low, 1, 20.0, 200.0, 50, 4, 10000);
  REQUIRE(mu.escaped == 0);

  CHECK(fixation_probability(0.0, probe, mu).mean() == 1.0);
  CHECK_THAT(fixation_probability(1.0, probe, mu).mean(), WithinAbs(0.0, 1e-12));
  double prev = 1.0;
  for (double x = 0.1; x < 1.0; x += 0.1) {
    const auto p = fixation_probability(x, probe, mu);
    CHECK(p.mean() < prev);
    CHECK(p.std_error() > 0.0);
    CHECK_THAT(p.mean(), WithinAbs(1.0 - mu.pgf(x), 1e-12));
    prev = p.mean();
  }

  RecurrenceReport escaping = probe;
  escaping.verdict = RecurrenceVerdict::escaping;
  for (double x : {0.1, 0.5, 1.0}) {
    const auto p = fixation_probability(x, escaping, mu);
    CHECK(p.mean() == 1.0);
    CHECK(p.is_exact());
  }

  RecurrenceReport unsure = probe;
  unsure.verdict = RecurrenceVerdict::inconclusive;
  CHECK_THROWS_AS(fixation_probability(0.5, unsure, mu), FixationRefused);
  CHECK_THROWS(fixation_probability(1.5, probe, mu));
}

TEST_CASE("config parsing") {
  const auto cfg = ConfigFile::parse("a.b = 1\n# comment\n\n c.d=  two words \n");
  CHECK(cfg.real("a.b") == 1.0);
  CHECK(cfg.text("c.d") == "two words");
  CHECK(cfg.canonical() == "a.b=1\nc.d=two words\n");
  CHECK_THROWS_AS(ConfigFile::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("no equals sign\n"), ConfigError);

  auto full = ConfigFile::parse(kDiscrete);
  const auto exp = build_experiment(full);
  CHECK(exp.is_discrete());
  CHECK(exp.discrete().population == 4);
  CHECK(exp.run.seed == 17);
  CHECK(exp.run.generations == 3);
  CHECK_THROWS_AS(exp.limit(), ConfigError);

  std::string text = kDiscrete;
  CHECK(config_error(text.substr(0, text.find("run.seed"))).key() == "run.seed");
  CHECK_THAT(std::string(config_error(text.substr(0, text.find("run.seed"))).what()),
             ContainsSubstring("run.seed"));
  CHECK(config_error(text + "model.kappa = 1\n").key() == "model.kappa");
  CHECK(config_error(text + "banana.split = 1\n").key() == "banana.split");
  CHECK(config_error(std::string(kDiscrete) + "run.dt = 0.5\n").key() == "run.dt");

  auto bad_n = full;
  bad_n.set("model.N", "1");
  CHECK_THROWS_AS(build_experiment(bad_n), ConfigError);
  auto bad_gamma = full;
  bad_gamma.set("model.gamma", "nope");
  try {
    build_experiment(bad_gamma);
    FAIL("accepted a non-numeric gamma");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "model.gamma");
  }
  auto bad_family = full;
  bad_family.set("model.xi.family", "mystery");
  CHECK_THROWS_AS(build_experiment(bad_family), ConfigError);
  auto no_kind = full;
  no_kind.erase("model.kind");
  CHECK_THROWS_AS(build_experiment(no_kind), ConfigError);
}

TEST_CASE("config hash ignores the seed only") {
  auto a = ConfigFile::parse(kDiscrete);
  auto b = a;
  b.set("run.seed", "99");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.set("run.n", "3");
  CHECK(config_hash(a) != config_hash(b));
  CHECK(build_experiment(a).hash == config_hash(a));
}

TEST_CASE("experiments") {
  const auto discrete = build_experiment(ConfigFile::parse(kDiscrete));
  const auto r = run_experiment("duality-discrete", discrete);
  CHECK(r.exit_code == kExitOk);
  CHECK(r.results["verdict"] == "pass");
  const auto json = nlohmann::json::parse(r.to_json());
  for (const char* key : {"command", "config_hash", "seed", "results", "diagnostics"})
    CHECK(json.contains(key));
  CHECK(json["seed"] == 17);
  CHECK(json["command"] == "duality-discrete");

  const auto f1 = run_experiment("forward", discrete);
  const auto f2 = run_experiment("forward", discrete);
  CHECK(f1.table.to_csv() == f2.table.to_csv());
  CHECK(f1.to_json() == f2.to_json());
  CHECK(f1.table.to_csv().rfind(f1.table.columns.front(), 0) == 0);

  const auto limit = build_experiment(ConfigFile::parse(kLimit));
  const auto k = run_experiment("kappa-star", limit);
  CHECK(k.exit_code == kExitOk);
  const auto s1 = run_experiment("sde", limit);
  const auto s2 = run_experiment("sde", limit);
  CHECK(s1.table.to_csv() == s2.table.to_csv());
  CHECK_THROWS_AS(run_experiment("sde", discrete), ConfigError);
  CHECK_THROWS_AS(run_experiment("forward", limit), ConfigError);
  CHECK_THROWS(run_experiment("no-such-command", discrete));
  CHECK(experiment_commands().size() == 9);
}
