#include "xiwf/fixation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "xiwf/parallel.hpp"

namespace xiwf {

namespace {
constexpr std::uint64_t kStreamKappa = 41;
constexpr std::uint64_t kChunks = 64;
}  // namespace

KappaStarReport kappa_star_mc(const XiMeasure& xi, double beta, std::uint64_t replicates,
                              std::uint64_t seed) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and positive");
  if (replicates == 0) throw std::invalid_argument("need at least one replicate");
  const XiMeasure shape = xi.normalized();
  std::vector<double> draws(replicates);
  const double outer = 1.0 / (2.0 * beta);
  parallel_for(kChunks, [&](std::size_t c) {
    const std::uint64_t begin = replicates * c / kChunks;
    const std::uint64_t end = replicates * (c + 1) / kChunks;
    Rng rng = make_rng(seed, kStreamKappa, c);
    for (std::uint64_t i = begin; i < end; ++i) {
      const SimplexPoint z = sample_point(shape, rng);
      const double size = z.total();
      const double w = std::sqrt(1.0 - uniform01(rng)) * size;
      if (w <= 0.0 || w >= 1.0) throw std::domain_error("kappa-star draw with W in {0,1}");
      const double concentration = z.sum_squares() / (size * size);
      draws[i] = outer / (concentration * w * (1.0 - w));
    }
  });

  KappaStarReport report;
  std::vector<McEstimate> parts(kChunks);
  for (std::uint64_t c = 0; c < kChunks; ++c) {
    const std::uint64_t begin = replicates * c / kChunks;
    const std::uint64_t end = replicates * (c + 1) / kChunks;
    for (std::uint64_t i = begin; i < end; ++i) parts[c].add(draws[i]);
    report.estimate.merge(parts[c]);
  }
  const double total = std::accumulate(draws.begin(), draws.end(), 0.0);
  const std::size_t top = std::max<std::size_t>(1, draws.size() / 1000);
  std::nth_element(draws.begin(), draws.begin() + top, draws.end(), std::greater<>());
  const double tail = std::accumulate(draws.begin(), draws.begin() + top, 0.0);
  report.tail_share = total > 0.0 ? tail / total : 0.0;
  report.possible_infinite_variance = report.tail_share > 0.2;
  return report;
}

double kappa_star_lambda_dirac(double y, double beta) {
  if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("y must lie in (0,1)");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  return -std::log1p(-y) / (beta * y * y);
}

McEstimate fixation_probability(double x, const RecurrenceReport& probe,
                                const StationaryEstimate& stationary) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  switch (probe.verdict) {
    case RecurrenceVerdict::escaping:
      return McEstimate::exact(1.0);
    case RecurrenceVerdict::inconclusive:
      throw FixationRefused("recurrence verdict inconclusive: escape fraction " +
                            std::to_string(probe.escape_fraction) + ", mean returns to 1 " +
                            std::to_string(probe.mean_returns));
    case RecurrenceVerdict::recurrent_looking:
      break;
  }
  if (stationary.escaped > 0)
    throw FixationRefused("stationary estimate has escaped replicates");
  if (stationary.per_replicate.empty()) throw FixationRefused("stationary estimate is empty");
  McEstimate out;
  for (const auto& occ : stationary.per_replicate) {
    double s = 0.0;
    for (std::size_t m = occ.size(); m-- > 1;) s = (s + occ[m]) * x;
    out.add(1.0 - s);
  }
  return out;
}

}  // namespace xiwf
