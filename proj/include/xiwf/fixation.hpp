#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "xiwf/dual.hpp"
#include "xiwf/mc_estimate.hpp"
#include "xiwf/simplex.hpp"

namespace xiwf {

struct KappaStarReport {
  McEstimate estimate;
  /// Share of the sum carried by the largest 0.1% of draws.
  double tail_share = 0.0;
  /// tail_share > 0.2: the standard error may understate the spread.
  bool possible_infinite_variance = false;
};

/// kappa* = E[1/sum(Z*_i^2) * 1/(W(1-W))] / (2 beta), Z ~ Xi-hat, Z* = Z/|Z|,
/// W = S|Z| with S of density 2s. Throws std::domain_error if a draw lands
/// on W in {0, 1}.
KappaStarReport kappa_star_mc(const XiMeasure& xi, double beta, std::uint64_t replicates,
                              std::uint64_t seed);

/// -log(1-y) / (beta y^2): kappa* for a single Lambda atom at y.
double kappa_star_lambda_dirac(double y, double beta);

/// The recurrence verdict does not settle the fixation question.
class FixationRefused : public std::runtime_error {
 public:
  explicit FixationRefused(const std::string& what) : std::runtime_error(what) {}
};

/// p(x) = 1 - phi_mu(x) from the dual stationary law, with the standard
/// error taken across replicate pgfs (delta method on the occupation
/// measure). An escaping dual gives p = 1 exactly.
McEstimate fixation_probability(double x, const RecurrenceReport& probe,
                                const StationaryEstimate& stationary);

}  // namespace xiwf
