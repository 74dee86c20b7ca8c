#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "xiwf/mc_estimate.hpp"
#include "xiwf/random.hpp"
#include "xiwf/selection.hpp"
#include "xiwf/simplex.hpp"

namespace xiwf {

/// Parameters shared by the Fleming-Viot jump-diffusion and its
/// branching-coalescing dual.
struct LimitParams {
  /// xi = nullopt switches multiple-merger events off. Throws
  /// std::invalid_argument on kappa < 0, sigma < 0, infinite beta or a floor
  /// outside (0,1].
  LimitParams(double kappa, double sigma, SelectionLaw pi, std::optional<XiMeasure> xi,
              double jump_floor = 1e-3);

  const double kappa;                 // selection pressure
  const double sigma;                 // Kingman / diffusion coefficient
  const SelectionLaw pi;              // offspring law K* (only pi and beta are used)
  const std::optional<XiMeasure> xi;  // event measure, not normalised
  const double jump_floor;            // events with largest fragment below it are dropped

  /// Rate of event candidates above the floor (0 without xi).
  [[nodiscard]] double jump_rate() const { return jumps_ ? jumps_->candidate_rate() : 0.0; }
  /// Event source, null without xi.
  [[nodiscard]] const JumpSampler* jumps() const { return jumps_.get(); }

 private:
  std::shared_ptr<const JumpSampler> jumps_;
};

using DualParams = LimitParams;

struct JumpRecord {
  double time;
  SimplexPoint z;
  double post_state;
};

struct SdePath {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<JumpRecord> jumps;
  std::uint64_t substeps = 0;
  std::uint64_t clamps = 0;
  std::uint64_t jump_count = 0;

  [[nodiscard]] double final_value() const { return values.back(); }
  /// Clamp events per Euler substep; dt is acceptable below 1e-3.
  [[nodiscard]] double clamp_fraction() const {
    return substeps == 0 ? 0.0 : static_cast<double>(clamps) / static_cast<double>(substeps);
  }
};

struct PathOptions {
  /// Record every k-th grid point (0: only the endpoints).
  std::uint64_t record_every = 1;
  bool record_jumps = true;
};

/// Euler-Maruyama between jumps of the frequency X_t of type 0:
///   dX = -kappa s(X) X(1-X) dt + sqrt(sigma X(1-X)) dB + jumps,
/// jumps arriving at rate intensity_mass(xi, floor) with
/// X <- X(1-|z|) + sum z_i B_i, B_i ~ Bernoulli(X-). The state is clamped to
/// [0,1] after each substep and boundary states are absorbing.
SdePath simulate_path(const LimitParams& params, double x0, double horizon, double dt, Rng& rng,
                      const PathOptions& options = {});

/// X_T only; same dynamics as simulate_path without recording.
double simulate_terminal(const LimitParams& params, double x0, double horizon, double dt,
                         Rng& rng);

/// A x^n from the direct generator, with the event integral evaluated by
/// exact Bernoulli enumeration. Needs an atomic xi with support <= 12.
double generator_apply_exact(const LimitParams& params, int n, double x);

/// A x^n from the Bernoulli/size-biased representation (sigma = 0 only).
McEstimate generator_apply_bernoulli(const LimitParams& params, int n, double x,
                                     std::uint64_t replicates, std::uint64_t seed);

/// Mean of f(X_T) over replicate paths with per-replicate streams.
McEstimate terminal_moment(const LimitParams& params, double x0, int power, double horizon,
                           double dt, std::uint64_t replicates, std::uint64_t seed);

}  // namespace xiwf
