#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "xiwf/mc_estimate.hpp"
#include "xiwf/random.hpp"
#include "xiwf/selection.hpp"
#include "xiwf/simplex.hpp"

namespace xiwf {

/// Parameters of the finite-N two-type Wright-Fisher graph with extreme
/// reproductive events. The event measure is stored normalised.
struct DiscreteParams {
  DiscreteParams(int population, double gamma, SelectionLaw q, const XiMeasure& xi);

  int population;  // N
  double gamma;    // probability of an extreme event per generation
  SelectionLaw q;  // potential-parent number law
  XiMeasure xi_hat;
};

/// Y(x) = sum_i B_i z_i + x(1 - |z|) with B_i i.i.d. Bernoulli(x).
double sample_y(double x, const SimplexPoint& z, Rng& rng);

/// One generation of the type-0 count, 0 <= type0 <= N.
int forward_step(const DiscreteParams& params, int type0, Rng& rng);

/// One generation back of the number of potential ancestors of a sample.
int ancestral_step(const DiscreteParams& params, int lineages, Rng& rng);

std::vector<int> forward_trajectory(const DiscreteParams& params, int type0, int generations,
                                    Rng& rng);
std::vector<int> ancestral_trajectory(const DiscreteParams& params, int lineages,
                                      int generations, Rng& rng);

/// Largest support of an event point allowed in exact Bernoulli enumeration.
inline constexpr std::size_t kMaxEnumeratedSupport = 12;

/// S(x, n) = (1-gamma) phi(x)^n + gamma E[phi(Y(x))^n], exactly. The
/// expectation is enumerated over Bernoulli configurations, so Xi-hat must
/// be atomic with support <= 12 unless gamma = 0 (BudgetExceeded otherwise).
double sampling_probability_exact(const DiscreteParams& params, double x, int n);

struct SamplingMode {
  enum class Kind { exact, monte_carlo } kind = Kind::exact;
  std::uint64_t replicates = 100000;
  std::uint64_t seed = 1;

  static SamplingMode exact() { return {}; }
  static SamplingMode monte_carlo(std::uint64_t replicates, std::uint64_t seed) {
    return {Kind::monte_carlo, replicates, seed};
  }
};

/// S(x, n) in either mode; the MC estimate averages phi(Y)^n over draws of
/// the extreme-event point and Bernoullis.
McEstimate sampling_probability(const DiscreteParams& params, double x, int n,
                                const SamplingMode& mode);

struct TransitionMatrices {
  Eigen::MatrixXd forward;    // (N+1)x(N+1), rows/cols indexed by type-0 count
  Eigen::MatrixXd ancestral;  // NxN, entry (n-1, d-1) = P(n -> d)
};

/// Forward kernel from the binomial mixture over event outcomes, any N
/// (atomic Xi-hat with support <= 12 when gamma > 0).
Eigen::MatrixXd forward_matrix(const DiscreteParams& params);

/// Ancestral kernel by factorising each generation into a pick-to-group
/// assignment followed by uniform label occupancy. Works for moderate N.
Eigen::MatrixXd ancestral_matrix(const DiscreteParams& params);

/// Exact oracle for small instances: forward rows from the binomial mixture,
/// ancestral rows by exhaustive enumeration of every pick, group and label
/// configuration. Budget: N <= 6, at most 3 event atoms with at most 3
/// fragments, Q with at most 4 finite support points (infinite-support laws
/// are cut where the total-pick tail falls below 1e-17).
TransitionMatrices exact_transition_matrices(const DiscreteParams& params);

struct DualityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double gap = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool exact = true;
};

/// Compares E_x[S(X_g, n)] with E_n[S(x, D_g)] for x = type0/N. Exact mode
/// uses exact_transition_matrices (tolerance 1e-10), MC mode replicate
/// averages (tolerance 3 combined standard errors).
DualityReport sampling_duality_check(const DiscreteParams& params, int type0, int n,
                                     int generations, const SamplingMode& mode);

/// E_x[(X_g)^n] - E_n[x^(D_g)] computed from forward_matrix and
/// ancestral_matrix.
double moment_gap_exact(const DiscreteParams& params, int type0, int n, int generations);

struct MomentGapEstimate {
  McEstimate forward;   // E_x[X_g^n - S(X_g, n)]
  McEstimate backward;  // E_n[x^D_g - S(x, D_g)]
  [[nodiscard]] double gap() const { return forward.mean() - backward.mean(); }
  [[nodiscard]] double std_error() const;
};

/// Monte Carlo estimate of E_x[(X_g)^n] - E_n[x^(D_g)]. Sampling duality
/// makes E_x[S(X_g,n)] = E_n[S(x,D_g)] exactly, so each side subtracts its
/// S-term as a control variate; the variance then scales with the gap.
MomentGapEstimate moment_gap_mc(const DiscreteParams& params, int type0, int n,
                                int generations, std::uint64_t replicates,
                                std::uint64_t seed);

}  // namespace xiwf
