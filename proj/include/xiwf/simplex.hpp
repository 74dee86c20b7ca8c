#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xiwf/random.hpp"

namespace xiwf {

/// Slack allowed on sum(masses) <= 1 for numerically assembled points.
inline constexpr double kSimplexSlack = 1e-12;

/// A point of the ranked infinite simplex with finite support. Entries are
/// strictly positive and non-increasing; the undistributed mass 1 - |z| is
/// kept implicitly as residual().
class SimplexPoint {
 public:
  SimplexPoint() = default;
  /// Sorts decreasingly and drops zeros. Throws std::invalid_argument on
  /// negative entries, entries above 1 or total mass above 1 + slack.
  explicit SimplexPoint(std::vector<double> masses);

  [[nodiscard]] std::span<const double> masses() const { return masses_; }
  [[nodiscard]] std::size_t size() const { return masses_.size(); }
  [[nodiscard]] bool empty() const { return masses_.empty(); }
  [[nodiscard]] double operator[](std::size_t i) const { return masses_[i]; }
  [[nodiscard]] double largest() const { return empty() ? 0.0 : masses_.front(); }
  [[nodiscard]] double total() const { return total_; }
  [[nodiscard]] double residual() const { return 1.0 - total_; }
  [[nodiscard]] double sum_squares() const { return sum_squares_; }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> masses_;
  double total_ = 0.0;
  double sum_squares_ = 0.0;
};

struct Atom {
  double weight;
  SimplexPoint point;
};

/// Law of the i.i.d. stick fractions Y_n in [0,1).
struct StickLaw {
  enum class Kind { uniform, beta } kind = Kind::uniform;
  double a = 1.0;
  double b = 1.0;

  [[nodiscard]] double sample(Rng& rng) const;
};

enum class MeasureFamily { finite_atomic, lambda_dirac, lambda_beta, stick_breaking };

/// Finite measure Xi on the ranked simplex, given parametrically.
/// Xi never charges the zero point; a Kingman component is carried
/// separately as a diffusion coefficient.
class XiMeasure {
 public:
  struct FiniteAtomic {
    std::vector<Atom> atoms;
  };
  struct LambdaDirac {
    double y;
    double total_mass;
  };
  /// Lambda-coalescent measure total_mass * Beta(a, b)(dy) on [0,1].
  struct LambdaBeta {
    double a;
    double b;
    double total_mass;
  };
  /// Ranked stick-breaking points Y_n * prod_{i<n}(1 - Y_i), truncated once
  /// the unbroken stick is shorter than truncation_tol.
  struct StickBreaking {
    StickLaw law;
    double total_mass;
    double truncation_tol;
  };
  using Parameters = std::variant<FiniteAtomic, LambdaDirac, LambdaBeta, StickBreaking>;

  static XiMeasure finite_atomic(std::vector<Atom> atoms);
  static XiMeasure lambda_dirac(double y, double total_mass = 1.0);
  static XiMeasure lambda_beta(double a, double b, double total_mass = 1.0);
  static XiMeasure stick_breaking(StickLaw law, double total_mass = 1.0,
                                  double truncation_tol = 1e-10);

  [[nodiscard]] MeasureFamily family() const;
  [[nodiscard]] const Parameters& parameters() const { return params_; }
  [[nodiscard]] double total_mass() const;
  /// True for finitely many atoms (finite_atomic, lambda_dirac).
  [[nodiscard]] bool is_atomic() const;
  /// Atoms of an atomic family; throws std::logic_error otherwise.
  [[nodiscard]] std::vector<Atom> atoms() const;
  /// Largest number of non-zero entries among the atoms (atomic families).
  [[nodiscard]] std::size_t max_support() const;
  [[nodiscard]] XiMeasure scaled(double factor) const;
  /// Same shape with total mass one, i.e. the probability law Xi-hat.
  [[nodiscard]] XiMeasure normalized() const { return scaled(1.0 / total_mass()); }
  [[nodiscard]] std::string describe() const;

 private:
  explicit XiMeasure(Parameters p) : params_(std::move(p)) {}
  Parameters params_;
};

/// Draws Z from the normalised measure Xi / Xi(simplex).
SimplexPoint sample_point(const XiMeasure& measure, Rng& rng);

enum class EvalMode { exact, quadrature, monte_carlo };
const char* to_string(EvalMode mode);

/// Result of an integral against Xi; std_error is zero unless mode is
/// monte_carlo.
struct MeasureIntegral {
  double value = 0.0;
  double std_error = 0.0;
  EvalMode mode = EvalMode::exact;
};

struct MonteCarloOptions {
  std::uint64_t samples = 200000;
  std::uint64_t seed = 0x5eedULL;
};

/// Total rate of jumps with largest fragment at least `floor`:
/// integral of 1{z_1 >= floor} Xi(dz) / sum_i z_i^2.
/// floor = 0 is allowed only for finite-activity families and throws
/// InfiniteIntensity otherwise.
MeasureIntegral intensity_mass(const XiMeasure& measure, double floor,
                               const MonteCarloOptions& mc = {});

/// Xi({z : z_1 < floor}).
MeasureIntegral mass_below(const XiMeasure& measure, double floor,
                           const MonteCarloOptions& mc = {});

/// The measure 1{z_1 >= N^-alpha} Xi(dz) / sum z_i^2 summarised by its floor
/// and total mass.
struct TruncatedIntensity {
  XiMeasure base;
  double floor;
  MeasureIntegral mass;
};

TruncatedIntensity truncate_alpha(const XiMeasure& measure, int population,
                                  double alpha, const MonteCarloOptions& mc = {});

/// x(1-x) * Xi({z_1 < N^-alpha}): the second-moment mass lost by the cut.
MeasureIntegral small_mass_gap(const XiMeasure& measure, int population,
                               double alpha, double x,
                               const MonteCarloOptions& mc = {});

/// m(z, c) = inf{k : z_1 + ... + z_k > |z|(1 - c)}.
std::size_t admissibility_index(const SimplexPoint& z, double c);

struct AdmissibilityRow {
  std::uint64_t n;
  double c;
  double mean_ratio;  // mean of m(Z, c_n) / sqrt(n)
  double max_ratio;
};

/// Empirical diagnostic of admissibility: samples Z from Xi-hat and tabulates
/// m(Z, c_n)/sqrt(n) along `ns`. Default sequence c_n = n^-2. This is
/// evidence, not a proof.
std::vector<AdmissibilityRow> admissibility_probe(
    const XiMeasure& measure, std::span<const std::uint64_t> ns,
    std::uint64_t samples, Rng& rng,
    const std::function<double(std::uint64_t)>& c_sequence = {});

/// Poisson jump source for the intensity 1{z_1 >= floor} Xi(dz)/sum z_i^2.
/// Candidates arrive at candidate_rate(); draw() returns the jump point or
/// nullopt for a thinned candidate. Atomic and Beta families never thin;
/// stick-breaking thins against the bound Xi(simplex)/floor^2.
class JumpSampler {
 public:
  JumpSampler(const XiMeasure& measure, double floor);

  [[nodiscard]] double candidate_rate() const { return rate_; }
  [[nodiscard]] double floor() const { return floor_; }
  std::optional<SimplexPoint> draw(Rng& rng) const;

 private:
  struct BetaPiece {
    double lo, hi;
    bool power_proposal;  // y^(a-3) proposal, else (1-y)^(b-1)
    double accept_scale;
  };

  XiMeasure measure_;
  double floor_;
  double rate_ = 0.0;
  // atomic
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  // lambda_beta
  std::vector<BetaPiece> pieces_;
  std::vector<double> piece_cumulative_;
};

}  // namespace xiwf
