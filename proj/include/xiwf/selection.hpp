#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "xiwf/random.hpp"

namespace xiwf {

/// Number of potential parents K >= 1 (possibly infinite).
using ParentCount = std::uint64_t;
inline constexpr ParentCount kInfiniteParents = std::numeric_limits<ParentCount>::max();

/// Tail mass below which infinite series are cut.
inline constexpr double kSeriesTail = 1e-14;

/// Law Q of the potential-parent number K, together with its branching data
/// rho = P(K > 1) and pi_i = P(K = i + 1 | K > 1).
class SelectionLaw {
 public:
  /// K = 1 almost surely.
  static SelectionLaw neutral();
  /// P(K >= m) = s^(m-1): the classical weak-selection model.
  static SelectionLaw geometric(double s);
  /// pmf[k-1] = P(K = k); at_infinity = P(K = infinity).
  static SelectionLaw explicit_pmf(std::vector<double> pmf, double at_infinity = 0.0);
  /// P(K = 1) = 1 - rho, P(K = 1 + i) = rho * pi[i-1], P(K = inf) = rho * pi_inf.
  static SelectionLaw from_branching(double rho, std::vector<double> pi, double pi_inf = 0.0);
  /// Limit-model offspring law: K* = K - 1 ~ pi with rho = 1.
  static SelectionLaw offspring(std::vector<double> pi) { return from_branching(1.0, std::move(pi)); }
  /// pi = delta_k.
  static SelectionLaw offspring_dirac(unsigned k);

  [[nodiscard]] double rho() const;
  [[nodiscard]] double mass_at_infinity() const;
  /// P(K = k), k >= 1.
  [[nodiscard]] double pmf(std::uint64_t k) const;
  /// P(K >= k), k >= 1 (excluding the atom at infinity).
  [[nodiscard]] double tail(std::uint64_t k) const;
  /// pi_i = P(K* = i), i >= 1.
  [[nodiscard]] double pi(std::uint64_t i) const;
  /// P(K* >= i) among finite values.
  [[nodiscard]] double pi_tail(std::uint64_t i) const;
  /// E[K*]; +infinity when K* has an atom at infinity.
  [[nodiscard]] double beta() const;
  [[nodiscard]] bool beta_finite() const;
  /// Largest finite K with positive mass, or 0 for infinite support.
  [[nodiscard]] std::uint64_t max_finite_support() const;
  /// Number of values of K carrying mass (infinity counted); 0 when infinite.
  [[nodiscard]] std::uint64_t support_size() const;

  ParentCount sample(Rng& rng) const;
  /// Draws K* from pi. Throws when rho = 0.
  ParentCount sample_offspring(Rng& rng) const;

  [[nodiscard]] std::string describe() const;

 private:
  struct Geometric {
    double s;
  };
  struct Explicit {
    std::vector<double> pmf;  // index k-1
    double at_infinity;
    std::vector<double> cumulative;
  };
  explicit SelectionLaw(std::variant<Geometric, Explicit> repr) : repr_(std::move(repr)) {}

  std::variant<Geometric, Explicit> repr_;
};

/// phi_Q(x) = sum_k x^k Q(K = k) with x^inf = 0 on [0,1).
double pgf(const SelectionLaw& law, double x);

/// s(x) = sum_{k>=1} P(K* >= k) x^(k-1). Throws std::domain_error when beta
/// is infinite.
double selection_s(const SelectionLaw& law, double x);

/// sum_i pi_i (x^(i+1) - x), equal to -x(1-x)s(x).
double branching_drift(const SelectionLaw& law, double x);

}  // namespace xiwf
