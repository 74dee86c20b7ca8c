#include "xiwf/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace xiwf {

namespace {
constexpr double kNormTol = 1e-12;
// Hard cap on series length for geometric laws with s close to one.
constexpr std::uint64_t kMaxTerms = 100000000;
}  // namespace

SelectionLaw SelectionLaw::neutral() { return explicit_pmf({1.0}); }

SelectionLaw SelectionLaw::geometric(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("geometric law needs 0 < s < 1");
  return SelectionLaw(Geometric{s});
}

SelectionLaw SelectionLaw::explicit_pmf(std::vector<double> pmf, double at_infinity) {
  if (pmf.empty() && at_infinity == 0.0) throw std::invalid_argument("empty parent-number law");
  if (!(at_infinity >= 0.0 && at_infinity <= 1.0))
    throw std::invalid_argument("mass at infinity must lie in [0,1]");
  double total = at_infinity;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw std::invalid_argument("pmf entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTol)
    throw std::invalid_argument("parent-number law must sum to one");
  while (!pmf.empty() && pmf.back() == 0.0) pmf.pop_back();
  std::vector<double> cumulative(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), cumulative.begin());
  return SelectionLaw(Explicit{std::move(pmf), at_infinity, std::move(cumulative)});
}

SelectionLaw SelectionLaw::from_branching(double rho, std::vector<double> pi, double pi_inf) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  double total = pi_inf;
  for (double p : pi) {
    if (!(p >= 0.0)) throw std::invalid_argument("pi entries must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > kNormTol) throw std::invalid_argument("pi must sum to one");
  std::vector<double> pmf(pi.size() + 1);
  pmf[0] = 1.0 - rho;
  for (std::size_t i = 0; i < pi.size(); ++i) pmf[i + 1] = rho * pi[i];
  return explicit_pmf(std::move(pmf), rho * pi_inf);
}

SelectionLaw SelectionLaw::offspring_dirac(unsigned k) {
  if (k == 0) throw std::invalid_argument("offspring count must be >= 1");
  std::vector<double> pi(k, 0.0);
  pi[k - 1] = 1.0;
  return offspring(std::move(pi));
}

double SelectionLaw::rho() const {
  if (const auto* g = std::get_if<Geometric>(&repr_)) return g->s;
  const auto& e = std::get<Explicit>(repr_);
  return 1.0 - (e.pmf.empty() ? 0.0 : e.pmf[0]);
}

double SelectionLaw::mass_at_infinity() const {
  if (const auto* e = std::get_if<Explicit>(&repr_)) return e->at_infinity;
  return 0.0;
}

double SelectionLaw::pmf(std::uint64_t k) const {
  if (k == 0) return 0.0;
  if (const auto* g = std::get_if<Geometric>(&repr_))
    return std::pow(g->s, static_cast<double>(k - 1)) * (1.0 - g->s);
  const auto& e = std::get<Explicit>(repr_);
  return k <= e.pmf.size() ? e.pmf[k - 1] : 0.0;
}

double SelectionLaw::tail(std::uint64_t k) const {
  if (k <= 1) return 1.0 - mass_at_infinity();
  if (const auto* g = std::get_if<Geometric>(&repr_))
    return std::pow(g->s, static_cast<double>(k - 1));
  const auto& e = std::get<Explicit>(repr_);
  if (k > e.pmf.size()) return 0.0;
  return std::max(0.0, 1.0 - e.at_infinity - e.cumulative[k - 2]);
}

double SelectionLaw::pi(std::uint64_t i) const {
  const double r = rho();
  return (r == 0.0 || i == 0) ? 0.0 : pmf(i + 1) / r;
}

double SelectionLaw::pi_tail(std::uint64_t i) const {
  const double r = rho();
  if (r == 0.0) return 0.0;
  return tail(i + 1) / r;
}

double SelectionLaw::beta() const {
  if (const auto* g = std::get_if<Geometric>(&repr_)) return 1.0 / (1.0 - g->s);
  const auto& e = std::get<Explicit>(repr_);
  const double r = rho();
  if (r == 0.0) return 0.0;
  if (e.at_infinity > 0.0) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (std::size_t k = 2; k <= e.pmf.size(); ++k)
    mean += static_cast<double>(k - 1) * e.pmf[k - 1];
  return mean / r;
}

bool SelectionLaw::beta_finite() const { return std::isfinite(beta()); }

std::uint64_t SelectionLaw::max_finite_support() const {
  if (std::holds_alternative<Geometric>(repr_)) return 0;
  return std::get<Explicit>(repr_).pmf.size();
}

std::uint64_t SelectionLaw::support_size() const {
  if (std::holds_alternative<Geometric>(repr_)) return 0;
  const auto& e = std::get<Explicit>(repr_);
  std::uint64_t n = e.at_infinity > 0.0 ? 1 : 0;
  for (double p : e.pmf) n += p > 0.0 ? 1 : 0;
  return n;
}

ParentCount SelectionLaw::sample(Rng& rng) const {
  if (const auto* g = std::get_if<Geometric>(&repr_))
    return 1 + std::geometric_distribution<ParentCount>(1.0 - g->s)(rng);
  const auto& e = std::get<Explicit>(repr_);
  const double u = uniform01(rng);
  const auto it = std::upper_bound(e.cumulative.begin(), e.cumulative.end(), u);
  if (it == e.cumulative.end()) {
    // u fell into the atom at infinity or into rounding slack above the
    // last cumulative value.
    if (e.at_infinity > 0.0) return kInfiniteParents;
    return e.pmf.size();
  }
  return static_cast<ParentCount>(it - e.cumulative.begin()) + 1;
}

ParentCount SelectionLaw::sample_offspring(Rng& rng) const {
  const double r = rho();
  if (r == 0.0) throw std::logic_error("offspring law undefined when rho = 0");
  if (const auto* g = std::get_if<Geometric>(&repr_))
    return 1 + std::geometric_distribution<ParentCount>(1.0 - g->s)(rng);
  const auto& e = std::get<Explicit>(repr_);
  const double u = e.pmf[0] + uniform01(rng) * r;
  const auto it = std::upper_bound(e.cumulative.begin() + 1, e.cumulative.end(), u);
  if (it == e.cumulative.end()) {
    if (e.at_infinity > 0.0) return kInfiniteParents;
    return e.pmf.size() - 1;
  }
  return static_cast<ParentCount>(it - e.cumulative.begin());
}

std::string SelectionLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (const auto* g = std::get_if<Geometric>(&repr_)) {
    os << "geometric{s=" << g->s << "}";
  } else {
    const auto& e = std::get<Explicit>(repr_);
    os << "explicit{pmf=[";
    for (std::size_t i = 0; i < e.pmf.size(); ++i) os << (i ? "," : "") << e.pmf[i];
    os << "], inf=" << e.at_infinity << "}";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

double pgf(const SelectionLaw& law, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("pgf argument must lie in [0,1]");
  const std::uint64_t finite = law.max_finite_support();
  double sum = 0.0;
  if (finite > 0) {
    // Horner on sum_k pmf(k) x^k.
    for (std::uint64_t k = finite; k >= 1; --k) sum = (sum + law.pmf(k)) * x;
    return sum;
  }
  double xk = x;
  for (std::uint64_t k = 1; k < kMaxTerms; ++k) {
    sum += law.pmf(k) * xk;
    if (law.tail(k + 1) * xk < kSeriesTail) break;
    xk *= x;
  }
  return sum;
}

double selection_s(const SelectionLaw& law, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("s(x) argument must lie in [0,1]");
  if (!law.beta_finite()) throw std::domain_error("selection function needs finite beta");
  const std::uint64_t finite = law.max_finite_support();
  double sum = 0.0;
  if (finite > 0) {
    for (std::uint64_t k = finite - 1; k >= 1; --k) sum = sum * x + law.pi_tail(k);
    return sum;
  }
  double xk = 1.0;
  for (std::uint64_t k = 1; k < kMaxTerms; ++k) {
    const double t = law.pi_tail(k);
    sum += t * xk;
    // Remaining terms are bounded by t x^k / (1 - ratio) for geometric tails;
    // the tail of E[K*] bounds them in general.
    if (t * xk < kSeriesTail * 1e-2) break;
    xk *= x;
  }
  return sum;
}

double branching_drift(const SelectionLaw& law, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("drift argument must lie in [0,1]");
  if (!law.beta_finite()) throw std::domain_error("branching drift needs finite beta");
  const std::uint64_t finite = law.max_finite_support();
  const std::uint64_t last = finite > 0 ? finite - 1 : kMaxTerms;
  double sum = 0.0;
  double xi1 = x * x;  // x^(i+1)
  for (std::uint64_t i = 1; i <= last; ++i) {
    const double p = law.pi(i);
    sum += p * (xi1 - x);
    if (finite == 0 && law.pi_tail(i + 1) < kSeriesTail * 1e-2) break;
    xi1 *= x;
  }
  return sum;
}

}  // namespace xiwf
