#include "xiwf/discrete.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "xiwf/errors.hpp"
#include "xiwf/parallel.hpp"

namespace xiwf {

namespace {

constexpr double kPickTail = 1e-17;

// Streams for replicate-parallel estimators.
enum Stream : std::uint64_t {
  kStreamSampling = 11,
  kStreamForward = 12,
  kStreamBackward = 13,
};

std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> out(n + 1, 0.0);
  if (p <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (p >= 1.0) {
    out[n] = 1.0;
    return out;
  }
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lgn = std::lgamma(n + 1.0);
  for (int j = 0; j <= n; ++j) {
    out[j] = std::exp(lgn - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * lp +
                      (n - j) * lq);
  }
  return out;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void require_state(const DiscreteParams& p, int type0) {
  if (type0 < 0 || type0 > p.population)
    throw std::invalid_argument("type-0 count must lie in [0, N]");
}

void require_lineages(const DiscreteParams& p, int n) {
  if (n < 1 || n > p.population) throw std::invalid_argument("sample size must lie in [1, N]");
}

// Law of the finite part of K, cut where the tail drops below kPickTail.
std::vector<double> finite_parent_pmf(const SelectionLaw& q) {
  std::vector<double> pmf(1, 0.0);  // index = K
  const std::uint64_t finite = q.max_finite_support();
  if (finite > 0) {
    for (std::uint64_t k = 1; k <= finite; ++k) pmf.push_back(q.pmf(k));
    return pmf;
  }
  for (std::uint64_t k = 1;; ++k) {
    pmf.push_back(q.pmf(k));
    if (q.tail(k + 1) < kPickTail * 1e-2) break;
  }
  return pmf;
}

struct PickLaw {
  std::vector<double> finite;  // P(total picks = T)
  double infinite = 0.0;       // P(some lineage picks infinitely often)
};

// Total number of picks made by n lineages.
PickLaw total_picks(const SelectionLaw& q, int n) {
  const std::vector<double> k = finite_parent_pmf(q);
  PickLaw law;
  law.finite = {1.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(law.finite.size() + k.size() - 1, 0.0);
    for (std::size_t a = 0; a < law.finite.size(); ++a) {
      if (law.finite[a] == 0.0) continue;
      for (std::size_t b = 1; b < k.size(); ++b) next[a + b] += law.finite[a] * k[b];
    }
    while (next.size() > 1 && next.back() < kPickTail * 1e-4) next.pop_back();
    law.finite = std::move(next);
  }
  law.infinite = 1.0 - std::pow(1.0 - q.mass_at_infinity(), n);
  return law;
}

// occupancy[m][d]: P(d distinct labels among m uniform picks from N).
std::vector<std::vector<double>> occupancy_table(int population, std::size_t max_picks) {
  std::vector<std::vector<double>> occ(max_picks + 1, std::vector<double>(population + 1, 0.0));
  occ[0][0] = 1.0;
  const double nd = population;
  for (std::size_t m = 1; m <= max_picks; ++m) {
    for (int d = 0; d <= population; ++d) {
      const double p = occ[m - 1][d];
      if (p == 0.0) continue;
      occ[m][d] += p * d / nd;
      if (d < population) occ[m][d + 1] += p * (nd - d) / nd;
    }
  }
  return occ;
}

// effective[t][m]: P(m distinct label draws | t picks under event point z),
// where each pick joins fragment i with prob z_i (sharing one label) or draws
// its own label with prob 1 - |z|.
std::vector<std::vector<double>> effective_picks(const SimplexPoint& z, std::size_t max_picks) {
  const std::size_t groups = z.size();
  if (groups > kMaxEnumeratedSupport) throw BudgetExceeded("event point support above 12");
  const std::size_t masks = std::size_t{1} << groups;
  // state[m * masks + mask]
  std::vector<double> state((max_picks + 1) * masks, 0.0), next(state.size());
  state[0] = 1.0;
  std::vector<std::vector<double>> out(max_picks + 1, std::vector<double>(max_picks + 1, 0.0));
  out[0][0] = 1.0;
  const double residual = std::max(0.0, z.residual());
  for (std::size_t t = 1; t <= max_picks; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t m = 0; m < t; ++m) {
      for (std::size_t mask = 0; mask < masks; ++mask) {
        const double p = state[m * masks + mask];
        if (p == 0.0) continue;
        next[(m + 1) * masks + mask] += p * residual;
        for (std::size_t i = 0; i < groups; ++i) {
          const std::size_t bit = std::size_t{1} << i;
          if (mask & bit)
            next[m * masks + mask] += p * z[i];
          else
            next[(m + 1) * masks + (mask | bit)] += p * z[i];
        }
      }
    }
    std::swap(state, next);
    for (std::size_t m = 0; m <= t; ++m)
      for (std::size_t mask = 0; mask < masks; ++mask) out[t][m] += state[m * masks + mask];
  }
  return out;
}

// distinct[t][d] by brute-force enumeration of labels: every pick's label and
// every fragment's shared label is tracked explicitly.
std::vector<std::vector<double>> enumerate_labels(int population, const SimplexPoint* z,
                                                  std::size_t max_picks) {
  const std::size_t groups = z ? z->size() : 0;
  constexpr unsigned kLabelBits = 3;  // labels 1..6, 0 = not yet drawn
  const unsigned n = static_cast<unsigned>(population);
  const std::size_t states = std::size_t{1} << (n + kLabelBits * groups);
  std::vector<double> state(states, 0.0), next(states);
  state[0] = 1.0;
  const double residual = z ? std::max(0.0, z->residual()) : 1.0;
  const double per_label = 1.0 / population;

  auto label_of = [&](std::size_t s, std::size_t g) -> unsigned {
    return static_cast<unsigned>((s >> (n + kLabelBits * g)) & 7u);
  };
  auto with_label = [&](std::size_t s, std::size_t g, unsigned l) {
    return s | (static_cast<std::size_t>(l) << (n + kLabelBits * g));
  };
  const std::size_t mask_bits = (std::size_t{1} << n) - 1;

  std::vector<std::vector<double>> out(max_picks + 1, std::vector<double>(population + 1, 0.0));
  out[0][0] = 1.0;
  for (std::size_t t = 1; t <= max_picks; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < states; ++s) {
      const double p = state[s];
      if (p == 0.0) continue;
      for (unsigned l = 1; l <= n; ++l)
        next[s | (std::size_t{1} << (l - 1))] += p * residual * per_label;
      for (std::size_t g = 0; g < groups; ++g) {
        const double zg = (*z)[g];
        const unsigned current = label_of(s, g);
        if (current != 0) {
          next[s] += p * zg;
          continue;
        }
        for (unsigned l = 1; l <= n; ++l)
          next[with_label(s, g, l) | (std::size_t{1} << (l - 1))] += p * zg * per_label;
      }
    }
    std::swap(state, next);
    for (std::size_t s = 0; s < states; ++s)
      if (state[s] != 0.0) out[t][std::popcount(s & mask_bits)] += state[s];
  }
  return out;
}

void require_atomic_budget(const DiscreteParams& p) {
  if (p.gamma == 0.0) return;
  if (!p.xi_hat.is_atomic())
    throw BudgetExceeded("exact evaluation needs an atomic event measure; use Monte Carlo");
  if (p.xi_hat.max_support() > kMaxEnumeratedSupport)
    throw BudgetExceeded("event point support above 12; use Monte Carlo");
}

// Sums f(y, prob) over the event atoms and Bernoulli configurations.
template <class F>
void for_each_event_outcome(const XiMeasure& xi_hat, double x, F&& f) {
  for (const auto& atom : xi_hat.atoms()) {
    const auto& z = atom.point;
    const std::size_t m = z.size();
    const double base = x * z.residual();
    for (std::size_t b = 0; b < (std::size_t{1} << m); ++b) {
      double y = base;
      double prob = atom.weight;
      for (std::size_t i = 0; i < m; ++i) {
        if (b & (std::size_t{1} << i)) {
          y += z[i];
          prob *= x;
        } else {
          prob *= 1.0 - x;
        }
      }
      if (prob != 0.0) f(std::clamp(y, 0.0, 1.0), prob);
    }
  }
}

Eigen::RowVectorXd propagate(const Eigen::MatrixXd& kernel, Eigen::Index start, int generations) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(kernel.rows());
  row(start) = 1.0;
  for (int g = 0; g < generations; ++g) row = row * kernel;
  return row;
}

}  // namespace

// ---------------------------------------------------------------------------

DiscreteParams::DiscreteParams(int population_, double gamma_, SelectionLaw q_,
                               const XiMeasure& xi)
    : population(population_), gamma(gamma_), q(std::move(q_)), xi_hat(xi.normalized()) {
  if (population < 2) throw std::invalid_argument("population size must be >= 2");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0,1]");
}

double sample_y(double x, const SimplexPoint& z, Rng& rng) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  double y = x * z.residual();
  for (double zi : z.masses())
    if (bernoulli(rng, x)) y += zi;
  return std::clamp(y, 0.0, 1.0);
}

int forward_step(const DiscreteParams& params, int type0, Rng& rng) {
  require_state(params, type0);
  const int n = params.population;
  double x = static_cast<double>(type0) / n;
  if (params.gamma > 0.0 && bernoulli(rng, params.gamma)) {
    x = sample_y(x, sample_point(params.xi_hat, rng), rng);
  }
  const double p = std::clamp(pgf(params.q, x), 0.0, 1.0);
  return std::binomial_distribution<int>(n, p)(rng);
}

int ancestral_step(const DiscreteParams& params, int lineages, Rng& rng) {
  require_lineages(params, lineages);
  const int n = params.population;
  std::uint64_t picks = 0;
  for (int i = 0; i < lineages; ++i) {
    const ParentCount k = params.q.sample(rng);
    if (k == kInfiniteParents) return n;
    picks += k;
  }
  std::uint64_t draws = picks;  // picks with their own uniform label
  if (params.gamma > 0.0 && bernoulli(rng, params.gamma)) {
    const SimplexPoint z = sample_point(params.xi_hat, rng);
    const std::uint64_t residual =
        std::binomial_distribution<std::uint64_t>(picks, std::clamp(z.residual(), 0.0, 1.0))(rng);
    std::uint64_t left = picks - residual;
    double mass_left = z.total();
    std::uint64_t groups_hit = 0;
    for (std::size_t i = 0; i < z.size() && left > 0; ++i) {
      const double p = i + 1 == z.size() ? 1.0 : std::clamp(z[i] / mass_left, 0.0, 1.0);
      const std::uint64_t in_group = std::binomial_distribution<std::uint64_t>(left, p)(rng);
      if (in_group > 0) ++groups_hit;
      left -= in_group;
      mass_left -= z[i];
    }
    draws = residual + groups_hit;
  }
  // Occupancy: the next draw hits a new label with probability (N - d)/N.
  int distinct = 0;
  for (std::uint64_t i = 0; i < draws && distinct < n; ++i)
    if (bernoulli(rng, static_cast<double>(n - distinct) / n)) ++distinct;
  return distinct;
}

std::vector<int> forward_trajectory(const DiscreteParams& params, int type0, int generations,
                                    Rng& rng) {
  std::vector<int> path{type0};
  for (int g = 0; g < generations; ++g) path.push_back(forward_step(params, path.back(), rng));
  return path;
}

std::vector<int> ancestral_trajectory(const DiscreteParams& params, int lineages,
                                      int generations, Rng& rng) {
  std::vector<int> path{lineages};
  for (int g = 0; g < generations; ++g) path.push_back(ancestral_step(params, path.back(), rng));
  return path;
}

// ---------------------------------------------------------------------------

double sampling_probability_exact(const DiscreteParams& params, double x, int n) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  const double plain = std::pow(pgf(params.q, x), n);
  if (params.gamma == 0.0) return plain;
  require_atomic_budget(params);
  double nu = 0.0;
  for_each_event_outcome(params.xi_hat, x,
                         [&](double y, double prob) { nu += prob * std::pow(pgf(params.q, y), n); });
  return (1.0 - params.gamma) * plain + params.gamma * nu;
}

McEstimate sampling_probability(const DiscreteParams& params, double x, int n,
                                const SamplingMode& mode) {
  if (mode.kind == SamplingMode::Kind::exact)
    return McEstimate::exact(sampling_probability_exact(params, x, n));
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  return parallel_estimate(mode.replicates, mode.seed, kStreamSampling, [&](Rng& rng) {
    double y = x;
    if (params.gamma > 0.0 && bernoulli(rng, params.gamma))
      y = sample_y(x, sample_point(params.xi_hat, rng), rng);
    return std::pow(pgf(params.q, y), n);
  });
}

Eigen::MatrixXd forward_matrix(const DiscreteParams& params) {
  require_atomic_budget(params);
  const int n = params.population;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const auto plain = binomial_pmf(n, pgf(params.q, x));
    for (int j = 0; j <= n; ++j) m(i, j) += (1.0 - params.gamma) * plain[j];
    if (params.gamma == 0.0) continue;
    for_each_event_outcome(params.xi_hat, x, [&](double y, double prob) {
      const auto mixed = binomial_pmf(n, pgf(params.q, y));
      for (int j = 0; j <= n; ++j) m(i, j) += params.gamma * prob * mixed[j];
    });
  }
  return m;
}

Eigen::MatrixXd ancestral_matrix(const DiscreteParams& params) {
  require_atomic_budget(params);
  const int n = params.population;
  std::vector<PickLaw> picks;
  std::size_t max_picks = 0;
  for (int k = 1; k <= n; ++k) {
    picks.push_back(total_picks(params.q, k));
    max_picks = std::max(max_picks, picks.back().finite.size() - 1);
  }
  const auto occ = occupancy_table(n, max_picks);
  std::vector<std::pair<double, std::vector<std::vector<double>>>> events;
  if (params.gamma > 0.0)
    for (const auto& atom : params.xi_hat.atoms())
      events.emplace_back(atom.weight, effective_picks(atom.point, max_picks));

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    const PickLaw& law = picks[k - 1];
    for (std::size_t t = 1; t < law.finite.size(); ++t) {
      const double pt = law.finite[t];
      if (pt == 0.0) continue;
      for (int d = 1; d <= n; ++d) m(k - 1, d - 1) += pt * (1.0 - params.gamma) * occ[t][d];
      for (const auto& [weight, eff] : events) {
        for (std::size_t e = 1; e <= t; ++e) {
          const double pe = eff[t][e];
          if (pe == 0.0) continue;
          for (int d = 1; d <= n; ++d)
            m(k - 1, d - 1) += pt * params.gamma * weight * pe * occ[e][d];
        }
      }
    }
    m(k - 1, n - 1) += law.infinite;
  }
  return m;
}

TransitionMatrices exact_transition_matrices(const DiscreteParams& params) {
  const int n = params.population;
  if (n > 6) throw BudgetExceeded("exact enumeration needs N <= 6");
  if (params.q.max_finite_support() > 0 && params.q.support_size() - (params.q.mass_at_infinity() > 0 ? 1 : 0) > 4)
    throw BudgetExceeded("exact enumeration needs Q with at most 4 support points");
  if (params.gamma > 0.0) {
    if (!params.xi_hat.is_atomic()) throw BudgetExceeded("exact enumeration needs atomic Xi");
    const auto atoms = params.xi_hat.atoms();
    if (atoms.size() > 3 || params.xi_hat.max_support() > 3)
      throw BudgetExceeded("exact enumeration needs at most 3 atoms with at most 3 fragments");
  }

  TransitionMatrices out;
  out.forward = forward_matrix(params);

  std::vector<PickLaw> picks;
  std::size_t max_picks = 0;
  for (int k = 1; k <= n; ++k) {
    picks.push_back(total_picks(params.q, k));
    max_picks = std::max(max_picks, picks.back().finite.size() - 1);
  }
  const auto uniform = enumerate_labels(n, nullptr, max_picks);
  std::vector<std::pair<double, std::vector<std::vector<double>>>> events;
  if (params.gamma > 0.0)
    for (const auto& atom : params.xi_hat.atoms())
      events.emplace_back(atom.weight, enumerate_labels(n, &atom.point, max_picks));

  out.ancestral = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    const PickLaw& law = picks[k - 1];
    for (std::size_t t = 1; t < law.finite.size(); ++t) {
      const double pt = law.finite[t];
      for (int d = 1; d <= n; ++d) {
        double p = (1.0 - params.gamma) * uniform[t][d];
        for (const auto& [weight, table] : events) p += params.gamma * weight * table[t][d];
        out.ancestral(k - 1, d - 1) += pt * p;
      }
    }
    out.ancestral(k - 1, n - 1) += law.infinite;
  }
  return out;
}

// ---------------------------------------------------------------------------

DualityReport sampling_duality_check(const DiscreteParams& params, int type0, int n,
                                     int generations, const SamplingMode& mode) {
  require_state(params, type0);
  require_lineages(params, n);
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  const int big_n = params.population;
  const double x = static_cast<double>(type0) / big_n;
  DualityReport report;

  if (mode.kind == SamplingMode::Kind::exact) {
    const TransitionMatrices mats = exact_transition_matrices(params);
    Eigen::VectorXd s_forward(big_n + 1);
    for (int j = 0; j <= big_n; ++j)
      s_forward(j) = sampling_probability_exact(params, static_cast<double>(j) / big_n, n);
    Eigen::VectorXd s_backward(big_n);
    for (int d = 1; d <= big_n; ++d) s_backward(d - 1) = sampling_probability_exact(params, x, d);
    report.lhs = propagate(mats.forward, type0, generations).dot(s_forward);
    report.rhs = propagate(mats.ancestral, n - 1, generations).dot(s_backward);
    report.gap = std::abs(report.lhs - report.rhs);
    report.tolerance = 1e-10;
    report.exact = true;
  } else {
    const McEstimate lhs =
        parallel_estimate(mode.replicates, mode.seed, kStreamForward, [&](Rng& rng) {
          int state = type0;
          for (int g = 0; g < generations; ++g) state = forward_step(params, state, rng);
          return sampling_probability_exact(params, static_cast<double>(state) / big_n, n);
        });
    const McEstimate rhs =
        parallel_estimate(mode.replicates, mode.seed, kStreamBackward, [&](Rng& rng) {
          int state = n;
          for (int g = 0; g < generations; ++g) state = ancestral_step(params, state, rng);
          return sampling_probability_exact(params, x, state);
        });
    report.lhs = lhs.mean();
    report.rhs = rhs.mean();
    report.lhs_se = lhs.std_error();
    report.rhs_se = rhs.std_error();
    report.gap = std::abs(report.lhs - report.rhs);
    report.tolerance = 3.0 * std::hypot(report.lhs_se, report.rhs_se);
    report.exact = false;
  }
  report.pass = report.gap <= report.tolerance;
  return report;
}

double moment_gap_exact(const DiscreteParams& params, int type0, int n, int generations) {
  require_state(params, type0);
  require_lineages(params, n);
  const int big_n = params.population;
  const double x = static_cast<double>(type0) / big_n;
  Eigen::VectorXd moment(big_n + 1);
  for (int j = 0; j <= big_n; ++j) moment(j) = ipow(static_cast<double>(j) / big_n, n);
  Eigen::VectorXd power(big_n);
  for (int d = 1; d <= big_n; ++d) power(d - 1) = ipow(x, d);
  const double lhs = propagate(forward_matrix(params), type0, generations).dot(moment);
  const double rhs = propagate(ancestral_matrix(params), n - 1, generations).dot(power);
  return lhs - rhs;
}

double MomentGapEstimate::std_error() const {
  return std::hypot(forward.std_error(), backward.std_error());
}

MomentGapEstimate moment_gap_mc(const DiscreteParams& params, int type0, int n, int generations,
                                std::uint64_t replicates, std::uint64_t seed) {
  require_state(params, type0);
  require_lineages(params, n);
  const int big_n = params.population;
  const double x = static_cast<double>(type0) / big_n;
  // S(., n) on the forward grid and S(x, .) on ancestral states, tabulated once.
  std::vector<double> s_forward(big_n + 1), s_backward(big_n + 1, 0.0);
  for (int j = 0; j <= big_n; ++j)
    s_forward[j] = sampling_probability_exact(params, static_cast<double>(j) / big_n, n);
  for (int d = 1; d <= big_n; ++d) s_backward[d] = sampling_probability_exact(params, x, d);

  MomentGapEstimate out;
  out.forward = parallel_estimate(replicates, seed, kStreamForward, [&](Rng& rng) {
    int state = type0;
    for (int g = 0; g < generations; ++g) state = forward_step(params, state, rng);
    return ipow(static_cast<double>(state) / big_n, n) - s_forward[state];
  });
  out.backward = parallel_estimate(replicates, seed, kStreamBackward, [&](Rng& rng) {
    int state = n;
    for (int g = 0; g < generations; ++g) state = ancestral_step(params, state, rng);
    return ipow(x, state) - s_backward[state];
  });
  return out;
}

}  // namespace xiwf
