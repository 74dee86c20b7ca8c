#include "xiwf/dual.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "xiwf/errors.hpp"
#include "xiwf/parallel.hpp"

namespace xiwf {

namespace {

enum Stream : std::uint64_t { kStreamStationary = 31, kStreamRecurrence = 32, kStreamMoment = 33 };

double ipow(double x, std::uint64_t n) {
  double r = 1.0;
  for (std::uint64_t i = 0; i < n; ++i) r *= x;
  return r;
}

struct Merge {
  std::uint64_t state;
  std::uint64_t merged_groups;
};

// Lineages join fragment i w.p. z_i or stay alone; each occupied fragment
// becomes one lineage.
Merge merge_lineages(std::uint64_t n, const SimplexPoint& z, Rng& rng) {
  const double size = std::clamp(z.total(), 0.0, 1.0);
  const std::uint64_t joined = std::binomial_distribution<std::uint64_t>(n, size)(rng);
  std::uint64_t left = joined;
  double mass_left = z.total();
  std::uint64_t occupied = 0;
  std::uint64_t merged = 0;
  for (std::size_t i = 0; i < z.size() && left > 0; ++i) {
    const double p = i + 1 == z.size() ? 1.0 : std::clamp(z[i] / mass_left, 0.0, 1.0);
    const std::uint64_t here = std::binomial_distribution<std::uint64_t>(left, p)(rng);
    if (here > 0) ++occupied;
    if (here > 1) ++merged;
    left -= here;
    mass_left -= z[i];
  }
  return {n - joined + occupied, merged};
}

using EventHook = std::function<void(double time, std::uint64_t before, const DualEvent&)>;

DualPath run_chain(const DualParams& params, std::uint64_t n0, double horizon, std::uint64_t cap,
                   Rng& rng, bool record, const EventHook& hook) {
  if (n0 < 1) throw std::invalid_argument("initial state must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  DualPath path;
  path.initial = n0;
  std::uint64_t n = n0;
  double t = 0.0;
  const JumpSampler* jumps = params.jumps();
  const double xi_rate = params.jump_rate();
  for (;;) {
    if (n > cap) {
      path.escaped = true;
      break;
    }
    const double nd = static_cast<double>(n);
    const double branch = params.kappa * nd;
    const double kingman = params.sigma * nd * (nd - 1.0) / 2.0;
    const double total = branch + kingman + xi_rate;
    if (total <= 0.0) {
      t = horizon;
      break;
    }
    t += std::exponential_distribution<double>(total)(rng);
    if (t >= horizon) {
      t = horizon;
      break;
    }
    const double u = uniform01(rng) * total;
    DualEvent ev{t, DualEventKind::branch, 0, 0, n};
    if (u < branch) {
      const ParentCount i = params.pi.sample_offspring(rng);
      ev.offspring = i;
      if (i == kInfiniteParents) {
        ev.state = std::numeric_limits<std::uint64_t>::max();
        path.escaped = true;
      } else {
        ev.state = n + i;
      }
    } else if (u < branch + kingman) {
      ev.kind = DualEventKind::kingman;
      ev.state = n - 1;
    } else {
      auto z = jumps->draw(rng);
      if (!z) continue;  // thinned candidate
      ev.kind = DualEventKind::xi;
      const Merge m = merge_lineages(n, *z, rng);
      ev.state = m.state;
      ev.merged_groups = m.merged_groups;
    }
    ++path.events;
    if (hook) hook(t, n, ev);
    if (record) path.log.push_back(ev);
    if (path.escaped) break;
    n = ev.state;
  }
  path.final_state = n;
  path.end_time = t;
  return path;
}

// Calls f(prob, occupied) for every composition of k lineages over the
// fragments, with multinomial probabilities `weights`.
void for_each_composition(std::uint64_t k, const std::vector<double>& weights,
                          const std::function<void(double, std::uint64_t)>& f) {
  const std::size_t m = weights.size();
  std::vector<std::uint64_t> counts(m, 0);
  std::vector<double> lfact(k + 1, 0.0);
  for (std::uint64_t i = 1; i <= k; ++i) lfact[i] = lfact[i - 1] + std::log(static_cast<double>(i));
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t left) {
    if (i + 1 == m) {
      counts[i] = left;
      double logp = lfact[k];
      std::uint64_t occupied = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] == 0) continue;
        if (weights[j] <= 0.0) return;
        logp += static_cast<double>(counts[j]) * std::log(weights[j]) - lfact[counts[j]];
        ++occupied;
      }
      f(std::exp(logp), occupied);
      return;
    }
    for (std::uint64_t c = 0; c <= left; ++c) {
      counts[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, k);
}

}  // namespace

const char* to_string(DualEventKind kind) {
  switch (kind) {
    case DualEventKind::branch: return "branch";
    case DualEventKind::kingman: return "kingman";
    case DualEventKind::xi: return "xi";
  }
  return "?";
}

const char* to_string(RecurrenceVerdict verdict) {
  switch (verdict) {
    case RecurrenceVerdict::recurrent_looking: return "recurrent-looking";
    case RecurrenceVerdict::escaping: return "escaping";
    case RecurrenceVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

EventRates event_rates(const DualParams& params, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("state must be >= 1");
  const double nd = static_cast<double>(n);
  return {params.kappa * nd, params.sigma * nd * (nd - 1.0) / 2.0, params.jump_rate()};
}

DualPath simulate_dual(const DualParams& params, std::uint64_t n0, double horizon, Rng& rng,
                       const DualOptions& options) {
  return run_chain(params, n0, horizon, options.cap, rng, options.record, {});
}

double dual_generator_exact(const DualParams& params, double x, std::uint64_t n) {
  if (n < 1) throw std::invalid_argument("state must be >= 1");
  if (n > 10) throw BudgetExceeded("exact dual generator needs n <= 10");
  const double xn = ipow(x, n);
  double value = 0.0;
  if (params.kappa > 0.0) {
    double branching = 0.0;
    const std::uint64_t finite = params.pi.max_finite_support();
    for (std::uint64_t i = 1; finite == 0 || i + 1 <= finite; ++i) {
      branching += params.pi.pi(i) * (ipow(x, n + i) - xn);
      if (finite == 0 && params.pi.pi_tail(i + 1) < 1e-18) break;
    }
    value += params.kappa * static_cast<double>(n) * branching;
  }
  if (n >= 2) {
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    value += params.sigma * pairs * (ipow(x, n - 1) - xn);
  }
  if (!params.xi) return value;
  if (!params.xi->is_atomic()) throw BudgetExceeded("exact dual generator needs atomic xi");
  if (params.xi->max_support() > 6) throw BudgetExceeded("exact dual generator needs support <= 6");
  for (const auto& atom : params.xi->atoms()) {
    const auto& z = atom.point;
    const double size = z.total();
    std::vector<double> direction(z.masses().begin(), z.masses().end());
    for (double& d : direction) d /= size;
    double term = 0.0;
    for (std::uint64_t k = 0; k <= n; ++k) {
      const double binom =
          std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) *
          ipow(size, k) * ipow(1.0 - size, n - k);
      if (binom == 0.0) continue;
      for_each_composition(k, direction, [&](double prob, std::uint64_t occupied) {
        term += binom * prob * (ipow(x, n - k + occupied) - xn);
      });
    }
    value += atom.weight / z.sum_squares() * term;
  }
  return value;
}

McEstimate dual_moment(const DualParams& params, std::uint64_t n0, double x, double horizon,
                       std::uint64_t replicates, std::uint64_t seed, std::uint64_t cap) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  return parallel_estimate(replicates, seed, kStreamMoment, [&](Rng& rng) {
    const DualPath path = run_chain(params, n0, horizon, cap, rng, false, {});
    if (path.escaped) return 0.0;
    return std::pow(x, static_cast<double>(path.final_state));
  });
}

double StationaryEstimate::pgf(double x) const {
  double s = 0.0;
  for (std::size_t m = pmf.size(); m-- > 1;) s = (s + pmf[m]) * x;
  return s;
}

McEstimate StationaryEstimate::pgf_estimate(double x) const {
  McEstimate e;
  for (const auto& occ : per_replicate) {
    double s = 0.0;
    for (std::size_t m = occ.size(); m-- > 1;) s = (s + occ[m]) * x;
    e.add(s);
  }
  return e;
}

StationaryEstimate stationary_estimate(const DualParams& params, std::uint64_t n0, double burn_in,
                                       double horizon, std::uint64_t replicates,
                                       std::uint64_t seed, std::uint64_t cap) {
  if (!(horizon > burn_in && burn_in >= 0.0))
    throw std::invalid_argument("need 0 <= burn_in < horizon");
  struct Replicate {
    std::vector<double> occupation;
    bool escaped = false;
  };
  std::vector<Replicate> runs(replicates);
  const double window = horizon - burn_in;
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng = make_rng(seed, kStreamStationary, r);
    std::vector<double> occ(n0 + 1, 0.0);
    double last = 0.0;
    auto credit = [&](std::uint64_t state, double from, double to) {
      const double lo = std::max(from, burn_in);
      if (to <= lo) return;
      if (occ.size() <= state) occ.resize(state + 1, 0.0);
      occ[state] += (to - lo) / window;
    };
    const DualPath path =
        run_chain(params, n0, horizon, cap, rng, false,
                  [&](double t, std::uint64_t before, const DualEvent&) {
                    credit(before, last, t);
                    last = t;
                  });
    if (!path.escaped) credit(path.final_state, last, horizon);
    runs[r] = {std::move(occ), path.escaped};
  });

  StationaryEstimate out;
  out.replicates = replicates;
  std::size_t width = 2;
  for (const auto& r : runs) {
    if (r.escaped) {
      ++out.escaped;
      continue;
    }
    width = std::max(width, r.occupation.size());
    out.per_replicate.push_back(r.occupation);
  }
  out.pmf.assign(width, 0.0);
  out.std_error.assign(width, 0.0);
  for (auto& occ : out.per_replicate) occ.resize(width, 0.0);
  for (std::size_t m = 1; m < width; ++m) {
    McEstimate e;
    for (const auto& occ : out.per_replicate) e.add(occ[m]);
    out.pmf[m] = e.mean();
    out.std_error[m] = e.std_error();
  }
  return out;
}

RecurrenceReport recurrence_probe(const DualParams& params, std::uint64_t n0, double horizon,
                                  std::uint64_t cap, std::uint64_t replicates,
                                  std::uint64_t seed) {
  if (cap < 100) throw std::invalid_argument("escape cap must be >= 100");
  if (replicates == 0) throw std::invalid_argument("need at least one replicate");
  struct Tally {
    bool escaped = false;
    std::uint64_t returns = 0;
    std::uint64_t excursions = 0;
    double excursion_time = 0.0;
  };
  std::vector<Tally> tallies(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng = make_rng(seed, kStreamRecurrence, r);
    Tally tally;
    bool visited = n0 == 1;
    double left_one = 0.0;
    const DualPath path =
        run_chain(params, n0, horizon, cap, rng, false,
                  [&](double t, std::uint64_t before, const DualEvent& ev) {
                    if (before == 1 && ev.state != 1) left_one = t;
                    if (before != 1 && ev.state == 1) {
                      ++tally.returns;
                      if (visited) {
                        ++tally.excursions;
                        tally.excursion_time += t - left_one;
                      }
                      visited = true;
                    }
                  });
    tally.escaped = path.escaped;
    tallies[r] = tally;
  });

  RecurrenceReport report;
  report.replicates = replicates;
  std::uint64_t escaped = 0;
  std::uint64_t returns = 0;
  std::uint64_t excursions = 0;
  double excursion = 0.0;
  for (const auto& t : tallies) {
    escaped += t.escaped ? 1 : 0;
    returns += t.returns;
    excursions += t.excursions;
    excursion += t.excursion_time;
  }
  const double reps = static_cast<double>(replicates);
  report.escape_fraction = static_cast<double>(escaped) / reps;
  report.mean_returns = static_cast<double>(returns) / reps;
  report.mean_return_time_to_1 = excursions == 0 ? std::numeric_limits<double>::infinity()
                                                 : excursion / static_cast<double>(excursions);
  if (report.escape_fraction >= 0.99)
    report.verdict = RecurrenceVerdict::escaping;
  else if (escaped == 0 && report.mean_returns >= 10.0)
    report.verdict = RecurrenceVerdict::recurrent_looking;
  else
    report.verdict = RecurrenceVerdict::inconclusive;
  return report;
}

}  // namespace xiwf
