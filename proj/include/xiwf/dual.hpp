#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xiwf/limit.hpp"
#include "xiwf/mc_estimate.hpp"
#include "xiwf/random.hpp"

namespace xiwf {

/// Rates of the branching-coalescing block-counting chain at state n.
struct EventRates {
  double branch_total = 0.0;  // kappa * n; n -> n + i with i ~ pi
  double kingman = 0.0;       // sigma * n(n-1)/2; n -> n - 1
  double xi_candidate = 0.0;  // event candidates; may merge nothing
  [[nodiscard]] double total() const { return branch_total + kingman + xi_candidate; }
};

EventRates event_rates(const DualParams& params, std::uint64_t n);

enum class DualEventKind { branch, kingman, xi };
const char* to_string(DualEventKind kind);

struct DualEvent {
  double time;
  DualEventKind kind;
  std::uint64_t offspring = 0;      // branch: i
  std::uint64_t merged_groups = 0;  // xi: fragments holding >= 2 lineages
  std::uint64_t state;              // state after the event
};

struct DualPath {
  std::uint64_t initial = 0;
  std::uint64_t final_state = 0;
  double end_time = 0.0;
  bool escaped = false;  // state exceeded the cap before the horizon
  std::uint64_t events = 0;
  std::vector<DualEvent> log;
};

struct DualOptions {
  std::uint64_t cap = 10000;
  bool record = true;
};

/// Exact event-driven simulation up to `horizon`. Event candidates that
/// merge nothing are logged as xi events leaving the state unchanged.
DualPath simulate_dual(const DualParams& params, std::uint64_t n0, double horizon, Rng& rng,
                       const DualOptions& options = {});

/// L f(n) for f(n) = x^n, with the event term enumerated over lineage to
/// fragment assignments. Needs atomic xi with support <= 6 and n <= 10.
double dual_generator_exact(const DualParams& params, double x, std::uint64_t n);

/// E_n[x^{D_t}]; escaped replicates contribute 0.
McEstimate dual_moment(const DualParams& params, std::uint64_t n0, double x, double horizon,
                       std::uint64_t replicates, std::uint64_t seed, std::uint64_t cap = 10000);

/// Occupation-time estimate of the stationary law after burn-in, pooled over
/// replicates that stayed below the cap.
struct StationaryEstimate {
  std::vector<double> pmf;        // pmf[m], m >= 1; pmf[0] = 0
  std::vector<double> std_error;  // per state, across replicates
  std::uint64_t replicates = 0;
  std::uint64_t escaped = 0;
  std::vector<std::vector<double>> per_replicate;  // occupation pmf per kept replicate

  [[nodiscard]] double escape_fraction() const {
    return replicates == 0 ? 0.0 : static_cast<double>(escaped) / static_cast<double>(replicates);
  }
  /// phi(x) = sum_m pmf[m] x^m.
  [[nodiscard]] double pgf(double x) const;
  /// phi(x) with its across-replicate standard error.
  [[nodiscard]] McEstimate pgf_estimate(double x) const;
};

StationaryEstimate stationary_estimate(const DualParams& params, std::uint64_t n0,
                                       double burn_in, double horizon,
                                       std::uint64_t replicates, std::uint64_t seed,
                                       std::uint64_t cap = 10000);

enum class RecurrenceVerdict { recurrent_looking, escaping, inconclusive };
const char* to_string(RecurrenceVerdict verdict);

struct RecurrenceReport {
  double escape_fraction = 0.0;
  double mean_returns = 0.0;           // entries into state 1 per replicate
  double mean_return_time_to_1 = 0.0;  // mean excursion length away from 1
  std::uint64_t replicates = 0;
  RecurrenceVerdict verdict = RecurrenceVerdict::inconclusive;
};

/// escaping if >= 99% of replicates pass the cap M before T; recurrent-looking
/// if none escape and state 1 is re-entered at least 10 times per replicate
/// on average; inconclusive otherwise.
RecurrenceReport recurrence_probe(const DualParams& params, std::uint64_t n0, double horizon,
                                  std::uint64_t cap, std::uint64_t replicates,
                                  std::uint64_t seed);

}  // namespace xiwf
