#pragma once

#include <cstdint>
#include <span>

namespace xiwf {

/// Running mean/variance accumulator with associative merging
/// (Welford updates, Chan et al. pairwise combination).
class McEstimate {
 public:
  McEstimate() = default;

  /// A deterministic value: zero standard error, flagged as exact.
  static McEstimate exact(double value);
  static McEstimate from_samples(std::span<const double> samples);

  void add(double sample);
  void merge(const McEstimate& other);
  [[nodiscard]] static McEstimate merged(McEstimate a, const McEstimate& b) {
    a.merge(b);
    return a;
  }

  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] std::uint64_t replicates() const { return count_; }
  [[nodiscard]] bool is_exact() const { return exact_; }
  [[nodiscard]] double variance() const;
  [[nodiscard]] double std_error() const;

  struct Interval {
    double lower;
    double upper;
  };
  /// Normal-approximation interval; `level` in (0,1).
  [[nodiscard]] Interval interval(double level = 0.95) const;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  bool exact_ = false;
};

/// |a - b| measured in combined standard errors; infinite when both SEs vanish
/// and the means differ.
double z_score(const McEstimate& a, const McEstimate& b);

double normal_quantile(double p);

}  // namespace xiwf
