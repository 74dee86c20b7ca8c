#include "xiwf/mc_estimate.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace xiwf {

McEstimate McEstimate::exact(double value) {
  McEstimate e;
  e.count_ = 1;
  e.mean_ = value;
  e.exact_ = true;
  return e;
}

McEstimate McEstimate::from_samples(std::span<const double> samples) {
  McEstimate e;
  for (double s : samples) e.add(s);
  return e;
}

void McEstimate::add(double sample) {
  exact_ = false;
  ++count_;
  const double delta = sample - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (sample - mean_);
}

void McEstimate::merge(const McEstimate& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  mean_ = (na * mean_ + nb * other.mean_) / n;
  m2_ += other.m2_ + delta * delta * na * nb / n;
  count_ += other.count_;
  exact_ = exact_ && other.exact_;
}

double McEstimate::variance() const {
  if (exact_ || count_ < 2) return 0.0;
  return m2_ / static_cast<double>(count_ - 1);
}

double McEstimate::std_error() const {
  if (exact_ || count_ < 2) return 0.0;
  return std::sqrt(variance() / static_cast<double>(count_));
}

McEstimate::Interval McEstimate::interval(double level) const {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must lie in (0,1)");
  const double half = normal_quantile(0.5 + level / 2.0) * std_error();
  return {mean_ - half, mean_ + half};
}

double z_score(const McEstimate& a, const McEstimate& b) {
  const double se = std::hypot(a.std_error(), b.std_error());
  const double diff = std::abs(a.mean() - b.mean());
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace xiwf
