// Independent reference computations used as test oracles.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Sum over b in {0,1}^m of P(b) * f(b) with B_i ~ Bernoulli(x).
template <class F>
double bernoulli_sum(std::size_t m, double x, F&& f) {
  double total = 0.0;
  std::vector<int> b(m);
  for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
    double p = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      b[i] = (mask >> i) & 1;
      p *= b[i] ? x : 1.0 - x;
    }
    total += p * f(b);
  }
  return total;
}

struct PointMass {
  double weight;
  std::vector<double> z;
};

inline double sum_sq(const std::vector<double>& z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

// Left-hand difference of the small-jump identity: total mass times
// E[(sum (B_i - x) Z_i)^2 / sum Z_i^2] minus the truncated-intensity mass
// times E[(sum (B_i - x) Z^(N)_i)^2].
inline double small_jump_lhs(const std::vector<PointMass>& atoms, double floor, double x) {
  double total = 0.0, trunc_mass = 0.0;
  for (const auto& a : atoms) {
    total += a.weight;
    if (a.z.front() >= floor) trunc_mass += a.weight / sum_sq(a.z);
  }
  double first = 0.0, second = 0.0;
  for (const auto& a : atoms) {
    const double sq = bernoulli_sum(a.z.size(), x, [&](const std::vector<int>& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) s += (b[i] - x) * a.z[i];
      return s * s;
    });
    first += a.weight / total * sq / sum_sq(a.z);
    if (a.z.front() >= floor) second += a.weight / sum_sq(a.z) / trunc_mass * sq;
  }
  return total * first - (trunc_mass > 0.0 ? trunc_mass * second : 0.0);
}

// A x^n for the limit generator, with the Xi term written as the binomial
// expansion E[(x(1-|z|) + sum z_i B_i)^n] by enumeration. pi[i-1] = pi_i.
inline double generator_power(double kappa, double sigma, const std::vector<double>& pi,
                              const std::vector<PointMass>& atoms, int n, double x) {
  double drift = 0.0;
  for (std::size_t i = 1; i <= pi.size(); ++i) drift += pi[i - 1] * (std::pow(x, i + 1.0) - x);
  double v = kappa * n * std::pow(x, n - 1) * drift;
  if (n >= 2) v += sigma / 2.0 * x * (1.0 - x) * n * (n - 1) * std::pow(x, n - 2);
  for (const auto& a : atoms) {
    double size = 0.0;
    for (double z : a.z) size += z;
    const double e = bernoulli_sum(a.z.size(), x, [&](const std::vector<int>& b) {
      double y = x * (1.0 - size);
      for (std::size_t i = 0; i < b.size(); ++i) y += a.z[i] * b[i];
      return std::pow(y, n);
    });
    v += a.weight / sum_sq(a.z) * (e - std::pow(x, n));
  }
  return v;
}

}  // namespace oracle

namespace oracle {

// Distribution of the number of distinct parent labels of n lineages in a
// population of N, by brute force over pick counts, group choices and
// labels. qpmf[k-1] = P(K = k); atoms are weighted event points (weights
// normalised here). Keep N^(picks + fragments) small.
inline std::vector<double> ancestral_row(int N, double gamma, const std::vector<double>& qpmf,
                                         const std::vector<PointMass>& atoms, int n) {
  std::vector<double> row(N + 1, 0.0);
  double total_weight = 0.0;
  for (const auto& a : atoms) total_weight += a.weight;

  auto distinct = [&](const std::vector<int>& labels) {
    std::vector<bool> seen(N, false);
    int d = 0;
    for (int l : labels)
      if (!seen[l]) { seen[l] = true; ++d; }
    return d;
  };
  // all label vectors of length len
  auto for_labels = [&](int len, auto&& f) {
    std::vector<int> labels(len, 0);
    for (;;) {
      f(labels);
      int i = 0;
      while (i < len && ++labels[i] == N) labels[i++] = 0;
      if (i == len) break;
    }
  };
  auto ipow_int = [](double b, int e) { double r = 1; for (int i = 0; i < e; ++i) r *= b; return r; };

  auto handle_picks = [&](int picks, double weight) {
    // no event
    const double label_p = ipow_int(1.0 / N, picks);
    for_labels(picks, [&](const std::vector<int>& labels) {
      row[distinct(labels)] += weight * (1.0 - gamma) * label_p;
    });
    if (gamma == 0.0) return;
    for (const auto& a : atoms) {
      const int m = static_cast<int>(a.z.size());
      double size = 0.0;
      for (double z : a.z) size += z;
      std::vector<int> cat(picks, 0);
      for (;;) {
        double p = 1.0;
        for (int c : cat) p *= c < m ? a.z[c] : 1.0 - size;
        if (p > 0.0) {
          // labels: one per fragment, then one per pick (used only if residual)
          const double lp = ipow_int(1.0 / N, m + picks);
          for_labels(m + picks, [&](const std::vector<int>& labels) {
            std::vector<int> effective;
            for (int j = 0; j < picks; ++j) effective.push_back(cat[j] < m ? labels[cat[j]] : labels[m + j]);
            row[distinct(effective)] += weight * gamma * a.weight / total_weight * p * lp;
          });
        }
        int i = 0;
        while (i < picks && ++cat[i] == m + 1) cat[i++] = 0;
        if (i == picks) break;
      }
    }
  };

  // pick counts per lineage
  std::vector<int> counts(n, 1);
  for (;;) {
    double w = 1.0;
    int picks = 0;
    for (int k : counts) {
      w *= qpmf[k - 1];
      picks += k;
    }
    if (w > 0.0) handle_picks(picks, w);
    int i = 0;
    while (i < n && ++counts[i] > static_cast<int>(qpmf.size())) counts[i++] = 1;
    if (i == n) break;
  }
  return row;
}

}  // namespace oracle
