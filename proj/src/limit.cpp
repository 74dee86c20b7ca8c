#include "xiwf/limit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xiwf/errors.hpp"
#include "xiwf/parallel.hpp"

namespace xiwf {

namespace {

enum Stream : std::uint64_t { kStreamBernoulli = 21, kStreamPaths = 22 };

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// Applies an event with point z to the frequency x.
double jump_state(double x, const SimplexPoint& z, Rng& rng) {
  double y = x * z.residual();
  for (double zi : z.masses())
    if (bernoulli(rng, x)) y += zi;
  return y;
}

class PathEngine {
 public:
  PathEngine(const LimitParams& params, double dt) : params_(params), dt_(dt) {
    if (!(dt > 0.0 && dt <= 1e-2)) throw std::invalid_argument("dt must lie in (0, 1e-2]");
  }

  // Advances x by one Euler substep of length h.
  double euler(double x, double h, SdePath& path, Rng& rng) const {
    if (h <= 0.0 || x <= 0.0 || x >= 1.0) return x;
    ++path.substeps;
    double next = x + params_.kappa * branching_drift(params_.pi, x) * h;
    if (params_.sigma > 0.0)
      next += std::sqrt(params_.sigma * x * (1.0 - x) * h) * normal_(rng);
    if (next < 0.0 || next > 1.0) {
      ++path.clamps;
      next = std::clamp(next, 0.0, 1.0);
    }
    return next;
  }

  double run(double x0, double horizon, Rng& rng, SdePath& path, const PathOptions& options) const {
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw std::invalid_argument("x0 must lie in [0,1]");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    const bool record = options.record_every > 0;
    path.times.push_back(0.0);
    path.values.push_back(x0);

    const JumpSampler* jumps = params_.jumps();
    const double rate = params_.jump_rate();
    std::exponential_distribution<double> wait(rate > 0.0 ? rate : 1.0);
    double next_jump = rate > 0.0 ? wait(rng) : std::numeric_limits<double>::infinity();

    const auto steps = static_cast<std::uint64_t>(std::ceil(horizon / dt_ - 1e-9));
    double x = x0;
    double t = 0.0;
    for (std::uint64_t k = 1; k <= steps; ++k) {
      const double target = k == steps ? horizon : static_cast<double>(k) * dt_;
      if (x <= 0.0 || x >= 1.0) {
        // Absorbed: nothing moves any more.
        if (record && k % options.record_every == 0 && k != steps) {
          path.times.push_back(target);
          path.values.push_back(x);
        }
        continue;
      }
      while (next_jump <= target) {
        x = euler(x, next_jump - t, path, rng);
        t = next_jump;
        if (auto z = jumps->draw(rng)) {
          x = std::clamp(jump_state(x, *z, rng), 0.0, 1.0);
          ++path.jump_count;
          if (options.record_jumps) path.jumps.push_back({t, *z, x});
        }
        next_jump += wait(rng);
      }
      x = euler(x, target - t, path, rng);
      t = target;
      if (record && k % options.record_every == 0 && k != steps) {
        path.times.push_back(t);
        path.values.push_back(x);
      }
    }
    path.times.push_back(horizon);
    path.values.push_back(x);
    return x;
  }

 private:
  const LimitParams& params_;
  double dt_;
  mutable std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace

LimitParams::LimitParams(double kappa_, double sigma_, SelectionLaw pi_,
                         std::optional<XiMeasure> xi_, double jump_floor_)
    : kappa(kappa_), sigma(sigma_), pi(std::move(pi_)), xi(std::move(xi_)), jump_floor(jump_floor_) {
  if (!(kappa >= 0.0 && std::isfinite(kappa))) throw std::invalid_argument("kappa must be >= 0");
  if (!(sigma >= 0.0 && std::isfinite(sigma))) throw std::invalid_argument("sigma must be >= 0");
  if (kappa > 0.0 && !pi.beta_finite()) throw std::invalid_argument("offspring law needs finite beta");
  if (!(jump_floor > 0.0 && jump_floor <= 1.0))
    throw std::invalid_argument("jump floor must lie in (0,1]");
  if (xi) jumps_ = std::make_shared<const JumpSampler>(*xi, jump_floor);
}

SdePath simulate_path(const LimitParams& params, double x0, double horizon, double dt, Rng& rng,
                      const PathOptions& options) {
  SdePath path;
  PathEngine(params, dt).run(x0, horizon, rng, path, options);
  return path;
}

double simulate_terminal(const LimitParams& params, double x0, double horizon, double dt,
                         Rng& rng) {
  SdePath path;
  return PathEngine(params, dt).run(x0, horizon, rng, path, {0, false});
}

McEstimate terminal_moment(const LimitParams& params, double x0, int power, double horizon,
                           double dt, std::uint64_t replicates, std::uint64_t seed) {
  const PathEngine engine(params, dt);
  return replicate_estimate(replicates, seed, kStreamPaths, [&](Rng& rng, std::uint64_t) {
    SdePath path;
    return ipow(engine.run(x0, horizon, rng, path, {0, false}), power);
  });
}

double generator_apply_exact(const LimitParams& params, int n, double x) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  double value = 0.0;
  if (params.kappa > 0.0)
    value += params.kappa * n * ipow(x, n - 1) * branching_drift(params.pi, x);
  if (n >= 2) value += 0.5 * params.sigma * x * (1.0 - x) * n * (n - 1) * ipow(x, n - 2);
  if (!params.xi) return value;
  if (!params.xi->is_atomic())
    throw BudgetExceeded("exact generator needs an atomic event measure");
  if (params.xi->max_support() > 12) throw BudgetExceeded("event point support above 12");
  const double xn = ipow(x, n);
  for (const auto& atom : params.xi->atoms()) {
    const auto& z = atom.point;
    const std::size_t m = z.size();
    double expectation = 0.0;
    for (std::size_t b = 0; b < (std::size_t{1} << m); ++b) {
      double y = x * z.residual();
      double prob = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (b & (std::size_t{1} << i)) {
          y += z[i];
          prob *= x;
        } else {
          prob *= 1.0 - x;
        }
      }
      expectation += prob * ipow(y, n);
    }
    value += atom.weight / z.sum_squares() * (expectation - xn);
  }
  return value;
}

McEstimate generator_apply_bernoulli(const LimitParams& params, int n, double x,
                                     std::uint64_t replicates, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  if (params.sigma != 0.0)
    throw std::invalid_argument("Bernoulli representation needs sigma = 0");
  const double drift =
      params.kappa > 0.0 ? -params.kappa * selection_s(params.pi, x) * x * (1.0 - x) * n * ipow(x, n - 1)
                         : 0.0;
  if (n == 1 || !params.xi) return McEstimate::exact(drift);
  const double half_mass = 0.5 * params.xi->total_mass();
  const XiMeasure hat = params.xi->normalized();
  return parallel_estimate(replicates, seed, kStreamBernoulli, [&](Rng& rng) {
    const SimplexPoint z = sample_point(hat, rng);
    if (z.empty()) return drift;
    const double size = z.total();
    double hit = 0.0;  // sum Z*_i B_i
    for (double zi : z.masses())
      if (bernoulli(rng, x)) hit += zi / size;
    const double squares = z.sum_squares() / (size * size);
    const double s = std::sqrt(uniform01(rng));
    const double w = size * s;
    const double v = uniform01(rng);
    const double arg = x * (1.0 - w) + v * w * hit;
    const double second = n * (n - 1) * ipow(arg, n - 2);
    return drift + half_mass * (hit - x) * hit / squares * second;
  });
}

}  // namespace xiwf
