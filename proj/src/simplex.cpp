#include "xiwf/simplex.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "xiwf/errors.hpp"
#include "xiwf/mc_estimate.hpp"

namespace xiwf {

namespace {

constexpr double kQuadratureTol = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sample_beta(Rng& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  return x / (x + y);
}

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_pdf(double y, double a, double b) {
  if (y <= 0.0 || y >= 1.0) return 0.0;
  return std::exp((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - log_beta(a, b));
}

template <class F>
double integrate(F&& f, double lo, double hi) {
  if (hi <= lo) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, lo, hi, kQuadratureTol);
}

void require_floor(double floor) {
  if (!(floor >= 0.0 && floor <= 1.0))
    throw std::invalid_argument("floor must lie in [0,1]");
}

MeasureIntegral from_estimate(const McEstimate& e) {
  return {e.mean(), e.std_error(), EvalMode::monte_carlo};
}

// Samples y from the density proportional to y^p on [lo, hi].
double sample_power(Rng& rng, double p, double lo, double hi) {
  const double u = uniform01(rng);
  if (std::abs(p + 1.0) < 1e-12) return lo * std::pow(hi / lo, u);
  const double q = p + 1.0;
  const double a = std::pow(lo, q);
  const double b = std::pow(hi, q);
  return std::pow(a + u * (b - a), 1.0 / q);
}

}  // namespace

// ---------------------------------------------------------------------------

SimplexPoint::SimplexPoint(std::vector<double> masses) {
  for (double m : masses) {
    if (!(m >= 0.0 && m <= 1.0))
      throw std::invalid_argument("simplex entries must lie in [0,1]");
  }
  std::erase_if(masses, [](double m) { return m == 0.0; });
  std::sort(masses.begin(), masses.end(), std::greater<>());
  total_ = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (total_ > 1.0 + kSimplexSlack)
    throw std::invalid_argument("simplex point has total mass above one");
  sum_squares_ = std::inner_product(masses.begin(), masses.end(), masses.begin(), 0.0);
  masses_ = std::move(masses);
}

double StickLaw::sample(Rng& rng) const {
  double y = 0.0;
  do {
    y = kind == Kind::uniform ? uniform01(rng) : sample_beta(rng, a, b);
  } while (y >= 1.0);
  return y;
}

// ---------------------------------------------------------------------------

XiMeasure XiMeasure::finite_atomic(std::vector<Atom> atoms) {
  if (atoms.empty()) throw std::invalid_argument("finite_atomic needs at least one atom");
  for (const auto& a : atoms) {
    if (!(a.weight > 0.0 && std::isfinite(a.weight)))
      throw std::invalid_argument("atom weights must be positive and finite");
    if (a.point.empty())
      throw std::invalid_argument("Xi may not charge the zero point");
  }
  return XiMeasure(FiniteAtomic{std::move(atoms)});
}

XiMeasure XiMeasure::lambda_dirac(double y, double total_mass) {
  if (!(y > 0.0 && y <= 1.0)) throw std::invalid_argument("lambda_dirac needs y in (0,1]");
  if (!(total_mass > 0.0 && std::isfinite(total_mass)))
    throw std::invalid_argument("total_mass must be positive and finite");
  return XiMeasure(LambdaDirac{y, total_mass});
}

XiMeasure XiMeasure::lambda_beta(double a, double b, double total_mass) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("lambda_beta needs a, b > 0");
  if (!(total_mass > 0.0 && std::isfinite(total_mass)))
    throw std::invalid_argument("total_mass must be positive and finite");
  return XiMeasure(LambdaBeta{a, b, total_mass});
}

XiMeasure XiMeasure::stick_breaking(StickLaw law, double total_mass, double truncation_tol) {
  if (!(total_mass > 0.0 && std::isfinite(total_mass)))
    throw std::invalid_argument("total_mass must be positive and finite");
  if (!(truncation_tol > 0.0 && truncation_tol < 1.0))
    throw std::invalid_argument("truncation_tol must lie in (0,1)");
  if (law.kind == StickLaw::Kind::beta && !(law.a > 0.0 && law.b > 0.0))
    throw std::invalid_argument("beta stick law needs a, b > 0");
  return XiMeasure(StickBreaking{law, total_mass, truncation_tol});
}

MeasureFamily XiMeasure::family() const {
  return std::visit(Overloaded{
                        [](const FiniteAtomic&) { return MeasureFamily::finite_atomic; },
                        [](const LambdaDirac&) { return MeasureFamily::lambda_dirac; },
                        [](const LambdaBeta&) { return MeasureFamily::lambda_beta; },
                        [](const StickBreaking&) { return MeasureFamily::stick_breaking; },
                    },
                    params_);
}

double XiMeasure::total_mass() const {
  return std::visit(Overloaded{
                        [](const FiniteAtomic& f) {
                          double s = 0.0;
                          for (const auto& a : f.atoms) s += a.weight;
                          return s;
                        },
                        [](const auto& p) { return p.total_mass; },
                    },
                    params_);
}

bool XiMeasure::is_atomic() const {
  const auto f = family();
  return f == MeasureFamily::finite_atomic || f == MeasureFamily::lambda_dirac;
}

std::vector<Atom> XiMeasure::atoms() const {
  if (const auto* f = std::get_if<FiniteAtomic>(&params_)) return f->atoms;
  if (const auto* d = std::get_if<LambdaDirac>(&params_))
    return {Atom{d->total_mass, SimplexPoint({d->y})}};
  throw std::logic_error("atoms() requires an atomic measure");
}

std::size_t XiMeasure::max_support() const {
  std::size_t m = 0;
  for (const auto& a : atoms()) m = std::max(m, a.point.size());
  return m;
}

XiMeasure XiMeasure::scaled(double factor) const {
  if (!(factor > 0.0 && std::isfinite(factor)))
    throw std::invalid_argument("scale factor must be positive and finite");
  return std::visit(Overloaded{
                        [&](FiniteAtomic f) {
                          for (auto& a : f.atoms) a.weight *= factor;
                          return XiMeasure(std::move(f));
                        },
                        [&](auto p) {
                          p.total_mass *= factor;
                          return XiMeasure(p);
                        },
                    },
                    params_);
}

std::string XiMeasure::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const FiniteAtomic& f) {
                   os << "finite_atomic{";
                   for (std::size_t i = 0; i < f.atoms.size(); ++i) {
                     if (i) os << "; ";
                     os << f.atoms[i].weight << ":";
                     const auto m = f.atoms[i].point.masses();
                     for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << m[j];
                   }
                   os << "}";
                 },
                 [&](const LambdaDirac& d) {
                   os << "lambda_dirac{y=" << d.y << ", mass=" << d.total_mass << "}";
                 },
                 [&](const LambdaBeta& b) {
                   os << "lambda_beta{a=" << b.a << ", b=" << b.b << ", mass=" << b.total_mass
                      << "}";
                 },
                 [&](const StickBreaking& s) {
                   os << "stick_breaking{law="
                      << (s.law.kind == StickLaw::Kind::uniform ? "uniform" : "beta");
                   if (s.law.kind == StickLaw::Kind::beta) os << "(" << s.law.a << "," << s.law.b << ")";
                   os << ", mass=" << s.total_mass << ", tol=" << s.truncation_tol << "}";
                 },
             },
             params_);
  return os.str();
}

// ---------------------------------------------------------------------------

SimplexPoint sample_point(const XiMeasure& measure, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const XiMeasure::FiniteAtomic& f) {
            const double total = measure.total_mass();
            double u = uniform01(rng) * total;
            for (const auto& a : f.atoms) {
              if (u < a.weight) return a.point;
              u -= a.weight;
            }
            return f.atoms.back().point;
          },
          [&](const XiMeasure::LambdaDirac& d) { return SimplexPoint({d.y}); },
          [&](const XiMeasure::LambdaBeta& b) {
            return SimplexPoint({sample_beta(rng, b.a, b.b)});
          },
          [&](const XiMeasure::StickBreaking& s) {
            std::vector<double> pieces;
            double remaining = 1.0;
            for (int guard = 0; remaining >= s.truncation_tol && guard < 1000000; ++guard) {
              const double y = s.law.sample(rng);
              const double piece = y * remaining;
              if (piece > 0.0) pieces.push_back(piece);
              remaining *= 1.0 - y;
            }
            return SimplexPoint(std::move(pieces));
          },
      },
      measure.parameters());
}

const char* to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::exact: return "exact";
    case EvalMode::quadrature: return "quadrature";
    case EvalMode::monte_carlo: return "monte_carlo";
  }
  return "?";
}

MeasureIntegral intensity_mass(const XiMeasure& measure, double floor,
                               const MonteCarloOptions& mc) {
  require_floor(floor);
  return std::visit(
      Overloaded{
          [&](const XiMeasure::FiniteAtomic& f) {
            double s = 0.0;
            for (const auto& a : f.atoms)
              if (a.point.largest() >= floor) s += a.weight / a.point.sum_squares();
            return MeasureIntegral{s, 0.0, EvalMode::exact};
          },
          [&](const XiMeasure::LambdaDirac& d) {
            const double v = d.y >= floor ? d.total_mass / (d.y * d.y) : 0.0;
            return MeasureIntegral{v, 0.0, EvalMode::exact};
          },
          [&](const XiMeasure::LambdaBeta& b) {
            if (floor == 0.0 && b.a <= 2.0) throw InfiniteIntensity();
            // y^-2 Beta(a,b)(y) = B(a-2,b)/B(a,b) Beta(a-2,b)(y) when a > 2.
            const double v =
                b.a > 2.0
                    ? std::exp(log_beta(b.a - 2.0, b.b) - log_beta(b.a, b.b)) *
                          boost::math::ibetac(b.a - 2.0, b.b, floor)
                    : integrate([&](double y) { return beta_pdf(y, b.a, b.b) / (y * y); },
                                floor, 1.0);
            return MeasureIntegral{b.total_mass * v, 0.0, EvalMode::quadrature};
          },
          [&](const XiMeasure::StickBreaking& s) {
            if (floor == 0.0) throw InfiniteIntensity();
            const XiMeasure hat = measure.normalized();
            Rng rng(mc.seed);
            McEstimate e;
            for (std::uint64_t i = 0; i < mc.samples; ++i) {
              const SimplexPoint z = sample_point(hat, rng);
              e.add(z.largest() >= floor ? s.total_mass / z.sum_squares() : 0.0);
            }
            return from_estimate(e);
          },
      },
      measure.parameters());
}

MeasureIntegral mass_below(const XiMeasure& measure, double floor, const MonteCarloOptions& mc) {
  require_floor(floor);
  return std::visit(
      Overloaded{
          [&](const XiMeasure::FiniteAtomic& f) {
            double s = 0.0;
            for (const auto& a : f.atoms)
              if (a.point.largest() < floor) s += a.weight;
            return MeasureIntegral{s, 0.0, EvalMode::exact};
          },
          [&](const XiMeasure::LambdaDirac& d) {
            return MeasureIntegral{d.y < floor ? d.total_mass : 0.0, 0.0, EvalMode::exact};
          },
          [&](const XiMeasure::LambdaBeta& b) {
            const double v = floor <= 0.0 ? 0.0 : boost::math::ibeta(b.a, b.b, floor);
            return MeasureIntegral{b.total_mass * v, 0.0, EvalMode::quadrature};
          },
          [&](const XiMeasure::StickBreaking& s) {
            const XiMeasure hat = measure.normalized();
            Rng rng(mc.seed);
            McEstimate e;
            for (std::uint64_t i = 0; i < mc.samples; ++i)
              e.add(sample_point(hat, rng).largest() < floor ? s.total_mass : 0.0);
            return from_estimate(e);
          },
      },
      measure.parameters());
}

namespace {
void require_alpha(int population, double alpha) {
  if (population < 2) throw std::invalid_argument("population size must be >= 2");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in (0, 1/2]");
}
}  // namespace

TruncatedIntensity truncate_alpha(const XiMeasure& measure, int population, double alpha,
                                  const MonteCarloOptions& mc) {
  require_alpha(population, alpha);
  const double floor = std::pow(static_cast<double>(population), -alpha);
  return {measure, floor, intensity_mass(measure, floor, mc)};
}

MeasureIntegral small_mass_gap(const XiMeasure& measure, int population, double alpha, double x,
                               const MonteCarloOptions& mc) {
  require_alpha(population, alpha);
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("x must lie in [0,1]");
  const double floor = std::pow(static_cast<double>(population), -alpha);
  MeasureIntegral below = mass_below(measure, floor, mc);
  const double w = x * (1.0 - x);
  return {w * below.value, w * below.std_error, below.mode};
}

std::size_t admissibility_index(const SimplexPoint& z, double c) {
  if (z.empty()) throw std::invalid_argument("admissibility index needs |z| > 0");
  const double threshold = z.total() * (1.0 - c);
  double partial = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    partial += z[k];
    if (partial > threshold) return k + 1;
  }
  // Rounding can leave the full sum a hair below |z|(1-c) when c is tiny.
  return z.size();
}

std::vector<AdmissibilityRow> admissibility_probe(
    const XiMeasure& measure, std::span<const std::uint64_t> ns, std::uint64_t samples,
    Rng& rng, const std::function<double(std::uint64_t)>& c_sequence) {
  const auto c_of = [&](std::uint64_t n) {
    if (c_sequence) return c_sequence(n);
    const double nd = static_cast<double>(n);
    return 1.0 / (nd * nd);
  };
  std::vector<AdmissibilityRow> rows;
  for (std::uint64_t n : ns) rows.push_back({n, c_of(n), 0.0, 0.0});
  const XiMeasure hat = measure.normalized();
  for (std::uint64_t s = 0; s < samples; ++s) {
    const SimplexPoint z = sample_point(hat, rng);
    if (z.empty()) continue;
    for (auto& row : rows) {
      const double ratio = static_cast<double>(admissibility_index(z, row.c)) /
                           std::sqrt(static_cast<double>(row.n));
      row.mean_ratio += ratio / static_cast<double>(samples);
      row.max_ratio = std::max(row.max_ratio, ratio);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

JumpSampler::JumpSampler(const XiMeasure& measure, double floor)
    : measure_(measure), floor_(floor) {
  if (!(floor > 0.0 && floor <= 1.0)) throw std::invalid_argument("jump floor must lie in (0,1]");
  std::visit(
      Overloaded{
          [&](const XiMeasure::LambdaBeta& b) {
            rate_ = intensity_mass(measure, floor).value;
            const double p = b.a - 3.0;
            const auto density = [&](double y) {
              return std::pow(y, p) * std::pow(1.0 - y, b.b - 1.0);
            };
            const double split = std::max(floor, 0.5);
            if (floor < split) {
              const double scale = b.b >= 1.0 ? std::pow(1.0 - floor, b.b - 1.0)
                                              : std::pow(1.0 - split, b.b - 1.0);
              pieces_.push_back({floor, split, true, scale});
              piece_cumulative_.push_back(integrate(density, floor, split));
            }
            const double scale = b.a >= 3.0 ? 1.0 : std::pow(split, p);
            pieces_.push_back({split, 1.0, false, scale});
            const double prev = piece_cumulative_.empty() ? 0.0 : piece_cumulative_.back();
            piece_cumulative_.push_back(prev + integrate(density, split, 1.0));
          },
          [&](const XiMeasure::StickBreaking& s) { rate_ = s.total_mass / (floor * floor); },
          [&](const auto&) {
            for (const auto& a : measure.atoms()) {
              if (a.point.largest() < floor) continue;
              rate_ += a.weight / a.point.sum_squares();
              atoms_.push_back(a);
              cumulative_.push_back(rate_);
            }
          },
      },
      measure.parameters());
}

std::optional<SimplexPoint> JumpSampler::draw(Rng& rng) const {
  if (rate_ <= 0.0) return std::nullopt;
  switch (measure_.family()) {
    case MeasureFamily::finite_atomic:
    case MeasureFamily::lambda_dirac: {
      const double u = uniform01(rng) * rate_;
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto idx = std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
      return atoms_[idx].point;
    }
    case MeasureFamily::lambda_beta: {
      const auto& b = std::get<XiMeasure::LambdaBeta>(measure_.parameters());
      const double u = uniform01(rng) * piece_cumulative_.back();
      const auto it = std::upper_bound(piece_cumulative_.begin(), piece_cumulative_.end(), u);
      const auto& piece =
          pieces_[std::min<std::size_t>(it - piece_cumulative_.begin(), pieces_.size() - 1)];
      for (;;) {
        double y;
        double accept;
        if (piece.power_proposal) {
          y = sample_power(rng, b.a - 3.0, piece.lo, piece.hi);
          accept = std::pow(1.0 - y, b.b - 1.0) / piece.accept_scale;
        } else {
          y = 1.0 - (1.0 - piece.lo) * std::pow(uniform01(rng), 1.0 / b.b);
          accept = std::pow(y, b.a - 3.0) / piece.accept_scale;
        }
        if (y >= floor_ && y <= 1.0 && uniform01(rng) < accept) return SimplexPoint({y});
      }
    }
    case MeasureFamily::stick_breaking: {
      const SimplexPoint z = sample_point(measure_.normalized(), rng);
      if (z.largest() < floor_) return std::nullopt;
      if (uniform01(rng) >= floor_ * floor_ / z.sum_squares()) return std::nullopt;
      return z;
    }
  }
  return std::nullopt;
}

}  // namespace xiwf
