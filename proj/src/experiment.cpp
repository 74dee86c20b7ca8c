#include "xiwf/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "xiwf/discrete.hpp"
#include "xiwf/dual.hpp"
#include "xiwf/errors.hpp"
#include "xiwf/fixation.hpp"
#include "xiwf/limit.hpp"
#include "xiwf/parallel.hpp"

namespace xiwf {

namespace {

using json = nlohmann::ordered_json;

enum Stream : std::uint64_t {
  kStreamForwardPaths = 51,
  kStreamAncestryPaths = 52,
  kStreamSdePaths = 53,
  kStreamDualPaths = 54,
};

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json estimate_json(const McEstimate& e) {
  json j;
  j["mean"] = e.mean();
  j["std_error"] = e.std_error();
  j["replicates"] = e.replicates();
  const auto ci = e.interval(0.95);
  j["interval95"] = {ci.lower, ci.upper};
  return j;
}

int initial_count(const DiscreteParams& p, double x) {
  return static_cast<int>(std::lround(x * p.population));
}

Report forward(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.discrete();
  const int start = initial_count(p, cfg.run.x);
  std::vector<std::vector<int>> paths(cfg.run.replicates);
  parallel_for(paths.size(), [&](std::size_t i) {
    Rng rng = make_rng(cfg.run.seed, kStreamForwardPaths, i);
    paths[i] = forward_trajectory(p, start, cfg.run.generations, rng);
  });
  r.table.columns = {"replicate", "generation", "type0", "frequency"};
  McEstimate final_freq;
  std::uint64_t fixed = 0, lost = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t g = 0; g < paths[i].size(); ++g)
      r.table.rows.push_back({std::int64_t(i), std::int64_t(g), std::int64_t(paths[i][g]),
                              double(paths[i][g]) / p.population});
    const int last = paths[i].back();
    final_freq.add(double(last) / p.population);
    fixed += last == p.population;
    lost += last == 0;
  }
  r.results["initial_type0"] = start;
  r.results["final_frequency"] = estimate_json(final_freq);
  r.results["fixed_type0"] = fixed;
  r.results["lost_type0"] = lost;
  return r;
}

Report ancestry(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.discrete();
  const int start = static_cast<int>(cfg.run.n);
  if (start > p.population) throw ConfigError("run.n", "must not exceed model.N");
  std::vector<std::vector<int>> paths(cfg.run.replicates);
  parallel_for(paths.size(), [&](std::size_t i) {
    Rng rng = make_rng(cfg.run.seed, kStreamAncestryPaths, i);
    paths[i] = ancestral_trajectory(p, start, cfg.run.generations, rng);
  });
  r.table.columns = {"replicate", "generation", "lineages"};
  McEstimate final_count;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (std::size_t g = 0; g < paths[i].size(); ++g)
      r.table.rows.push_back({std::int64_t(i), std::int64_t(g), std::int64_t(paths[i][g])});
    final_count.add(paths[i].back());
  }
  r.results["final_lineages"] = estimate_json(final_count);
  return r;
}

Report duality_discrete(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.discrete();
  const int start = initial_count(p, cfg.run.x);
  const int n = static_cast<int>(cfg.run.n);
  if (n > p.population) throw ConfigError("run.n", "must not exceed model.N");
  const SamplingMode mode = cfg.run.mode == "exact"
                                ? SamplingMode::exact()
                                : SamplingMode::monte_carlo(cfg.run.replicates, cfg.run.seed);
  DualityReport d;
  try {
    d = sampling_duality_check(p, start, n, cfg.run.generations, mode);
  } catch (const BudgetExceeded& e) {
    throw ConfigError("run.mode", std::string(e.what()) + "; use run.mode = mc");
  }
  r.table.columns = {"type0", "n", "generations", "lhs", "rhs", "gap", "tolerance", "pass"};
  r.table.rows.push_back({std::int64_t(start), std::int64_t(n), std::int64_t(cfg.run.generations),
                          d.lhs, d.rhs, d.gap, d.tolerance, std::string(d.pass ? "pass" : "fail")});
  r.results["verdict"] = d.pass ? "pass" : "fail";
  r.results["mode"] = d.exact ? "exact" : "mc";
  r.results["lhs"] = d.lhs;
  r.results["rhs"] = d.rhs;
  r.results["gap"] = d.gap;
  r.results["tolerance"] = d.tolerance;
  if (!d.exact) {
    r.results["lhs_std_error"] = d.lhs_se;
    r.results["rhs_std_error"] = d.rhs_se;
  }
  r.exit_code = d.pass ? kExitOk : kExitVerdictFail;
  return r;
}

Report sde(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  std::vector<SdePath> paths(cfg.run.replicates);
  PathOptions options{cfg.run.record_every, false};
  parallel_for(paths.size(), [&](std::size_t i) {
    Rng rng = make_rng(cfg.run.seed, kStreamSdePaths, i);
    paths[i] = simulate_path(p, cfg.run.x, cfg.run.horizon, cfg.run.dt, rng, options);
  });
  r.table.columns = {"replicate", "time", "x"};
  McEstimate terminal;
  std::uint64_t substeps = 0, clamps = 0, jumps = 0, below = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& path = paths[i];
    for (std::size_t k = 0; k < path.times.size(); ++k)
      r.table.rows.push_back({std::int64_t(i), path.times[k], path.values[k]});
    terminal.add(path.final_value());
    substeps += path.substeps;
    clamps += path.clamps;
    jumps += path.jump_count;
    below += path.final_value() < 0.01;
  }
  r.results["terminal_mean"] = estimate_json(terminal);
  r.results["fraction_below_0.01"] = double(below) / double(paths.size());
  const double clamp_fraction = substeps == 0 ? 0.0 : double(clamps) / double(substeps);
  r.diagnostics["jump_rate"] = p.jump_rate();
  r.diagnostics["jumps"] = jumps;
  r.diagnostics["substeps"] = substeps;
  r.diagnostics["clamp_fraction"] = clamp_fraction;
  if (clamp_fraction > 1e-3) r.diagnostics["warning"] = "clamp fraction above 1e-3; reduce run.dt";
  return r;
}

Report dual_ctmc(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  std::vector<DualPath> paths(cfg.run.replicates);
  parallel_for(paths.size(), [&](std::size_t i) {
    Rng rng = make_rng(cfg.run.seed, kStreamDualPaths, i);
    paths[i] = simulate_dual(p, cfg.run.n, cfg.run.horizon, rng, {cfg.run.cap, true});
  });
  r.table.columns = {"replicate", "time", "event", "state"};
  std::uint64_t escaped = 0;
  McEstimate final_state;
  std::map<std::string, std::uint64_t> kinds;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& ev : paths[i].log) {
      r.table.rows.push_back({std::int64_t(i), ev.time, std::string(to_string(ev.kind)),
                              paths[i].escaped && &ev == &paths[i].log.back()
                                  ? Cell(std::string("escaped"))
                                  : Cell(std::int64_t(ev.state))});
      ++kinds[to_string(ev.kind)];
    }
    escaped += paths[i].escaped;
    if (!paths[i].escaped) final_state.add(double(paths[i].final_state));
  }
  r.results["escape_fraction"] = double(escaped) / double(paths.size());
  r.results["final_state"] = estimate_json(final_state);
  json counts = json::object();
  for (const auto& [k, v] : kinds) counts[k] = v;
  r.results["event_counts"] = counts;
  const auto rates = event_rates(p, cfg.run.n);
  r.diagnostics["initial_rates"] = {{"branch_total", rates.branch_total},
                                    {"kingman", rates.kingman},
                                    {"xi_candidate", rates.xi_candidate}};
  return r;
}

Report duality_limit(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  const int n = static_cast<int>(cfg.run.n);
  const McEstimate lhs =
      terminal_moment(p, cfg.run.x, n, cfg.run.horizon, cfg.run.dt, cfg.run.replicates, cfg.run.seed);
  const McEstimate rhs =
      dual_moment(p, cfg.run.n, cfg.run.x, cfg.run.horizon, cfg.run.replicates, cfg.run.seed, cfg.run.cap);
  const double z = z_score(lhs, rhs);
  const bool pass = z <= 3.0;
  r.table.columns = {"x", "n", "T", "forward", "forward_se", "dual", "dual_se", "z", "pass"};
  r.table.rows.push_back({cfg.run.x, std::int64_t(n), cfg.run.horizon, lhs.mean(), lhs.std_error(),
                          rhs.mean(), rhs.std_error(), z, std::string(pass ? "pass" : "fail")});
  r.results["verdict"] = pass ? "pass" : "fail";
  r.results["forward"] = estimate_json(lhs);
  r.results["dual"] = estimate_json(rhs);
  r.results["z_score"] = z;
  r.exit_code = pass ? kExitOk : kExitVerdictFail;
  return r;
}

Report kappa_star(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  if (!p.xi) throw ConfigError("model.xi.family", "kappa-star needs an event measure");
  const double beta = p.pi.beta();
  const KappaStarReport k = kappa_star_mc(*p.xi, beta, cfg.run.replicates, cfg.run.seed);
  r.table.columns = {"beta", "kappa_star", "std_error", "replicates", "closed_form"};
  std::optional<double> closed;
  if (const auto* d = std::get_if<XiMeasure::LambdaDirac>(&p.xi->parameters()); d && d->y < 1.0)
    closed = kappa_star_lambda_dirac(d->y, beta);
  r.table.rows.push_back({beta, k.estimate.mean(), k.estimate.std_error(),
                          std::int64_t(k.estimate.replicates()),
                          closed ? Cell(*closed) : Cell(std::string("")) });
  r.results["kappa_star"] = estimate_json(k.estimate);
  r.results["beta"] = beta;
  if (closed) r.results["closed_form"] = *closed;
  r.results["kappa"] = p.kappa;
  r.results["regime"] = p.kappa < k.estimate.mean() ? "stationary" : "extinction";
  r.diagnostics["tail_share_top_0.1pct"] = k.tail_share;
  if (k.possible_infinite_variance) r.diagnostics["warning"] = "possible infinite variance";
  return r;
}

json recurrence_json(const RecurrenceReport& rec) {
  return {{"verdict", to_string(rec.verdict)},
          {"escape_fraction", rec.escape_fraction},
          {"mean_returns_to_1", rec.mean_returns},
          {"mean_return_time_to_1",
           std::isfinite(rec.mean_return_time_to_1) ? json(rec.mean_return_time_to_1) : json(nullptr)},
          {"replicates", rec.replicates}};
}

Report recurrence(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  const RecurrenceReport rec =
      recurrence_probe(p, cfg.run.n, cfg.run.horizon, cfg.run.cap, cfg.run.replicates, cfg.run.seed);
  r.table.columns = {"verdict", "escape_fraction", "mean_returns_to_1", "mean_return_time_to_1"};
  r.table.rows.push_back({std::string(to_string(rec.verdict)), rec.escape_fraction, rec.mean_returns,
                          rec.mean_return_time_to_1});
  r.results = recurrence_json(rec);
  return r;
}

Report fixation(const ExperimentConfig& cfg, Report r) {
  const auto& p = cfg.limit();
  const RecurrenceReport rec =
      recurrence_probe(p, cfg.run.n, cfg.run.horizon, cfg.run.cap, cfg.run.replicates, cfg.run.seed);
  r.diagnostics["recurrence"] = recurrence_json(rec);
  r.diagnostics["standard_error"] = "delta method across replicate occupation measures";
  StationaryEstimate stationary;
  if (rec.verdict == RecurrenceVerdict::recurrent_looking) {
    if (!(cfg.run.horizon > cfg.run.burn_in))
      throw ConfigError("run.burn_in", "must be below run.T");
    stationary = stationary_estimate(p, cfg.run.n, cfg.run.burn_in, cfg.run.horizon,
                                     cfg.run.replicates, cfg.run.seed, cfg.run.cap);
    r.diagnostics["stationary_escape_fraction"] = stationary.escape_fraction();
  }
  r.table.columns = {"x", "p", "std_error"};
  try {
    json values = json::array();
    for (int i = 0; i <= 10; ++i) {
      const double x = i / 10.0;
      const McEstimate e = fixation_probability(x, rec, stationary);
      r.table.rows.push_back({x, e.mean(), e.std_error()});
    }
    const McEstimate at = fixation_probability(cfg.run.x, rec, stationary);
    r.results["x"] = cfg.run.x;
    r.results["p"] = estimate_json(at);
    r.results["verdict"] = to_string(rec.verdict);
  } catch (const FixationRefused& e) {
    r.table.rows.clear();
    r.results["verdict"] = "refused";
    r.diagnostics["refusal"] = e.what();
    r.exit_code = kExitVerdictFail;
  }
  return r;
}

using Handler = std::function<Report(const ExperimentConfig&, Report)>;

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> table = {
      {"forward", forward},           {"ancestry", ancestry},
      {"duality-discrete", duality_discrete},
      {"sde", sde},                   {"dual-ctmc", dual_ctmc},
      {"duality-limit", duality_limit},
      {"kappa-star", kappa_star},     {"fixation", fixation},
      {"recurrence", recurrence}};
  return table;
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) out += format_real(v);
            else if constexpr (std::is_same_v<T, std::int64_t>) out += std::to_string(v);
            else out += v;
          },
          row[i]);
    }
    out += "\n";
  }
  return out;
}

nlohmann::ordered_json Table::to_json() const {
  json rows_json = json::array();
  for (const auto& row : rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size() && i < columns.size(); ++i)
      std::visit([&](const auto& v) { obj[columns[i]] = v; }, row[i]);
    rows_json.push_back(std::move(obj));
  }
  return rows_json;
}

std::string Report::to_json() const {
  json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  json res = results;
  res["rows"] = table.to_json();
  j["results"] = std::move(res);
  j["diagnostics"] = diagnostics;
  return j.dump(2) + "\n";
}

const std::vector<std::string>& experiment_commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : handlers()) out.push_back(name);
    return out;
  }();
  return names;
}

Report run_experiment(const std::string& command, const ExperimentConfig& config) {
  for (const auto& [name, fn] : handlers()) {
    if (name != command) continue;
    Report r;
    r.command = command;
    r.config_hash = config.hash;
    r.seed = config.run.seed;
    return fn(config, std::move(r));
  }
  throw ConfigError("command", "unknown command '" + command + "'");
}

std::vector<std::string> write_report(const Report& report, const std::string& dir,
                                      const std::string& format) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& ext, const std::string& body) {
    const std::string path = (std::filesystem::path(dir) / (report.command + ext)).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    written.push_back(path);
  };
  if (format == "csv") emit(".csv", report.table.to_csv());
  emit(".json", report.to_json());
  return written;
}

}  // namespace xiwf
