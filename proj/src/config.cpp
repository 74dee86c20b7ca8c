#include "xiwf/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace xiwf {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

double parse_real(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(key, "expected a real number, got '" + value + "'");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
  return v;
}

template <class Fn>
auto checked(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
    if (config.has(key)) throw ConfigError(key, "duplicate key");
    config.entries_[key] = value;
  }
  return config;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string ConfigFile::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key, "missing required key");
  read_.insert(key);
  return it->second;
}

std::string ConfigFile::text(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  read_.insert(key);
  return it->second;
}

double ConfigFile::real(const std::string& key) const { return parse_real(key, text(key)); }

double ConfigFile::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

std::uint64_t ConfigFile::count(const std::string& key) const {
  return parse_count(key, text(key));
}

std::uint64_t ConfigFile::count(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::vector<double> ConfigFile::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(text(key), ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

std::string ConfigFile::canonical() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const ConfigFile& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  ConfigFile content = config;
  content.erase("run.seed");
  for (const unsigned char c : content.canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const DiscreteParams& ExperimentConfig::discrete() const {
  if (!is_discrete()) throw ConfigError("model.kind", "command needs model.kind = discrete");
  return std::get<DiscreteParams>(model);
}

const LimitParams& ExperimentConfig::limit() const {
  if (is_discrete()) throw ConfigError("model.kind", "command needs model.kind = limit");
  return std::get<LimitParams>(model);
}

// <prefix>.law = neutral | geometric | dirac | pmf. For model.pi the law is
// read as the offspring law K* (dirac k, pmf over 1, 2, ...); for model.q it
// is the potential-parent law K.
SelectionLaw parse_selection(const ConfigFile& config, const std::string& prefix) {
  const bool offspring = prefix == "model.pi";
  const std::string law_key = prefix + ".law";
  const std::string law = config.text(law_key, offspring ? "dirac" : "neutral");
  if (law == "neutral") {
    if (offspring) throw ConfigError(law_key, "offspring law cannot be neutral");
    return SelectionLaw::neutral();
  }
  if (law == "geometric") {
    const std::string key = prefix + ".s";
    return checked(key, [&] { return SelectionLaw::geometric(config.real(key)); });
  }
  if (law == "dirac") {
    const std::string key = prefix + ".k";
    const std::uint64_t k = config.count(key, 1);
    if (k < 1 || k > 1000) throw ConfigError(key, "must lie in [1, 1000]");
    if (offspring) return SelectionLaw::offspring_dirac(static_cast<unsigned>(k));
    std::vector<double> pmf(k, 0.0);
    pmf.back() = 1.0;
    return SelectionLaw::explicit_pmf(std::move(pmf));
  }
  if (law == "pmf") {
    const std::string key = prefix + ".pmf";
    const double at_inf = config.real(prefix + ".at_inf", 0.0);
    auto weights = config.reals(key);
    return checked(key, [&] {
      return offspring ? SelectionLaw::from_branching(1.0, std::move(weights), at_inf)
                       : SelectionLaw::explicit_pmf(std::move(weights), at_inf);
    });
  }
  throw ConfigError(law_key, "unknown law '" + law + "' (neutral, geometric, dirac, pmf)");
}

// <prefix>.family = none | atomic | lambda_dirac | lambda_beta | stick.
// Atoms are written "w: z1, z2; w: z1".
std::optional<XiMeasure> parse_xi(const ConfigFile& config, const std::string& prefix) {
  const std::string family_key = prefix + ".family";
  const std::string family = config.text(family_key, "none");
  const std::string mass_key = prefix + ".mass";
  const double mass = config.real(mass_key, 1.0);
  if (family == "none") return std::nullopt;
  if (family == "lambda_dirac") {
    const std::string key = prefix + ".y";
    return checked(key, [&] { return XiMeasure::lambda_dirac(config.real(key), mass); });
  }
  if (family == "lambda_beta") {
    const std::string key = prefix + ".a";
    return checked(key, [&] {
      return XiMeasure::lambda_beta(config.real(key), config.real(prefix + ".b"), mass);
    });
  }
  if (family == "atomic") {
    const std::string key = prefix + ".atoms";
    std::vector<Atom> atoms;
    for (const auto& item : split(config.text(key), ';')) {
      if (item.empty()) continue;
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError(key, "atom '" + item + "' lacks 'weight:'");
      const double weight = parse_real(key, trim(item.substr(0, colon)));
      std::vector<double> masses;
      for (const auto& z : split(item.substr(colon + 1), ',')) masses.push_back(parse_real(key, z));
      atoms.push_back(checked(key, [&] { return Atom{weight, SimplexPoint(masses)}; }));
    }
    return checked(key, [&] { return XiMeasure::finite_atomic(std::move(atoms)); });
  }
  if (family == "stick") {
    const std::string key = prefix + ".stick";
    StickLaw law;
    const std::string kind = config.text(key, "uniform");
    if (kind == "beta") {
      law.kind = StickLaw::Kind::beta;
      law.a = config.real(prefix + ".stick_a");
      law.b = config.real(prefix + ".stick_b");
    } else if (kind != "uniform") {
      throw ConfigError(key, "unknown stick law '" + kind + "'");
    }
    return checked(key, [&] { return XiMeasure::stick_breaking(law, mass); });
  }
  throw ConfigError(family_key, "unknown family '" + family +
                                    "' (none, atomic, lambda_dirac, lambda_beta, stick)");
}

namespace {

DiscreteParams build_discrete(const ConfigFile& config) {
  const std::uint64_t n = config.count("model.N");
  if (n < 2 || n > 100000) throw ConfigError("model.N", "must lie in [2, 100000]");
  const double gamma = config.real("model.gamma", 0.0);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("model.gamma", "must lie in [0,1]");
  SelectionLaw q = parse_selection(config, "model.q");
  auto xi = parse_xi(config, "model.xi");
  if (!xi) {
    if (gamma > 0.0) throw ConfigError("model.xi.family", "required when model.gamma > 0");
    xi = XiMeasure::lambda_dirac(0.5);
  }
  return checked("model", [&] {
    return DiscreteParams(static_cast<int>(n), gamma, std::move(q), *xi);
  });
}

LimitParams build_limit(const ConfigFile& config) {
  const double kappa = config.real("model.kappa", 0.0);
  if (!(kappa >= 0.0)) throw ConfigError("model.kappa", "must be >= 0");
  const double sigma = config.real("model.sigma", 0.0);
  if (!(sigma >= 0.0)) throw ConfigError("model.sigma", "must be >= 0");
  const double floor = config.real("model.epsilon", 1e-3);
  if (!(floor > 0.0 && floor <= 1.0)) throw ConfigError("model.epsilon", "must lie in (0,1]");
  SelectionLaw pi = parse_selection(config, "model.pi");
  auto xi = parse_xi(config, "model.xi");
  return checked("model", [&] { return LimitParams(kappa, sigma, std::move(pi), xi, floor); });
}

}  // namespace

std::vector<std::string> ConfigFile::unread() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_)
    if (!read_.count(key)) out.push_back(key);
  return out;
}

ExperimentConfig build_experiment(const ConfigFile& config) {
  config.forget_reads();
  const std::string kind = config.text("model.kind");
  for (const auto& [key, value] : config.entries()) {
    if (key.rfind("model.", 0) != 0 && key.rfind("run.", 0) != 0 && key.rfind("output.", 0) != 0)
      throw ConfigError(key, "unknown block (expected model.*, run.* or output.*)");
  }
  RunBlock run;
  run.seed = config.count("run.seed");
  run.replicates = config.count("run.replicates", run.replicates);
  if (run.replicates == 0) throw ConfigError("run.replicates", "must be positive");
  run.generations = static_cast<int>(config.count("run.generations", run.generations));
  run.horizon = config.real("run.T", run.horizon);
  if (!(run.horizon > 0.0)) throw ConfigError("run.T", "must be positive");
  run.dt = config.real("run.dt", run.dt);
  if (!(run.dt > 0.0 && run.dt <= 1e-2)) throw ConfigError("run.dt", "must lie in (0, 0.01]");
  run.burn_in = config.real("run.burn_in", run.burn_in);
  if (!(run.burn_in >= 0.0)) throw ConfigError("run.burn_in", "must be >= 0");
  run.cap = config.count("run.cap", run.cap);
  if (run.cap < 100) throw ConfigError("run.cap", "must be >= 100");
  run.x = config.real("run.x", run.x);
  if (!(run.x >= 0.0 && run.x <= 1.0)) throw ConfigError("run.x", "must lie in [0,1]");
  run.n = config.count("run.n", run.n);
  if (run.n < 1) throw ConfigError("run.n", "must be >= 1");
  run.mode = config.text("run.mode", run.mode);
  if (run.mode != "exact" && run.mode != "mc") throw ConfigError("run.mode", "expected exact or mc");
  run.record_every = config.count("run.record_every", run.record_every);

  OutputBlock output;
  output.dir = config.text("output.dir", output.dir);
  output.format = config.text("output.format", output.format);
  if (output.format != "csv" && output.format != "json")
    throw ConfigError("output.format", "expected csv or json");

  std::variant<DiscreteParams, LimitParams> model = [&]() -> std::variant<DiscreteParams, LimitParams> {
    if (kind == "discrete") return build_discrete(config);
    if (kind == "limit") return build_limit(config);
    throw ConfigError("model.kind", "expected discrete or limit, got '" + kind + "'");
  }();
  if (const auto stray = config.unread(); !stray.empty())
    throw ConfigError(stray.front(), "unused key for model.kind = " + kind);
  return {std::move(model), run, output, config_hash(config)};
}

}  // namespace xiwf
