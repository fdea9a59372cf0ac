#include "ledsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace ledsim {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const ConfigKey* find_key(const std::string& qualified) {
  for (const auto& key : config_keys()) {
    if (qualified == std::string(key.section) + "." + key.name) return &key;
  }
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"topology", "graph", "graph", "ring", "ring | grid | complete | erdos_renyi"},
      {"topology", "n", "n", "", "number of nodes (defaults to problem.nodes)"},
      {"topology", "rows", "rows", "0", "grid rows"},
      {"topology", "cols", "cols", "0", "grid columns"},
      {"topology", "edge_prob", "edge-prob", "0.3", "erdos_renyi edge probability"},
      {"topology", "graph_seed", "graph-seed", "", "erdos_renyi seed (defaults to harness.seed)"},
      {"topology", "weights", "weights", "metropolis", "combination rule (metropolis)"},
      {"topology", "lazy", "lazy", "false", "use 0.5 (W + I)"},
      {"problem", "kind", "problem", "logistic", "logistic | quadratic"},
      {"problem", "nodes", "nodes", "15", "number of nodes N"},
      {"problem", "dim", "dim", "5", "model dimension m"},
      {"problem", "samples", "samples", "1000", "samples per node S (logistic)"},
      {"problem", "eta", "eta", "0.01", "regularization weight (logistic)"},
      {"problem", "sigma_u", "sigma-u", "6", "shared model spread (logistic)"},
      {"problem", "sigma_h", "sigma-h", "2", "per-node shift spread (logistic)"},
      {"problem", "feature_scale", "feature-scale", "5", "feature std (logistic)"},
      {"problem", "mu", "mu", "0.1", "smallest average curvature (quadratic)"},
      {"problem", "L", "L", "1", "largest average curvature (quadratic)"},
      {"problem", "heterogeneity", "heterogeneity", "1", "linear-term spread (quadratic)"},
      {"problem", "hessian_spread", "hessian-spread", "0.5", "relative Hessian spread (quadratic)"},
      {"problem", "sigma", "sigma", "0.001", "gradient noise std"},
      {"problem", "seed", "problem-seed", "", "data seed (defaults to harness.seed)"},
      {"algorithm", "algo", "algo", "led", "algorithm identifier"},
      {"algorithm", "dual_init", "dual-init", "dual_from_mixing", "dual_from_mixing | zero"},
      {"hyperparams", "alpha", "alpha", "", "local stepsize (defaults to the practical stepsize)"},
      {"hyperparams", "beta", "beta", "", "dual scale (defaults to 1/tau)"},
      {"hyperparams", "gamma", "gamma", "1", "server / global stepsize"},
      {"hyperparams", "tau", "tau", "1", "local steps per round"},
      {"hyperparams", "p", "p", "1", "Scaffnew communication probability"},
      {"hyperparams", "zeta", "zeta", "", "Scaffnew dual stepsize (defaults to p/alpha)"},
      {"hyperparams", "eta_pd", "eta-pd", "1", "PDFP2O stepsize"},
      {"harness", "rounds", "rounds", "100", "communication rounds R"},
      {"harness", "num_runs", "runs", "100", "independent runs to average"},
      {"harness", "seed", "seed", "0", "base seed"},
      {"harness", "cadence", "cadence", "1", "record every k rounds"},
      {"harness", "jobs", "jobs", "1", "worker threads across runs"},
      {"harness", "target", "target", "1e-4", "target grad_norm_sq for tune / compare"},
      {"harness", "algos", "algos", "", "comma-separated algorithms for compare"},
      {"harness", "grid_points", "grid-points", "20", "stepsizes in the tuning grid"},
      {"harness", "grid_decades", "grid-decades", "4", "decades spanned by the tuning grid"},
      {"harness", "prune", "prune", "true", "abandon grid points that can no longer win"},
      {"harness", "target_rule", "target-rule", "settled", "settled (stays below through R) | first (first dip)"},
  };
  return keys;
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& source) {
  ConfigFile cfg;
  cfg.source_ = source;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                     [&](const ConfigKey& k) { return section == k.section; });
      if (!known) throw ConfigError(source, line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(source, line_no, "key '" + key + "' appears before any [section]");
    const std::string qualified = section + "." + key;
    if (find_key(qualified) == nullptr) throw ConfigError(source, line_no, "unknown key '" + qualified + "'");
    if (cfg.values_.count(qualified) != 0) throw ConfigError(source, line_no, "duplicate key '" + qualified + "'");
    cfg.values_[qualified] = value;
    cfg.lines_[qualified] = line_no;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse(in, path);
}

void ConfigFile::set(const std::string& qualified, const std::string& value) {
  if (find_key(qualified) == nullptr) throw ConfigError(source_, 0, "unknown key '" + qualified + "'");
  values_[qualified] = value;
  lines_.erase(qualified);
}

bool ConfigFile::has(const std::string& qualified) const { return values_.count(qualified) != 0; }

std::optional<std::string> ConfigFile::get(const std::string& qualified) const {
  if (auto it = values_.find(qualified); it != values_.end()) return it->second;
  const ConfigKey* key = find_key(qualified);
  if (key == nullptr) throw ConfigError(source_, 0, "unknown key '" + qualified + "'");
  if (*key->default_value == '\0') return std::nullopt;
  return std::string(key->default_value);
}

std::string ConfigFile::get_string(const std::string& qualified) const {
  auto v = get(qualified);
  if (!v) throw ConfigError(source_, 0, "missing required key '" + qualified + "'");
  return *v;
}

double ConfigFile::get_double(const std::string& qualified) const {
  const std::string text = get_string(qualified);
  const auto line_it = lines_.find(qualified);
  const int line = line_it == lines_.end() ? 0 : line_it->second;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(source_, line, "'" + qualified + "' expects a number, got '" + text + "'");
  }
}

long long ConfigFile::get_int(const std::string& qualified) const {
  const std::string text = get_string(qualified);
  const auto line_it = lines_.find(qualified);
  const int line = line_it == lines_.end() ? 0 : line_it->second;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(source_, line, "'" + qualified + "' expects an integer, got '" + text + "'");
  }
  return v;
}

bool ConfigFile::get_bool(const std::string& qualified) const {
  const std::string text = get_string(qualified);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  const auto line_it = lines_.find(qualified);
  throw ConfigError(source_, line_it == lines_.end() ? 0 : line_it->second,
                    "'" + qualified + "' expects true or false, got '" + text + "'");
}

std::vector<std::string> ConfigFile::echo() const {
  std::vector<std::string> lines;
  for (const auto& key : config_keys()) {
    const std::string qualified = std::string(key.section) + "." + key.name;
    if (auto v = get(qualified)) lines.push_back(qualified + "=" + *v);
  }
  return lines;
}

namespace {

// Wraps library exceptions so callers see one error type with the source.
template <class Fn>
auto as_config_error(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("<config>", 0, what + ": " + e.what());
  }
}

}  // namespace

GraphSpec graph_spec_from(const ConfigFile& cfg) {
  return as_config_error("topology", [&] {
    GraphSpec spec;
    spec.kind = parse_graph_kind(cfg.get_string("topology.graph"));
    spec.n = static_cast<int>(cfg.has("topology.n") ? cfg.get_int("topology.n") : cfg.get_int("problem.nodes"));
    spec.rows = static_cast<int>(cfg.get_int("topology.rows"));
    spec.cols = static_cast<int>(cfg.get_int("topology.cols"));
    spec.edge_prob = cfg.get_double("topology.edge_prob");
    spec.seed = static_cast<std::uint64_t>(cfg.has("topology.graph_seed") ? cfg.get_int("topology.graph_seed")
                                                                          : cfg.get_int("harness.seed"));
    if (cfg.get_string("topology.weights") != "metropolis") {
      throw std::invalid_argument("only metropolis weights are supported");
    }
    return spec;
  });
}

ProblemSpec problem_spec_from(const ConfigFile& cfg) {
  return as_config_error("problem", [&] {
    ProblemSpec spec;
    spec.kind = parse_problem_kind(cfg.get_string("problem.kind"));
    const int nodes = static_cast<int>(cfg.get_int("problem.nodes"));
    const int dim = static_cast<int>(cfg.get_int("problem.dim"));
    const double sigma = cfg.get_double("problem.sigma");
    spec.synth.nodes = nodes;
    spec.synth.dim = dim;
    spec.synth.samples = static_cast<int>(cfg.get_int("problem.samples"));
    spec.synth.eta = cfg.get_double("problem.eta");
    spec.synth.sigma_u = cfg.get_double("problem.sigma_u");
    spec.synth.sigma_h = cfg.get_double("problem.sigma_h");
    spec.synth.feature_scale = cfg.get_double("problem.feature_scale");
    spec.synth.sigma = sigma;
    spec.quadratic.nodes = nodes;
    spec.quadratic.dim = dim;
    spec.quadratic.mu = cfg.get_double("problem.mu");
    spec.quadratic.L = cfg.get_double("problem.L");
    spec.quadratic.heterogeneity = cfg.get_double("problem.heterogeneity");
    spec.quadratic.hessian_spread = cfg.get_double("problem.hessian_spread");
    spec.quadratic.sigma = sigma;
    if (cfg.has("problem.seed")) spec.seed = static_cast<std::uint64_t>(cfg.get_int("problem.seed"));
    if (spec.kind == ProblemKind::kLogistic) spec.synth.validate();
    else spec.quadratic.validate();
    return spec;
  });
}

HyperParams hyperparams_from(const ConfigFile& cfg) {
  return as_config_error("hyperparams", [&] {
    HyperParams h;
    h.tau = static_cast<int>(cfg.get_int("hyperparams.tau"));
    if (cfg.has("hyperparams.alpha")) h.alpha = cfg.get_double("hyperparams.alpha");
    if (cfg.has("hyperparams.beta")) h.beta = cfg.get_double("hyperparams.beta");
    h.gamma = cfg.get_double("hyperparams.gamma");
    h.p = cfg.get_double("hyperparams.p");
    if (cfg.has("hyperparams.zeta")) h.zeta = cfg.get_double("hyperparams.zeta");
    h.eta_pd = cfg.get_double("hyperparams.eta_pd");
    return h;
  });
}

RunSettings run_settings_from(const ConfigFile& cfg) {
  return as_config_error("harness", [&] {
    RunSettings s;
    s.algo = parse_algorithm(cfg.get_string("algorithm.algo"));
    s.dual_init = parse_dual_init(cfg.get_string("algorithm.dual_init"));
    s.hp = hyperparams_from(cfg);
    s.rounds = static_cast<int>(cfg.get_int("harness.rounds"));
    s.num_runs = static_cast<int>(cfg.get_int("harness.num_runs"));
    s.seed = static_cast<std::uint64_t>(cfg.get_int("harness.seed"));
    s.cadence = static_cast<int>(cfg.get_int("harness.cadence"));
    s.jobs = static_cast<int>(cfg.get_int("harness.jobs"));
    return s;
  });
}

ExperimentConfig experiment_from(const ConfigFile& cfg) {
  ExperimentConfig e;
  e.problem = problem_spec_from(cfg);
  e.topology = graph_spec_from(cfg);
  e.lazy = cfg.get_bool("topology.lazy");
  e.run = run_settings_from(cfg);
  if (e.topology.n != e.problem.synth.nodes) {
    throw ConfigError("<config>", 0, "topology.n must equal problem.nodes");
  }
  return e;
}

}  // namespace ledsim
