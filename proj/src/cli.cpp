#include "ledsim/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "ledsim/config.hpp"
#include "ledsim/harness.hpp"
#include "ledsim/topology.hpp"

namespace ledsim {

namespace {

using Overrides = std::map<std::string, std::string>;

std::string qualified(const ConfigKey& k) { return std::string(k.section) + "." + k.name; }

bool is_bool_key(const std::string& q) { return q == "topology.lazy" || q == "harness.prune"; }

// Registers one option per config key of the listed sections.
void add_key_options(CLI::App* cmd, Overrides& values, std::map<std::string, CLI::Option*>& opts,
                     const std::vector<std::string>& sections) {
  for (const auto& key : config_keys()) {
    if (std::find(sections.begin(), sections.end(), key.section) == sections.end()) continue;
    const std::string q = qualified(key);
    if (q == "harness.seed" || q == "harness.jobs") continue;  // global flags
    if (q == "harness.prune") {
      opts[q] = cmd->add_flag("--no-prune", "evaluate every grid point to the full round budget");
      continue;
    }
    if (q == "topology.lazy") {
      opts[q] = cmd->add_flag("--lazy", key.help);
      continue;
    }
    opts[q] = cmd->add_option(std::string("--") + key.flag, values[q], key.help);
  }
}

class Session {
 public:
  Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int execute(const std::vector<std::string>& args);

 private:
  ConfigFile effective(CLI::App* cmd) const;
  std::ostream& csv_stream(std::unique_ptr<std::ofstream>& file) const;
  std::ostream& report_stream() const { return out_path_ == "-" ? err_ : out_; }

  int cmd_spectra(const ConfigFile& cfg);
  int cmd_synth(const ConfigFile& cfg);
  int cmd_run(const ConfigFile& cfg);
  int cmd_tune(const ConfigFile& cfg);
  int cmd_compare(const ConfigFile& cfg);

  std::ostream& out_;
  std::ostream& err_;
  Overrides values_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_path_;
  std::string out_path_ = "-";
  std::string seed_;
  std::string jobs_;
  CLI::Option* seed_opt_ = nullptr;
  CLI::Option* jobs_opt_ = nullptr;
};

ConfigFile Session::effective(CLI::App* cmd) const {
  ConfigFile cfg;
  if (!config_path_.empty()) cfg = ConfigFile::load(config_path_);
  if (seed_opt_->count() > 0) cfg.set("harness.seed", seed_);
  if (jobs_opt_->count() > 0) cfg.set("harness.jobs", jobs_);
  for (const auto& [q, opt] : options_) {
    if (opt->count() == 0 || cmd->get_subcommands().size() > 0) continue;
    if (!cmd->get_option_no_throw(opt->get_name())) continue;
    if (q == "harness.prune") cfg.set(q, "false");
    else if (q == "topology.lazy") cfg.set(q, "true");
    else cfg.set(q, values_.at(q));
  }
  return cfg;
}

std::ostream& Session::csv_stream(std::unique_ptr<std::ofstream>& file) const {
  if (out_path_ == "-") return out_;
  file = std::make_unique<std::ofstream>(out_path_);
  if (!*file) throw std::runtime_error("cannot open output file '" + out_path_ + "'");
  return *file;
}

std::string print_number(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;  // eigen-solver dust
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

int Session::cmd_spectra(const ConfigFile& cfg) {
  GraphSpec spec = graph_spec_from(cfg);
  const MixingMatrix w = build_mixing(spec, cfg.get_bool("topology.lazy"));
  const Assumption1Report rep = validate_assumption1(w.weights());
  out_ << "n=" << w.n() << '\n'
       << "graph=" << to_string(spec.kind) << '\n'
       << "lazy=" << (cfg.get_bool("topology.lazy") ? "true" : "false") << '\n'
       << "mixing_rate=" << print_number(w.mixing_rate()) << '\n'
       << "spectral_norm=" << print_number(consensus_deviation_norm(w.weights())) << '\n'
       << "min_eigenvalue=" << print_number(w.min_eigenvalue()) << '\n'
       << "symmetric=" << (rep.symmetric ? "true" : "false") << '\n'
       << "doubly_stochastic=" << (rep.doubly_stochastic ? "true" : "false") << '\n'
       << "primitive=" << (rep.primitive ? "true" : "false") << '\n'
       << "positive_definite=" << (rep.positive_definite ? "true" : "false") << '\n';
  return kExitOk;
}

int Session::cmd_synth(const ConfigFile& cfg) {
  const ProblemSpec spec = problem_spec_from(cfg);
  if (spec.kind != ProblemKind::kLogistic) throw std::invalid_argument("synth writes logistic datasets only");
  const std::uint64_t seed = spec.seed.value_or(static_cast<std::uint64_t>(cfg.get_int("harness.seed")));
  const Problem problem = synth_logistic(spec.synth, seed);
  std::unique_ptr<std::ofstream> file;
  std::ostream& os = csv_stream(file);
  for (const auto& line : cfg.echo()) {
    if (line.rfind("problem.", 0) == 0 || line.rfind("harness.seed", 0) == 0) os << "# " << line << '\n';
  }
  os << "node,row";
  for (int k = 0; k < problem.dim(); ++k) os << ",h" << k;
  os << ",label\n";
  const auto& data = problem.datasets();
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index s = 0; s < data[i].features.rows(); ++s) {
      os << i << ',' << s;
      for (Eigen::Index k = 0; k < data[i].features.cols(); ++k) os << ',' << format_double(data[i].features(s, k));
      os << ',' << static_cast<int>(data[i].labels(s)) << '\n';
    }
  }
  report_stream() << "wrote " << data.size() << " datasets of " << spec.synth.samples << "x" << spec.synth.dim
                  << " features\n";
  return kExitOk;
}

struct Prepared {
  ExperimentConfig experiment;
  std::unique_ptr<Problem> problem;
  std::unique_ptr<MixingMatrix> mixing;
  std::vector<std::string> comments;
};

Prepared prepare(const ConfigFile& cfg) {
  Prepared p;
  p.experiment = experiment_from(cfg);
  p.problem = std::make_unique<Problem>(build_problem(p.experiment.problem, p.experiment.run.seed));
  p.mixing = std::make_unique<MixingMatrix>(build_mixing(p.experiment.topology, p.experiment.lazy));
  if (!cfg.has("hyperparams.alpha")) {
    p.experiment.run.hp.alpha = default_stepsize(p.problem->smoothness(), p.experiment.run.hp.tau,
                                                 p.experiment.run.rounds, p.problem->n_nodes());
  }
  p.comments = cfg.echo();
  p.comments.push_back("effective.alpha=" + format_double(p.experiment.run.hp.alpha));
  p.comments.push_back("effective.smoothness=" + format_double(p.problem->smoothness()));
  return p;
}

int Session::cmd_run(const ConfigFile& cfg) {
  Prepared p = prepare(cfg);
  const Trace trace = run_experiment(*p.problem, *p.mixing, p.experiment.run);
  {
    std::unique_ptr<std::ofstream> file;
    std::ostream& os = csv_stream(file);
    write_trace_csv(os, trace, p.comments);
  }
  std::ostream& rep = report_stream();
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    rep << "round=" << last.round << " grad_norm_sq=" << format_double(last.grad_norm_sq)
        << " consensus_err=" << format_double(last.consensus_err)
        << " vectors_per_link=" << format_double(last.vectors_per_link) << '\n';
  }
  if (trace.diverged) {
    rep << "diverged at round " << trace.diverged_at.value_or(-1) << '\n';
    return kExitDiverged;
  }
  return kExitOk;
}

TuneGrid grid_for(AlgorithmId algo, const Problem& problem, const ConfigFile& cfg) {
  return default_grid(algo, stability_estimate(problem.smoothness()), problem.n_nodes(),
                      static_cast<int>(cfg.get_int("harness.grid_points")), cfg.get_double("harness.grid_decades"));
}

int Session::cmd_tune(const ConfigFile& cfg) {
  Prepared p = prepare(cfg);
  const RunSettings& base = p.experiment.run;
  check_compatibility(base.algo, *p.mixing);
  const double target = cfg.get_double("harness.target");
  const TuneResult result = tune_to_target(*p.problem, *p.mixing, base, target, grid_for(base.algo, *p.problem, cfg),
                                           cfg.get_bool("harness.prune"),
                                           parse_target_rule(cfg.get_string("harness.target_rule")));
  {
    std::unique_ptr<std::ofstream> file;
    std::ostream& os = csv_stream(file);
    write_tune_csv(os, result, p.comments);
  }
  std::ostream& rep = report_stream();
  if (const GridPoint* best = result.best()) {
    rep << "best alpha=" << format_double(best->hp.alpha) << " gamma=" << format_double(best->hp.gamma)
        << " rounds_to_target=" << *best->rounds_to_target << '\n';
  } else {
    rep << "target " << format_double(target) << " not achieved within " << base.rounds << " rounds\n";
  }
  return kExitOk;
}

std::vector<AlgorithmId> parse_algo_list(const std::string& text) {
  std::vector<AlgorithmId> algos;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) algos.push_back(parse_algorithm(item));
  }
  return algos;
}

int Session::cmd_compare(const ConfigFile& cfg) {
  const auto list = cfg.get("harness.algos");
  const std::vector<AlgorithmId> algos = list ? parse_algo_list(*list) : std::vector<AlgorithmId>{};
  if (algos.empty()) {
    err_ << "compare: --algos needs at least one algorithm\n";
    return kExitUsage;
  }
  Prepared p = prepare(cfg);
  std::vector<CompareEntry> entries;
  for (AlgorithmId algo : algos) {
    check_compatibility(algo, *p.mixing);
    CompareEntry e;
    e.settings = p.experiment.run;
    e.settings.algo = algo;
    e.grid = grid_for(algo, *p.problem, cfg);
    entries.push_back(std::move(e));
  }
  const double target = cfg.get_double("harness.target");
  const auto rows = compare(*p.problem, *p.mixing, entries, target, cfg.get_bool("harness.prune"),
                            parse_target_rule(cfg.get_string("harness.target_rule")));
  {
    std::unique_ptr<std::ofstream> file;
    std::ostream& os = csv_stream(file);
    write_compare_csv(os, rows, p.comments);
  }
  std::ostream& rep = report_stream();
  for (const auto& row : rows) {
    rep << to_string(row.algo) << ": ";
    if (row.rounds_to_target) {
      rep << "rounds_to_target=" << *row.rounds_to_target
          << " vectors_to_target=" << format_double(*row.vectors_to_target) << '\n';
    } else {
      rep << "not achieved\n";
    }
  }
  return kExitOk;
}

int Session::execute(const std::vector<std::string>& args) {
  CLI::App app{"Decentralized optimization simulator", "ledsim"};
  app.require_subcommand(1);
  app.add_option("--config", config_path_, "key=value config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_path_, "output path ('-' for stdout)");
  seed_opt_ = app.add_option("--seed", seed_, "base seed");
  jobs_opt_ = app.add_option("--jobs", jobs_, "worker threads across runs");
  app.fallthrough();

  auto* spectra = app.add_subcommand("spectra", "spectral report of a combination matrix");
  auto* synth = app.add_subcommand("synth", "write synthetic logistic datasets as CSV");
  auto* run = app.add_subcommand("run", "run one experiment and write its trace CSV");
  auto* tune = app.add_subcommand("tune", "tune the stepsize to reach a target error");
  auto* cmp = app.add_subcommand("compare", "tune several algorithms and tabulate the cost to target");

  // Each subcommand gets its own storage so repeated flags do not collide.
  std::map<CLI::App*, std::map<std::string, CLI::Option*>> per_cmd;
  std::map<CLI::App*, Overrides> per_values;
  const std::vector<std::string> all = {"topology", "problem", "algorithm", "hyperparams", "harness"};
  add_key_options(spectra, per_values[spectra], per_cmd[spectra], {"topology"});
  add_key_options(synth, per_values[synth], per_cmd[synth], {"problem"});
  add_key_options(run, per_values[run], per_cmd[run], all);
  add_key_options(tune, per_values[tune], per_cmd[tune], all);
  add_key_options(cmp, per_values[cmp], per_cmd[cmp], all);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out_ << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err_ << e.what() << '\n';
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) err_ << sub->help();
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  options_ = per_cmd[cmd];
  values_ = per_values[cmd];
  try {
    ConfigFile cfg = effective(cmd);
    if (cmd == spectra) {
      if (!cfg.has("topology.n")) cfg.set("topology.n", "15");
      return cmd_spectra(cfg);
    }
    if (cmd == synth) return cmd_synth(cfg);
    if (cmd == run) return cmd_run(cfg);
    if (cmd == tune) return cmd_tune(cfg);
    return cmd_compare(cfg);
  } catch (const std::exception& e) {
    err_ << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session session(out, err);
  return session.execute(args);
}

}  // namespace ledsim
