#include "ledsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "ledsim/methods.hpp"

namespace ledsim {

namespace {

struct Sample {
  double grad_norm_sq = 0.0;
  double consensus_err = 0.0;
  double fgap = 0.0;
  double dist_sq = 0.0;
  double vectors = 0.0;
};

struct RunLog {
  std::unique_ptr<Method> method;
  RngStream stream{0};
  std::vector<Sample> samples;
  double vectors = 0.0;
  bool diverged = false;
  int diverged_round = 0;
};

bool bad(double v) { return !std::isfinite(v) || v > kDivergenceThreshold; }

template <class Fn>
void for_each_run(std::vector<RunLog>& logs, int jobs, Fn&& fn) {
  const int n = static_cast<int>(logs.size());
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    for (auto& log : logs) fn(log);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int j = 0; j < workers; ++j) {
    threads.emplace_back([&, j] {
      try {
        for (int k = j; k < n; k += workers) fn(logs[static_cast<std::size_t>(k)]);
      } catch (...) {
        errors[static_cast<std::size_t>(j)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::string to_string(ProblemKind kind) { return kind == ProblemKind::kLogistic ? "logistic" : "quadratic"; }

ProblemKind parse_problem_kind(const std::string& name) {
  if (name == "logistic") return ProblemKind::kLogistic;
  if (name == "quadratic") return ProblemKind::kQuadratic;
  throw std::invalid_argument("unknown problem kind '" + name + "'");
}

Problem build_problem(const ProblemSpec& spec, std::uint64_t default_seed) {
  const std::uint64_t seed = spec.seed.value_or(default_seed);
  if (spec.kind == ProblemKind::kLogistic) return synth_logistic(spec.synth, seed);
  return quadratic_problem(spec.quadratic, seed);
}

void RunSettings::validate() const {
  hp.validate();
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  if (num_runs < 1) throw std::invalid_argument("num_runs must be at least 1");
  if (cadence < 1) throw std::invalid_argument("cadence must be at least 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

std::optional<int> Trace::first_round_below(double target) const {
  for (const auto& row : rows) {
    if (row.grad_norm_sq <= target) return row.round;
  }
  return std::nullopt;
}

std::optional<int> Trace::settled_round(double target) const {
  if (diverged || aborted || stopped_early || rows.empty()) return std::nullopt;
  std::optional<int> settled;
  for (auto it = rows.rbegin(); it != rows.rend() && it->grad_norm_sq <= target; ++it) settled = it->round;
  return settled;
}

std::string to_string(TargetRule rule) { return rule == TargetRule::kSettled ? "settled" : "first"; }

TargetRule parse_target_rule(const std::string& name) {
  if (name == "settled") return TargetRule::kSettled;
  if (name == "first") return TargetRule::kFirstCrossing;
  throw std::invalid_argument("unknown target rule '" + name + "'");
}

void check_compatibility(AlgorithmId algo, const MixingMatrix& w) {
  if (is_centralized(algo) && !w.is_complete_average()) {
    throw std::invalid_argument(to_string(algo) + " is a server-workers method and needs the complete graph");
  }
}

Trace run_experiment(const Problem& problem, const MixingMatrix& w, const RunSettings& settings) {
  settings.validate();
  check_compatibility(settings.algo, w);
  const int n = problem.n_nodes();
  const int m = problem.dim();
  const Matrix x0 = settings.x0.value_or(Matrix::Zero(n, m));
  const std::optional<double> f_star = problem.optimal_value();
  const std::optional<Vector>& x_star = problem.minimizer();

  std::vector<int> recorded;
  for (int r = 0; r <= settings.rounds; ++r) {
    if (r % settings.cadence == 0 || r == settings.rounds) recorded.push_back(r);
  }

  auto measure = [&](RunLog& log) {
    const Matrix x = log.method->iterates();
    const Vector mean = x.colwise().mean().transpose();
    Sample s;
    s.grad_norm_sq = global_grad_norm_sq(problem, mean);
    s.consensus_err = (x.rowwise() - mean.transpose()).squaredNorm() / n;
    if (f_star) s.fgap = problem.global_value(mean) - *f_star;
    if (x_star) s.dist_sq = (mean - *x_star).squaredNorm();
    s.vectors = log.vectors;
    if (bad(s.grad_norm_sq) || bad(s.consensus_err)) {
      log.diverged = true;
      log.diverged_round = log.method->round();
      return;
    }
    log.samples.push_back(s);
  };

  const RngStream root(settings.seed);
  std::vector<RunLog> logs(static_cast<std::size_t>(settings.num_runs));
  for (int k = 0; k < settings.num_runs; ++k) {
    auto& log = logs[static_cast<std::size_t>(k)];
    log.method = make_method(settings.algo, problem, w, settings.hp, x0, settings.dual_init);
    log.stream = root.run(static_cast<std::uint64_t>(k));
  }
  for_each_run(logs, settings.jobs, measure);

  Trace trace;
  const int block = settings.jobs > 1 ? 32 : 1;
  std::size_t next_row = 0;
  int done = 0;
  while (true) {
    // Aggregate every row that all runs have produced, in run order.
    while (next_row < recorded.size()) {
      bool complete = true;
      for (const auto& log : logs) {
        if (log.samples.size() <= next_row) {
          complete = false;
          break;
        }
      }
      if (!complete) break;
      TraceRow row;
      row.round = recorded[next_row];
      // Mean taken as offsets from run 0, so identical runs reproduce it bit for bit.
      const Sample& ref = logs.front().samples[next_row];
      double grad = 0.0, cons = 0.0, fgap = 0.0, dist = 0.0, vec = 0.0;
      for (const auto& log : logs) {
        const Sample& s = log.samples[next_row];
        grad += s.grad_norm_sq - ref.grad_norm_sq;
        cons += s.consensus_err - ref.consensus_err;
        fgap += s.fgap - ref.fgap;
        dist += s.dist_sq - ref.dist_sq;
        vec += s.vectors - ref.vectors;
      }
      const double runs = static_cast<double>(logs.size());
      row.grad_norm_sq = ref.grad_norm_sq + grad / runs;
      row.consensus_err = ref.consensus_err + cons / runs;
      row.vectors_per_link = ref.vectors + vec / runs;
      if (f_star) row.fgap = ref.fgap + fgap / runs;
      if (x_star) row.dist_sq = ref.dist_sq + dist / runs;
      trace.rows.push_back(row);
      ++next_row;
      if (settings.stop_below && row.grad_norm_sq <= *settings.stop_below) {
        trace.stopped_early = row.round < settings.rounds;
        return trace;
      }
      if (settings.abort_above && row.round >= settings.abort_from && row.grad_norm_sq > *settings.abort_above &&
          row.round < settings.rounds) {
        trace.aborted = true;
        return trace;
      }
    }
    for (const auto& log : logs) {
      if (log.diverged && log.samples.size() <= next_row) {
        trace.diverged = true;
        int first = std::numeric_limits<int>::max();
        for (const auto& l : logs) {
          if (l.diverged) first = std::min(first, l.diverged_round);
        }
        trace.diverged_at = first;
        return trace;
      }
    }
    if (done >= settings.rounds) break;
    const int until = std::min(settings.rounds, done + block);
    for_each_run(logs, settings.jobs, [&](RunLog& log) {
      while (!log.diverged && log.method->round() < until) {
        log.vectors += log.method->step(log.stream);
        const int r = log.method->round();
        if (r % settings.cadence == 0 || r == settings.rounds) measure(log);
      }
    });
    done = until;
  }
  return trace;
}

Trace run_experiment(const ExperimentConfig& cfg) {
  const Problem problem = build_problem(cfg.problem, cfg.run.seed);
  const MixingMatrix w = build_mixing(cfg.topology, cfg.lazy);
  if (w.n() != problem.n_nodes()) throw std::invalid_argument("topology size does not match the problem");
  return run_experiment(problem, w, cfg.run);
}

TuneGrid default_grid(AlgorithmId algo, double stability, int n_nodes, int points, double decades) {
  if (points < 1 || !(stability > 0.0)) throw std::invalid_argument("grid needs points >= 1 and a positive ceiling");
  TuneGrid grid;
  for (int k = 0; k < points; ++k) {
    const double exponent = points == 1 ? 0.0 : -decades * k / (points - 1);
    grid.alphas.push_back(stability * std::pow(10.0, exponent));
  }
  if (algo == AlgorithmId::kLedServer) grid.gammas = {1.0, std::sqrt(static_cast<double>(n_nodes))};
  return grid;
}

TuneResult tune_to_target(const Problem& problem, const MixingMatrix& w, const RunSettings& base, double target,
                          const TuneGrid& grid, bool prune, TargetRule rule) {
  if (grid.alphas.empty()) throw std::invalid_argument("tuning grid is empty");
  TuneResult result;
  result.target = target;
  std::vector<double> alphas = grid.alphas;
  std::stable_sort(alphas.begin(), alphas.end(), std::greater<>());
  const std::vector<double> gammas = grid.gammas.empty() ? std::vector<double>{base.hp.gamma} : grid.gammas;

  for (double alpha : alphas) {
    for (double gamma : gammas) {
      GridPoint point;
      point.hp = base.hp;
      point.hp.alpha = alpha;
      point.hp.gamma = gamma;
      RunSettings settings = base;
      settings.hp = point.hp;
      settings.stop_below.reset();
      settings.abort_above.reset();
      const GridPoint* best = result.best();
      bool capped = false;
      if (rule == TargetRule::kFirstCrossing) {
        settings.stop_below = target;
        capped = prune && best != nullptr && *best->rounds_to_target < base.rounds;
        if (capped) settings.rounds = std::max(1, *best->rounds_to_target);
      } else if (prune && best != nullptr) {
        // Above the target at or after the incumbent's round means settling later.
        capped = true;
        settings.abort_above = target;
        settings.abort_from = *best->rounds_to_target;
      }

      const Trace trace = run_experiment(problem, w, settings);
      point.diverged = trace.diverged;
      point.rounds_to_target =
          rule == TargetRule::kSettled ? trace.settled_round(target) : trace.first_round_below(target);
      if (point.rounds_to_target) {
        for (const auto& row : trace.rows) {
          if (row.round == *point.rounds_to_target) point.vectors_to_target = row.vectors_per_link;
        }
      } else if (capped && !trace.diverged) {
        point.pruned = true;
      }
      result.points.push_back(point);
      const GridPoint* incumbent = result.best();
      if (point.rounds_to_target &&
          (incumbent == nullptr || *point.rounds_to_target < *incumbent->rounds_to_target)) {
        result.best_index = result.points.size() - 1;
      }
    }
  }
  return result;
}

std::vector<CompareRow> compare(const Problem& problem, const MixingMatrix& w, const std::vector<CompareEntry>& entries,
                                double target, bool prune, TargetRule rule) {
  if (entries.empty()) throw std::invalid_argument("compare needs at least one algorithm");
  std::vector<CompareRow> rows;
  for (const auto& entry : entries) {
    CompareRow row;
    row.algo = entry.settings.algo;
    row.vectors_per_round = vectors_per_round(row.algo);
    row.tune = tune_to_target(problem, w, entry.settings, target, entry.grid, prune, rule);
    if (const GridPoint* best = row.tune.best()) {
      row.rounds_to_target = best->rounds_to_target;
      row.vectors_to_target = best->vectors_to_target;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

NoiseFloor noise_floor(const Problem& problem, const MixingMatrix& w, const RunSettings& settings,
                       double tail_fraction) {
  if (!problem.minimizer()) throw std::invalid_argument("noise_floor needs a problem with a known minimizer");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw std::invalid_argument("tail_fraction must lie in (0, 1]");
  RunSettings s = settings;
  s.stop_below.reset();
  s.abort_above.reset();
  const Trace trace = run_experiment(problem, w, s);
  if (trace.diverged) throw std::runtime_error("noise_floor run diverged");
  const int start = settings.rounds - static_cast<int>(std::lround(tail_fraction * settings.rounds));
  std::vector<double> window;
  for (const auto& row : trace.rows) {
    if (row.round > start) window.push_back(*row.dist_sq);
  }
  if (window.size() < 2) throw std::invalid_argument("tail window holds fewer than two recorded rounds");
  NoiseFloor nf;
  nf.window_rounds = settings.rounds - start;
  const std::size_t half = window.size() / 2;
  double total = 0.0;
  double first = 0.0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    total += window[k];
    if (k < half) first += window[k];
  }
  nf.floor = total / static_cast<double>(window.size());
  nf.first_half = first / static_cast<double>(half);
  nf.second_half = (total - first) / static_cast<double>(window.size() - half);
  const double hi = std::max(nf.first_half, nf.second_half);
  const double lo = std::min(nf.first_half, nf.second_half);
  // Below ~1e-28 both halves are rounding noise around an exact solution.
  nf.stationary = hi <= 1e-28 || hi <= 2.0 * lo;
  return nf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& os, const Trace& trace, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << kTraceCsvHeader << '\n';
  for (const auto& row : trace.rows) {
    os << row.round << ',' << format_double(row.grad_norm_sq) << ',' << format_double(row.consensus_err) << ',';
    if (row.fgap) os << format_double(*row.fgap);
    os << ',' << format_double(row.vectors_per_link) << '\n';
  }
}

void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << kCompareCsvHeader << '\n';
  for (const auto& row : rows) {
    const GridPoint* best = row.tune.best();
    const HyperParams& hp = best ? best->hp : HyperParams{};
    os << to_string(row.algo) << ',';
    if (best) {
      os << format_double(hp.alpha) << ',' << format_double(hp.effective_beta()) << ',' << format_double(hp.gamma)
         << ',' << hp.tau << ',' << format_double(hp.p) << ',' << format_double(hp.effective_zeta()) << ','
         << *row.rounds_to_target << ',' << format_double(*row.vectors_to_target) << ",1\n";
    } else {
      os << ",,,,,,,,0\n";
    }
  }
}

void write_tune_csv(std::ostream& os, const TuneResult& result, const std::vector<std::string>& comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << kTuneCsvHeader << '\n';
  for (std::size_t k = 0; k < result.points.size(); ++k) {
    const GridPoint& p = result.points[k];
    os << format_double(p.hp.alpha) << ',' << format_double(p.hp.gamma) << ',';
    if (p.rounds_to_target) os << *p.rounds_to_target << ',' << format_double(p.vectors_to_target);
    else os << ',';
    os << ',' << (p.diverged ? 1 : 0) << ',' << (p.pruned ? 1 : 0) << ','
       << (result.best_index && *result.best_index == k ? 1 : 0) << '\n';
  }
}

}  // namespace ledsim
