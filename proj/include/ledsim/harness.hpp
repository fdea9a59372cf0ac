#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ledsim/algorithms.hpp"
#include "ledsim/problems.hpp"
#include "ledsim/topology.hpp"

namespace ledsim {

enum class ProblemKind { kLogistic, kQuadratic };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kLogistic;
  SynthConfig synth;
  QuadraticSpec quadratic;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
};

Problem build_problem(const ProblemSpec& spec, std::uint64_t default_seed);

struct RunSettings {
  AlgorithmId algo = AlgorithmId::kLed;
  HyperParams hp;
  int rounds = 100;
  int num_runs = 100;
  std::uint64_t seed = 0;
  int cadence = 1;  // record every k rounds (round 0 and the last round always)
  DualInit dual_init = DualInit::kFromMixing;
  int jobs = 1;
  std::optional<Matrix> x0;  // zeros by default
  /// Stop once the run-averaged grad_norm_sq at a recorded round is <= this.
  std::optional<double> stop_below;
  /// Stop once the run-averaged grad_norm_sq exceeds `abort_above` at a
  /// recorded round >= `abort_from`.
  std::optional<double> abort_above;
  int abort_from = 0;

  void validate() const;
};

struct ExperimentConfig {
  GraphSpec topology;
  bool lazy = false;
  ProblemSpec problem;
  RunSettings run;
};

struct TraceRow {
  int round = 0;
  double grad_norm_sq = 0.0;  // ||grad f(xbar)||^2
  double consensus_err = 0.0;  // (1/N) ||x - 1 xbar||^2
  std::optional<double> fgap;  // f(xbar) - f*, when f* is known
  std::optional<double> dist_sq;  // ||xbar - x*||^2, when x* is known
  double vectors_per_link = 0.0;  // cumulative, averaged over runs
};

struct Trace {
  std::vector<TraceRow> rows;
  bool diverged = false;
  std::optional<int> diverged_at;  // first round with a non-finite or > 1e12 metric
  bool stopped_early = false;
  bool aborted = false;

  /// First recorded round whose averaged grad_norm_sq is <= target.
  std::optional<int> first_round_below(double target) const;
  /// First recorded round from which grad_norm_sq stays <= target through
  /// the last row. Empty for truncated traces.
  std::optional<int> settled_round(double target) const;
};

/// Divergence guard threshold on any recorded metric.
inline constexpr double kDivergenceThreshold = 1e12;

/// Rejects centralized algorithms on anything but W = (1/N) 11^T.
void check_compatibility(AlgorithmId algo, const MixingMatrix& w);

/// Independent seeded runs, averaged pointwise per recorded round in run
/// order. The result does not depend on `jobs`.
Trace run_experiment(const Problem& problem, const MixingMatrix& w, const RunSettings& settings);
Trace run_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Tuning

/// How a trace counts as having reached the target.
enum class TargetRule {
  kSettled,        // stays below the target through the final round
  kFirstCrossing,  // first dips below the target
};

std::string to_string(TargetRule rule);
TargetRule parse_target_rule(const std::string& name);

struct TuneGrid {
  std::vector<double> alphas;
  std::vector<double> gammas;  // empty keeps the base gamma
};

/// `points` log-spaced stepsizes covering `decades` below the stability
/// estimate; gamma over {1, sqrt(N)} for led_server.
TuneGrid default_grid(AlgorithmId algo, double stability, int n_nodes, int points = 20, double decades = 4.0);

struct GridPoint {
  HyperParams hp;
  std::optional<int> rounds_to_target;
  double vectors_to_target = 0.0;  // meaningful when rounds_to_target is set
  bool diverged = false;
  bool pruned = false;  // stopped at the best round count found so far
};

struct TuneResult {
  double target = 0.0;
  std::vector<GridPoint> points;  // evaluation order: alpha descending
  std::optional<std::size_t> best_index;

  bool achieved() const { return best_index.has_value(); }
  const GridPoint* best() const { return best_index ? &points[*best_index] : nullptr; }
};

/// Fewest rounds to target wins; ties go to the larger alpha. With `prune`,
/// a point is abandoned as soon as it can no longer beat the incumbent,
/// which never changes the winner.
TuneResult tune_to_target(const Problem& problem, const MixingMatrix& w, const RunSettings& base, double target,
                          const TuneGrid& grid, bool prune = false, TargetRule rule = TargetRule::kSettled);

struct CompareEntry {
  RunSettings settings;
  TuneGrid grid;
};

struct CompareRow {
  AlgorithmId algo = AlgorithmId::kLed;
  TuneResult tune;
  int vectors_per_round = 1;
  std::optional<int> rounds_to_target;
  std::optional<double> vectors_to_target;
};

std::vector<CompareRow> compare(const Problem& problem, const MixingMatrix& w, const std::vector<CompareEntry>& entries,
                                double target, bool prune = false, TargetRule rule = TargetRule::kSettled);

// ---------------------------------------------------------------------------

struct NoiseFloor {
  double floor = 0.0;  // mean ||xbar - x*||^2 over the tail window
  double first_half = 0.0;
  double second_half = 0.0;
  bool stationary = true;  // halves within a factor of two
  int window_rounds = 0;
};

/// Requires a problem with a known minimizer.
NoiseFloor noise_floor(const Problem& problem, const MixingMatrix& w, const RunSettings& settings,
                       double tail_fraction = 0.25);

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kTraceCsvHeader = "round,grad_norm_sq,consensus_err,fgap,vectors_per_link";
inline constexpr const char* kCompareCsvHeader =
    "algo,alpha,beta,gamma,tau,p,zeta,rounds_to_target,vectors_to_target,achieved";
inline constexpr const char* kTuneCsvHeader = "alpha,gamma,rounds_to_target,vectors_to_target,diverged,pruned,best";

/// Each comment line is written as "# <line>".
void write_trace_csv(std::ostream& os, const Trace& trace, const std::vector<std::string>& comments = {});
void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows,
                       const std::vector<std::string>& comments = {});
void write_tune_csv(std::ostream& os, const TuneResult& result, const std::vector<std::string>& comments = {});

std::string format_double(double v);

}  // namespace ledsim
