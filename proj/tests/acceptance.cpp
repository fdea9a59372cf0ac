// Acceptance suite: one PASS/FAIL line per criterion, with wall time against its budget.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ledsim/algorithms.hpp"
#include "ledsim/harness.hpp"
#include "ledsim/problems.hpp"
#include "ledsim/topology.hpp"

using namespace ledsim;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

MixingMatrix graph(GraphKind kind, int n) {
  GraphSpec s;
  s.kind = kind;
  s.n = n;
  return build_mixing(s, false);
}

Problem quadratic(int n, int m, double mu, double heterogeneity, double sigma, std::uint64_t seed) {
  QuadraticSpec q;
  q.nodes = n;
  q.dim = m;
  q.mu = mu;
  q.L = 1.0;
  q.heterogeneity = heterogeneity;
  q.sigma = sigma;
  return quadratic_problem(q, seed);
}

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = nd(gen);
  return m;
}

RunSettings settings(AlgorithmId algo, double alpha, int tau, int rounds, int runs, std::uint64_t seed = 1) {
  RunSettings s;
  s.algo = algo;
  s.hp.alpha = alpha;
  s.hp.tau = tau;
  s.rounds = rounds;
  s.num_runs = runs;
  s.seed = seed;
  return s;
}

// 1 -------------------------------------------------------------------------
Outcome spectral_anchor() {
  const double rate = graph(GraphKind::kRing, 15).mixing_rate();
  return {std::abs(rate - 0.943) <= 1e-3, "mixing_rate=" + fmt("%.6f", rate)};
}

// 2 -------------------------------------------------------------------------
Outcome exact_convergence() {
  const int n = 15;
  const Problem p = quadratic(n, 5, 0.1, 2.0, 0.0, 7);
  const MixingMatrix w = graph(GraphKind::kRing, n);
  const double het = heterogeneity_at(p, Vector::Zero(5));
  const int rounds = 20000;
  const double target = 1e-16;

  RunSettings base = settings(AlgorithmId::kLed, 0.1, 5, rounds, 1);
  base.cadence = 10;
  const TuneResult tuned =
      tune_to_target(p, w, base, target, default_grid(AlgorithmId::kLed, stability_estimate(p.smoothness()), n), true);
  if (!tuned.achieved()) return {false, "LED did not reach 1e-16 within 20000 rounds"};
  const double alpha = tuned.best()->hp.alpha;

  RunSettings led = base;
  led.hp.alpha = alpha;
  const Trace led_trace = run_experiment(p, w, led);
  RunSettings dsgd = led;
  dsgd.algo = AlgorithmId::kLocalDsgd;
  const Trace dsgd_trace = run_experiment(p, w, dsgd);
  const double led_final = led_trace.rows.back().grad_norm_sq;
  const double floor = dsgd_trace.rows.back().grad_norm_sq;
  // Plateau: the last quarter of the Local-DSGD trace no longer moves.
  const double quarter = dsgd_trace.rows[dsgd_trace.rows.size() * 3 / 4].grad_norm_sq;
  const bool plateau = std::abs(floor - quarter) <= 1e-6 * floor;

  Outcome o;
  o.ok = het >= 1.0 && !led_trace.diverged && led_final <= target && plateau && floor >= 1e3 * led_final &&
         *tuned.best()->rounds_to_target <= rounds;
  o.detail = "heterogeneity=" + fmt("%.3g", het) + " alpha=" + fmt("%.4g", alpha) +
             " led_rounds=" + std::to_string(*tuned.best()->rounds_to_target) + " led_final=" + fmt("%.3g", led_final) +
             " local_dsgd_floor=" + fmt("%.3g", floor) + (plateau ? "" : " (not flat)");
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome equivalence_triad() {
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int n = k % 2 == 0 ? 3 : 8;
    const GraphKind kind = k < 5 ? GraphKind::kRing : GraphKind::kComplete;
    const Problem p = quadratic(n, 4, 0.1, 1.0, 0.0, 300 + k);
    const MixingMatrix w = graph(kind, n);
    const double alpha = 0.1 + 0.04 * k;
    const Matrix x0 = random_matrix(n, 4, 400 + k);
    LedState led = led_init(x0, w, DualInit::kZero);
    PrimalDualState pd = led;
    ScaffnewState sn = scaffnew_init(x0);
    const RngStream run(k);
    for (int r = 0; r < 200; ++r) {
      led = led1_step(led, p, w, alpha, 1.0, run).state;
      pd = pdfp2o_step(pd, p, w, alpha, 1.0, run).state;
      sn = scaffnew_round(sn, p, w, alpha, 1.0 / alpha, 1.0, run).state;
      worst = std::max({worst, max_abs(led.x - pd.x), max_abs(led.x - sn.x), max_abs(pd.x - sn.x)});
    }
  }
  return {worst <= 1e-10, "max_deviation=" + fmt("%.3g", worst)};
}

// 4 -------------------------------------------------------------------------
Outcome centralized_reduction() {
  double worst = 0.0;
  for (int tau : {1, 5}) {
    const int n = 6;
    const Problem p = quadratic(n, 4, 0.1, 1.0, 0.1, 500 + tau);
    const MixingMatrix w = average_weights(n);
    const double alpha = 0.1;
    const Vector x0 = Vector::LinSpaced(4, -1.0, 1.0);
    FedGateState fg = fedgate_init(x0, n);
    HyperParams h;
    h.alpha = alpha;
    h.tau = tau;
    LedState led = led_init(x0.transpose().replicate(n, 1), w, DualInit::kFromMixing);
    const RngStream run = RngStream(600 + tau).run(0);
    for (int r = 0; r < 200; ++r) {
      fg = fedgate_round(fg, p, alpha, 1.0 / alpha, tau, run).state;
      led = led_round(led, p, w, h, run).state;
      worst = std::max(worst, max_abs(led.x.rowwise() - fg.x.transpose()));
    }
  }
  return {worst <= 1e-12, "max_deviation=" + fmt("%.3g", worst)};
}

// 5 -------------------------------------------------------------------------
Outcome analysis_form_oracle() {
  double ed_vs_uda = 0.0;
  double led_vs_both = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int n = 5 + 2 * k;
    const Problem p = quadratic(n, 3, 0.1, 1.0, 0.0, 700 + k);
    const MixingMatrix w = graph(k == 2 ? GraphKind::kComplete : GraphKind::kRing, n);
    const double alpha = 0.5;
    const Matrix x0 = random_matrix(n, 3, 800 + k);
    // Mapping: y = B^{1/2} z with z0 = 0 and y0 = 0; the eliminated form starts from x1 = W (x0 - alpha grad).
    EdState ed = ed_bootstrap(ed_init(x0), p, w, alpha);
    UdaEdState uda = uda_ed_step(uda_ed_init(x0, w), p, w, alpha).state;
    LedState led = led1_step(led_init(x0, w, DualInit::kZero), p, w, alpha, 1.0, RngStream(0)).state;
    for (int r = 1; r <= 200; ++r) {
      ed_vs_uda = std::max(ed_vs_uda, max_abs(ed.x - uda.x));
      led_vs_both = std::max({led_vs_both, max_abs(led.x - uda.x), max_abs(led.x - ed.x)});
      ed = ed_eliminated_step(ed, p, w, alpha).state;
      uda = uda_ed_step(uda, p, w, alpha).state;
      led = led1_step(led, p, w, alpha, 1.0, RngStream(0)).state;
    }
  }
  return {ed_vs_uda <= 1e-9 && led_vs_both <= 1e-9,
          "ed_vs_uda=" + fmt("%.3g", ed_vs_uda) + " led1_vs_both=" + fmt("%.3g", led_vs_both)};
}

// 6 -------------------------------------------------------------------------
Outcome invariant_suite() {
  double dual = 0.0;
  for (int k = 0; k < 3; ++k) {
    const int n = 5 + 3 * k;
    const Problem p = quadratic(n, 3, 0.1, 1.0, 0.1, 900 + k);
    const MixingMatrix w = graph(GraphKind::kRing, n);
    const Matrix x0 = random_matrix(n, 3, 950 + k);
    HyperParams h;
    h.alpha = 0.05;
    h.tau = 2 + k;
    LedState a = led_init(x0, w, DualInit::kFromMixing);
    LedState b = led_init(x0, w, DualInit::kZero);
    ScaffnewState sn = scaffnew_init(x0);
    FedGateState fg = fedgate_init(Vector::Zero(3), n);
    LedServerState srv = led_server_init(Vector::Zero(3), n);
    const RngStream run(1000 + k);
    for (int r = 0; r < 1000; ++r) {
      a = led_round(a, p, w, h, run).state;
      b = led_round(b, p, w, h, run).state;
      sn = scaffnew_round(sn, p, w, h.alpha, 0.5 / h.alpha, 0.5, run).state;
      fg = fedgate_round(fg, p, h.alpha, 4.0, h.tau, run).state;
      srv = led_server_round(srv, p, h.alpha, 1.0 / h.tau, std::sqrt(static_cast<double>(n)), h.tau, run).state;
      for (const Matrix* m : {&a.y, &b.y, &sn.z, &fg.delta, &srv.y}) dual = std::max(dual, max_abs(node_sum(*m)));
    }
  }

  double fixed = 0.0;
  const Problem det = quadratic(9, 4, 0.1, 1.0, 0.0, 1100);
  const MixingMatrix w9 = graph(GraphKind::kRing, 9);
  for (int tau : {1, 3, 10}) {
    HyperParams h;
    h.alpha = 0.1;
    h.tau = tau;
    const LedState star = led_fixed_point(det, *det.minimizer(), h.alpha, h.effective_beta());
    LedState s = star;
    for (int r = 0; r < 100; ++r) {
      s = led_round(s, det, w9, h, RngStream(0)).state;
      fixed = std::max({fixed, max_abs(s.x - star.x), max_abs(s.y - star.y)});
    }
  }

  double centroid = 0.0;
  const Problem noisy = quadratic(9, 4, 0.1, 1.0, 0.2, 1200);
  HyperParams h;
  h.alpha = 0.1;
  h.tau = 4;
  LedState s = led_init(random_matrix(9, 4, 1201), w9, DualInit::kFromMixing);
  for (int r = 0; r < 200; ++r) {
    const auto out = led_round(s, noisy, w9, h, RngStream(1202));
    Vector residual = out.state.x.colwise().mean().transpose() - s.x.colwise().mean().transpose();
    for (const Vector& g : out.ledger) residual += h.alpha * g;
    centroid = std::max(centroid, residual.cwiseAbs().maxCoeff());
    s = out.state;
  }
  return {dual <= 1e-10 && fixed <= 1e-12 && centroid <= 1e-12,
          "dual_sum=" + fmt("%.3g", dual) + " fixed_point=" + fmt("%.3g", fixed) +
              " centroid_residual=" + fmt("%.3g", centroid)};
}

// 7 -------------------------------------------------------------------------
Outcome noise_floor_scaling() {
  const int runs = 50;
  const int rounds = 4000;
  const int tau = 5;
  auto floor_for = [&](int n, double alpha) {
    const Problem p = quadratic(n, 5, 0.5, 1.0, 0.1, 1300);
    RunSettings s = settings(AlgorithmId::kLed, alpha, tau, rounds, runs, 1301);
    return noise_floor(p, average_weights(n), s);
  };
  const NoiseFloor base = floor_for(4, 0.02);
  const NoiseFloor half = floor_for(4, 0.01);
  const NoiseFloor n8 = floor_for(8, 0.02);
  const NoiseFloor n16 = floor_for(16, 0.02);
  const double alpha_ratio = half.floor / base.floor;
  const double r8 = n8.floor / base.floor;
  const double r16 = n16.floor / n8.floor;
  auto inside = [](double r) { return r >= 0.33 && r <= 0.75; };
  const bool stationary = base.stationary && half.stationary && n8.stationary && n16.stationary;
  return {inside(alpha_ratio) && inside(r8) && inside(r16) && stationary,
          "alpha_halved=" + fmt("%.3f", alpha_ratio) + " n4to8=" + fmt("%.3f", r8) + " n8to16=" + fmt("%.3f", r16) +
              (stationary ? "" : " (tail not stationary)")};
}

// 8 -------------------------------------------------------------------------
std::optional<int> tuned_rounds(const Problem& p, const MixingMatrix& w, AlgorithmId algo, int tau, int rounds,
                                std::optional<double>* vectors = nullptr) {
  RunSettings base = settings(algo, 0.1, tau, rounds, 20, 42);
  const TuneResult r =
      tune_to_target(p, w, base, 1e-4, default_grid(algo, stability_estimate(p.smoothness()), p.n_nodes()), true);
  if (vectors != nullptr && r.achieved()) *vectors = r.best()->vectors_to_target;
  return r.achieved() ? r.best()->rounds_to_target : std::nullopt;
}

std::string rounds_text(const std::optional<int>& r, int horizon) {
  return r ? std::to_string(*r) : ">" + std::to_string(horizon);
}

Outcome logistic_reproduction() {
  SynthConfig cfg;  // N=15, m=5, S=1000, eta=0.01, sigma_u=6, sigma_h=2, sigma=1e-3
  const Problem hetero = synth_logistic(cfg, 0);
  cfg.sigma_h = 0.0;
  const Problem homo = synth_logistic(cfg, 0);
  const MixingMatrix full = average_weights(15);
  const MixingMatrix ring = graph(GraphKind::kRing, 15);

  // (a) local steps pay off on near-homogeneous data.
  const auto led10_full = tuned_rounds(homo, full, AlgorithmId::kLed, 10, 100);
  const auto led1_full = tuned_rounds(homo, full, AlgorithmId::kLed, 1, 1000);
  const bool a = led10_full && (!led1_full || *led10_full <= *led1_full);

  // (b), (c) heterogeneous ring at tau = 10.
  std::optional<double> led_vec, kgt_vec;
  const auto led = tuned_rounds(hetero, ring, AlgorithmId::kLed, 10, 100, &led_vec);
  const auto dsgd = tuned_rounds(hetero, ring, AlgorithmId::kLocalDsgd, 10, 100);
  const auto kgt = tuned_rounds(hetero, ring, AlgorithmId::kKgt, 10, 100, &kgt_vec);
  const bool b = led && (!dsgd || *dsgd > *led);
  const bool c = led_vec && (!kgt_vec || *led_vec <= 0.75 * *kgt_vec);

  std::ostringstream d;
  d << "(a) led tau10=" << rounds_text(led10_full, 100) << " tau1=" << rounds_text(led1_full, 1000)
    << (a ? "" : " FAIL") << "; (b) led=" << rounds_text(led, 100) << " local_dsgd=" << rounds_text(dsgd, 100)
    << (b ? "" : " FAIL") << "; (c) vectors led=" << (led_vec ? fmt("%.0f", *led_vec) : "-")
    << " kgt=" << (kgt_vec ? fmt("%.0f", *kgt_vec) : "-") << (c ? "" : " FAIL");
  return {a && b && c, d.str()};
}

// 9 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd(0.0, 0.3);
  SynthConfig cfg;
  cfg.nodes = 4;
  cfg.samples = 200;
  const Problem p = synth_logistic(cfg, 31);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vector x(5);
    for (int j = 0; j < 5; ++j) x(j) = nd(gen);
    const int node = k % 4;
    const Vector g = logreg_grad(p, node, x);
    Vector fd(5);
    for (int j = 0; j < 5; ++j) {
      Vector xp = x, xm = x;
      xp(j) += 1e-6;
      xm(j) -= 1e-6;
      fd(j) = (logreg_value(p, node, xp) - logreg_value(p, node, xm)) / 2e-6;
    }
    worst = std::max(worst, (g - fd).norm() / g.norm());
  }
  return {worst <= 1e-5, "max_relative_error=" + fmt("%.3g", worst)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "spectral anchor", 1.0, spectral_anchor},
      {2, "exact deterministic convergence", 30.0, exact_convergence},
      {3, "equivalence triad", 5.0, equivalence_triad},
      {4, "centralized reduction", 5.0, centralized_reduction},
      {5, "analysis-form oracle", 5.0, analysis_form_oracle},
      {6, "invariant suite", 10.0, invariant_suite},
      {7, "noise-floor scaling", 120.0, noise_floor_scaling},
      {8, "logistic head-to-head", 600.0, logistic_reproduction},
      {9, "gradient correctness", 5.0, gradient_correctness},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.budget_seconds;
    const bool pass = o.ok && in_time;
    if (!pass) ++failed;
    std::printf("criterion %d %-32s %s  %.2fs/%.0fs  %s%s\n", c.id, c.name, pass ? "PASS" : "FAIL", seconds,
                c.budget_seconds, o.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
