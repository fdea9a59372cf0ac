#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <set>

#include "ledsim/problems.hpp"

using namespace ledsim;

namespace {

double naive_logreg_value(const NodeDataset& d, double eta, const Vector& x) {
  double acc = 0.0;
  for (Eigen::Index s = 0; s < d.features.rows(); ++s) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) dot += d.features(s, k) * x(k);
    acc += std::log(1.0 + std::exp(-d.labels(s) * dot));
  }
  double reg = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) reg += x(k) * x(k) / (1.0 + x(k) * x(k));
  return acc / static_cast<double>(d.features.rows()) + eta * reg;
}

Vector random_point(std::mt19937_64& gen, int dim, double scale) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector x(dim);
  for (int k = 0; k < dim; ++k) x(k) = nd(gen);
  return x;
}

Problem two_node_example() {
  std::vector<Matrix> as = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  Vector b1(2), b2(2);
  b1 << 1.0, 0.0;
  b2 << -1.0, 0.0;
  return Problem::quadratic(as, {b1, b2}, 0.0);
}

}  // namespace

TEST_CASE("synthetic logistic data has the requested shape") {
  const Problem p = synth_logistic(SynthConfig{}, 1);
  REQUIRE(p.n_nodes() == 15);
  REQUIRE(p.dim() == 5);
  CHECK(p.is_logistic());
  CHECK(p.noise_sigma() == 1e-3);
  for (const auto& d : p.datasets()) {
    CHECK(d.features.rows() == 1000);
    CHECK(d.features.cols() == 5);
    CHECK(((d.labels.array() == 1.0) || (d.labels.array() == -1.0)).all());
  }
}

TEST_CASE("synthetic data is deterministic in the seed") {
  SynthConfig cfg;
  cfg.nodes = 4;
  cfg.samples = 50;
  const Problem a = synth_logistic(cfg, 7);
  const Problem b = synth_logistic(cfg, 7);
  const Problem c = synth_logistic(cfg, 8);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.datasets()[i].features == b.datasets()[i].features);
    CHECK(a.datasets()[i].labels == b.datasets()[i].labels);
  }
  CHECK(a.datasets()[0].features != c.datasets()[0].features);
}

TEST_CASE("labels are balanced when the generating vector vanishes") {
  SynthConfig cfg;
  cfg.nodes = 3;
  cfg.samples = 1000;
  cfg.sigma_u = 0.0;
  cfg.sigma_h = 0.0;
  const Problem p = synth_logistic(cfg, 11);
  for (const auto& d : p.datasets()) {
    const double frac = (d.labels.array() > 0.0).cast<double>().mean();
    CHECK(std::abs(frac - 0.5) <= 0.05);
  }
}

TEST_CASE("labels are not degenerate") {
  SynthConfig cfg;
  cfg.nodes = 2;
  cfg.samples = 2000;
  const Problem p = synth_logistic(cfg, 3);
  for (const auto& d : p.datasets()) {
    const double frac = (d.labels.array() > 0.0).cast<double>().mean();
    CHECK(frac > 0.05);
    CHECK(frac < 0.95);
  }
}

TEST_CASE("homogeneous configuration shares the generating vector") {
  SynthConfig cfg;
  cfg.nodes = 3;
  cfg.samples = 4000;
  cfg.sigma_h = 0.0;
  const Problem p = synth_logistic(cfg, 5);
  // Same generating vector: the per-node empirical gradients at 0 agree up to sampling error.
  const Vector g0 = p.gradient(0, Vector::Zero(5));
  for (int i = 1; i < 3; ++i) CHECK((p.gradient(i, Vector::Zero(5)) - g0).norm() < 0.5 * g0.norm());
  CHECK(p.datasets()[0].features != p.datasets()[1].features);
}

TEST_CASE("logistic value examples") {
  const Problem p = synth_logistic(SynthConfig{}, 2);
  CHECK(logreg_value(p, 4, Vector::Zero(5)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  NodeDataset d{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0)};
  const Problem one = Problem::logistic({d}, 1.0, 0.0);
  CHECK(logreg_value(one, 0, Vector::Constant(1, 1.0)) ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0)) + 0.5).epsilon(1e-14));
  CHECK(logreg_value(one, 0, Vector::Constant(1, 1.0)) == doctest::Approx(0.8133).epsilon(1e-4));
}

TEST_CASE("logistic value matches a straight-loop evaluator") {
  SynthConfig cfg;
  cfg.nodes = 3;
  cfg.samples = 200;
  const Problem p = synth_logistic(cfg, 21);
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_point(gen, 5, 0.3);
    const int node = trial % 3;
    const double oracle = naive_logreg_value(p.datasets()[node], 0.01, x);
    CHECK(std::abs(logreg_value(p, node, x) - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("softplus is stable for large arguments") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(-800.0) < 1e-300);
  CHECK(std::isfinite(softplus(1e308)));
}

TEST_CASE("logistic gradient examples") {
  const Problem p = synth_logistic(SynthConfig{}, 2);
  const auto& d = p.datasets()[3];
  Vector oracle = Vector::Zero(5);
  for (Eigen::Index s = 0; s < d.features.rows(); ++s) oracle -= 0.5 * d.labels(s) * d.features.row(s).transpose();
  oracle /= static_cast<double>(d.features.rows());
  CHECK((logreg_grad(p, 3, Vector::Zero(5)) - oracle).norm() <= 1e-12 * oracle.norm());

  // Regularizer contribution isolated by differencing eta = 1 and eta = 0.
  NodeDataset one{Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 1.0)};
  const Problem with_reg = Problem::logistic({one}, 1.0, 0.0);
  const Problem without = Problem::logistic({one}, 0.0, 0.0);
  const Vector x = Vector::Constant(1, 1.0);
  CHECK((logreg_grad(with_reg, 0, x) - logreg_grad(without, 0, x))(0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("logistic gradient agrees with central finite differences") {
  std::mt19937_64 gen(17);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig cfg;
    cfg.nodes = 2;
    cfg.samples = 40;
    const Problem p = synth_logistic(cfg, 1000 + trial);
    const Vector x = random_point(gen, 5, 0.2);
    const Vector g = logreg_grad(p, trial % 2, x);
    Vector fd(5);
    const double h = 1e-6;
    for (int k = 0; k < 5; ++k) {
      Vector xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      fd(k) = (logreg_value(p, trial % 2, xp) - logreg_value(p, trial % 2, xm)) / (2.0 * h);
    }
    CHECK((g - fd).norm() / g.norm() <= 1e-5);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("smoothness bound dominates empirical gradient Lipschitz ratios") {
  SynthConfig cfg;
  cfg.nodes = 3;
  cfg.samples = 100;
  const Problem p = synth_logistic(cfg, 6);
  CHECK(std::isfinite(p.smoothness()));
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = random_point(gen, 5, 0.5);
    const Vector b = random_point(gen, 5, 0.5);
    const int node = trial % 3;
    const double ratio = (p.gradient(node, a) - p.gradient(node, b)).norm() / (a - b).norm();
    CHECK(ratio <= p.smoothness() * (1.0 + 1e-12));
  }
}

TEST_CASE("noise-free stochastic gradient is exact") {
  const Problem p = synth_logistic(SynthConfig{}, 2).with_noise(0.0);
  const Vector x = Vector::LinSpaced(5, -0.2, 0.3);
  CHECK(stoch_grad(p, 1, x, RngStream(5)) == logreg_grad(p, 1, x));
}

TEST_CASE("gradient noise is unbiased with the configured variance") {
  SynthConfig cfg;
  cfg.nodes = 1;
  cfg.samples = 20;
  cfg.sigma = 0.3;
  const Problem p = synth_logistic(cfg, 12);
  const Vector x = Vector::LinSpaced(5, -0.1, 0.1);
  const Vector exact = logreg_grad(p, 0, x);
  const int draws = 100000;
  Vector mean = Vector::Zero(5);
  Vector sq = Vector::Zero(5);
  const RngStream root(99);
  for (int k = 0; k < draws; ++k) {
    const Vector e = stoch_grad(p, 0, x, root.run(static_cast<std::uint64_t>(k))) - exact;
    mean += e;
    sq += e.cwiseProduct(e);
  }
  mean /= draws;
  sq /= draws;
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(mean(k)) <= 3.0 * 0.3 / std::sqrt(static_cast<double>(draws)));
    CHECK(std::abs(sq(k) / (0.3 * 0.3) - 1.0) <= 0.05);
  }
}

TEST_CASE("streams are addressable and order independent") {
  const RngStream root(1234);
  const RngStream a = gradient_noise_stream(root.run(2), 5, 1, 3);
  const RngStream b = gradient_noise_stream(root.run(2), 5, 1, 3);
  CHECK(a == b);
  CHECK_FALSE(a == gradient_noise_stream(root.run(2), 5, 1, 4));
  CHECK_FALSE(a == gradient_noise_stream(root.run(2), 5, 0, 3));
  CHECK_FALSE(a == gradient_noise_stream(root.run(3), 5, 1, 3));
  CHECK_FALSE(root.run(1).round(2) == root.round(2).run(1));

  auto e1 = a.engine();
  auto e2 = b.engine();
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 1000; ++k) {
    const auto v = e1();
    CHECK(v == e2());
    seen.insert(v);
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("independent streams are uncorrelated") {
  const RngStream root(77);
  auto ea = root.node(0).engine();
  auto eb = root.node(1).engine();
  std::normal_distribution<double> nd;
  const int n = 50000;
  double sab = 0.0;
  for (int k = 0; k < n; ++k) sab += nd(ea) * nd(eb);
  CHECK(std::abs(sab / n) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("quadratic examples") {
  const Problem p = two_node_example();
  REQUIRE(p.minimizer().has_value());
  CHECK(p.minimizer()->norm() <= 1e-15);
  CHECK(heterogeneity_at(p, Vector::Zero(2)) == doctest::Approx(1.0));
  CHECK(global_grad_norm_sq(p, *p.minimizer()) <= 1e-24);

  Vector b(3);
  b << 0.5, -1.0, 2.0;
  const Problem same = Problem::quadratic({Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, {b, b}, 0.0);
  CHECK((*same.minimizer() - b).norm() <= 1e-15);
  CHECK(heterogeneity_at(same, Vector::Constant(3, 0.7)) == 0.0);
}

TEST_CASE("quadratic generator respects the requested spectrum") {
  QuadraticSpec spec;
  spec.nodes = 6;
  spec.dim = 4;
  spec.mu = 0.1;
  spec.L = 1.0;
  spec.heterogeneity = 2.0;
  const Problem p = quadratic_problem(spec, 3);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& a : p.hessians()) {
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    CHECK(es.eigenvalues().minCoeff() >= 0.0);
    mean += a;
  }
  mean /= 6.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mean);
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(0.1).epsilon(1e-10));
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(heterogeneity_at(p, Vector::Zero(4)) > 0.0);

  spec.mu = 2.0;
  CHECK_THROWS_AS(quadratic_problem(spec, 3), std::invalid_argument);
  spec.mu = 0.0;
  CHECK_THROWS_AS(quadratic_problem(spec, 3), std::invalid_argument);
}

TEST_CASE("quadratic minimizer agrees with long-run gradient descent") {
  QuadraticSpec spec;
  spec.nodes = 5;
  spec.dim = 3;
  spec.mu = 0.2;
  spec.L = 1.0;
  const Problem p = quadratic_problem(spec, 12);
  Vector x = Vector::Zero(3);
  const double step = 1.0 / p.smoothness();
  for (int k = 0; k < 5000; ++k) x -= step * p.global_gradient(x);
  CHECK((x - *p.minimizer()).norm() <= 1e-10);
  REQUIRE(p.optimal_value().has_value());
  CHECK(p.global_value(x) == doctest::Approx(*p.optimal_value()).epsilon(1e-12));
}

TEST_CASE("global gradient and heterogeneity match loop oracles") {
  const Problem p = synth_logistic([] {
    SynthConfig c;
    c.nodes = 4;
    c.samples = 60;
    return c;
  }(), 9);
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = random_point(gen, 5, 0.4);
    Vector mean = Vector::Zero(5);
    for (int i = 0; i < 4; ++i) mean += logreg_grad(p, i, x);
    mean /= 4.0;
    double het = 0.0;
    for (int i = 0; i < 4; ++i) het += (logreg_grad(p, i, x) - mean).squaredNorm();
    het /= 4.0;
    CHECK(std::abs(global_grad_norm_sq(p, x) - mean.squaredNorm()) <= 1e-12 * std::max(1.0, mean.squaredNorm()));
    CHECK(std::abs(heterogeneity_at(p, x) - het) <= 1e-12 * std::max(1.0, het));
  }

  NodeDataset d{Matrix::Constant(2, 1, 1.0), Vector::Constant(2, 1.0)};
  const Problem single = Problem::logistic({d}, 0.0, 0.0);
  const Vector x = Vector::Constant(1, 0.3);
  CHECK(global_grad_norm_sq(single, x) == doctest::Approx(logreg_grad(single, 0, x).squaredNorm()));
}

TEST_CASE("configs reject invalid values") {
  SynthConfig cfg;
  cfg.sigma_h = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Problem::logistic({NodeDataset{Matrix::Ones(1, 1), Vector::Constant(1, 0.5)}}, 0.0, 0.0),
                  std::invalid_argument);
}
