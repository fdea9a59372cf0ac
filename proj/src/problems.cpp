#include "ledsim/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ledsim {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

Vector gaussian_vector(const RngStream& stream, int dim, double scale) {
  auto engine = stream.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (int k = 0; k < dim; ++k) v(k) = scale * normal(engine);
  return v;
}

void add_noise(const RngStream& stream, double sigma, Eigen::Ref<Vector> g) {
  auto engine = stream.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < g.size(); ++k) g(k) += sigma * normal(engine);
}

double largest_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

}  // namespace

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

void SynthConfig::validate() const {
  require(nodes >= 1 && dim >= 1 && samples >= 1, "synth sizes must be positive");
  require(eta >= 0.0 && sigma_u >= 0.0 && sigma_h >= 0.0 && sigma >= 0.0 && feature_scale >= 0.0,
          "synth scales must be nonnegative");
}

void QuadraticSpec::validate() const {
  require(nodes >= 1 && dim >= 1, "quadratic sizes must be positive");
  require(mu > 0.0 && mu <= L, "quadratic spectrum requires 0 < mu <= L");
  require(heterogeneity >= 0.0, "heterogeneity must be nonnegative");
  require(hessian_spread >= 0.0 && hessian_spread < 1.0, "hessian_spread must lie in [0, 1)");
  require(sigma >= 0.0, "sigma must be nonnegative");
}

Problem Problem::logistic(std::vector<NodeDataset> datasets, double eta, double sigma) {
  require(!datasets.empty(), "need at least one node");
  require(sigma >= 0.0 && eta >= 0.0, "eta and sigma must be nonnegative");
  Problem p;
  p.n_nodes_ = static_cast<int>(datasets.size());
  p.dim_ = static_cast<int>(datasets.front().features.cols());
  p.sigma_ = sigma;
  double lmax = 0.0;
  for (const auto& d : datasets) {
    require(d.features.cols() == p.dim_, "all nodes must share the dimension");
    require(d.features.rows() >= 1 && d.features.rows() == d.labels.size(), "dataset shape mismatch");
    require(((d.labels.array() == 1.0) || (d.labels.array() == -1.0)).all(), "labels must be +1 or -1");
    const Eigen::MatrixXd gram = d.features.transpose() * d.features;
    lmax = std::max(lmax, largest_eigenvalue(gram) / (4.0 * static_cast<double>(d.features.rows())));
  }
  // The regularizer's second derivative is bounded by 2 in absolute value.
  p.smoothness_ = lmax + 2.0 * eta;
  p.terms_ = LogisticTerms{std::move(datasets), eta};
  return p;
}

Problem Problem::quadratic(std::vector<Matrix> hessians, std::vector<Vector> linear, double sigma) {
  require(!hessians.empty() && hessians.size() == linear.size(), "need matching hessians and linear terms");
  require(sigma >= 0.0, "sigma must be nonnegative");
  Problem p;
  p.n_nodes_ = static_cast<int>(hessians.size());
  p.dim_ = static_cast<int>(hessians.front().rows());
  p.sigma_ = sigma;
  Eigen::MatrixXd mean_hessian = Eigen::MatrixXd::Zero(p.dim_, p.dim_);
  Vector mean_linear = Vector::Zero(p.dim_);
  double lmax = 0.0;
  for (std::size_t i = 0; i < hessians.size(); ++i) {
    Matrix& a = hessians[i];
    require(a.rows() == p.dim_ && a.cols() == p.dim_ && linear[i].size() == p.dim_, "quadratic shape mismatch");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()),
            "hessians must be symmetric");
    a = 0.5 * (a + a.transpose()).eval();
    mean_hessian += a;
    mean_linear += linear[i];
    lmax = std::max(lmax, largest_eigenvalue(a));
  }
  mean_hessian /= static_cast<double>(p.n_nodes_);
  mean_linear /= static_cast<double>(p.n_nodes_);
  p.smoothness_ = lmax;
  Eigen::LLT<Eigen::MatrixXd> llt(mean_hessian);
  if (llt.info() == Eigen::Success) p.minimizer_ = llt.solve(mean_linear);
  p.terms_ = QuadraticTerms{std::move(hessians), std::move(linear)};
  return p;
}

Problem Problem::with_noise(double sigma) const {
  require(sigma >= 0.0, "sigma must be nonnegative");
  Problem copy = *this;
  copy.sigma_ = sigma;
  return copy;
}

double Problem::value(int node, const Eigen::Ref<const Vector>& x) const {
  require(node >= 0 && node < n_nodes_ && x.size() == dim_, "bad node index or dimension");
  if (const auto* lt = std::get_if<LogisticTerms>(&terms_)) {
    const NodeDataset& d = lt->datasets[static_cast<std::size_t>(node)];
    const Vector margins = d.features * x;
    double loss = 0.0;
    for (Eigen::Index s = 0; s < margins.size(); ++s) loss += softplus(-d.labels(s) * margins(s));
    loss /= static_cast<double>(margins.size());
    const double reg = (x.array().square() / (1.0 + x.array().square())).sum();
    return loss + lt->eta * reg;
  }
  const auto& qt = std::get<QuadraticTerms>(terms_);
  const auto i = static_cast<std::size_t>(node);
  return 0.5 * x.dot(qt.hessians[i] * x) - qt.linear[i].dot(x);
}

void Problem::gradient(int node, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  if (const auto* lt = std::get_if<LogisticTerms>(&terms_)) {
    const NodeDataset& d = lt->datasets[static_cast<std::size_t>(node)];
    const Eigen::ArrayXd t = -(d.labels.array() * (d.features * x).array());
    // d/dz ln(1 + exp(-y z)) = -y * sigmoid(-y z)
    const Eigen::ArrayXd coef =
        -d.labels.array() / (1.0 + (-t).exp()) / static_cast<double>(d.features.rows());
    out.noalias() = d.features.transpose() * coef.matrix();
    const Eigen::ArrayXd sq = 1.0 + x.array().square();
    out.array() += lt->eta * 2.0 * x.array() / sq.square();
    return;
  }
  const auto& qt = std::get<QuadraticTerms>(terms_);
  const auto i = static_cast<std::size_t>(node);
  out.noalias() = qt.hessians[i] * x;
  out -= qt.linear[i];
}

Vector Problem::gradient(int node, const Eigen::Ref<const Vector>& x) const {
  require(node >= 0 && node < n_nodes_ && x.size() == dim_, "bad node index or dimension");
  Vector g(dim_);
  gradient(node, x, g);
  return g;
}

Vector Problem::stochastic_gradient(int node, const Eigen::Ref<const Vector>& x, const RngStream& stream) const {
  Vector g = gradient(node, x);
  if (sigma_ > 0.0) add_noise(stream, sigma_, g);
  return g;
}

void Problem::gradients(const Matrix& points, Matrix& grads) const {
  require(points.rows() == n_nodes_ && points.cols() == dim_, "point matrix shape mismatch");
  grads.resize(n_nodes_, dim_);
  Vector x(dim_);
  Vector g(dim_);
  for (int i = 0; i < n_nodes_; ++i) {
    x = points.row(i).transpose();
    gradient(i, x, g);
    grads.row(i) = g.transpose();
  }
}

void Problem::stochastic_gradients(const Matrix& points, const RngStream& run_stream, std::uint64_t round,
                                   std::uint64_t step, Matrix& grads) const {
  gradients(points, grads);
  if (sigma_ == 0.0) return;
  const RngStream step_stream = run_stream.round(round).step(step);
  Vector g(dim_);
  for (int i = 0; i < n_nodes_; ++i) {
    g = grads.row(i).transpose();
    add_noise(step_stream.node(static_cast<std::uint64_t>(i)).purpose(Purpose::kGradientNoise), sigma_, g);
    grads.row(i) = g.transpose();
  }
}

double Problem::global_value(const Eigen::Ref<const Vector>& x) const {
  double total = 0.0;
  for (int i = 0; i < n_nodes_; ++i) total += value(i, x);
  return total / n_nodes_;
}

Vector Problem::global_gradient(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim_, "dimension mismatch");
  Vector total = Vector::Zero(dim_);
  Vector g(dim_);
  for (int i = 0; i < n_nodes_; ++i) {
    gradient(i, x, g);
    total += g;
  }
  return total / static_cast<double>(n_nodes_);
}

std::optional<double> Problem::optimal_value() const {
  if (!minimizer_) return std::nullopt;
  return global_value(*minimizer_);
}

const std::vector<NodeDataset>& Problem::datasets() const {
  const auto* lt = std::get_if<LogisticTerms>(&terms_);
  if (lt == nullptr) throw std::logic_error("not a logistic problem");
  return lt->datasets;
}

double Problem::regularization() const {
  const auto* lt = std::get_if<LogisticTerms>(&terms_);
  if (lt == nullptr) throw std::logic_error("not a logistic problem");
  return lt->eta;
}

const std::vector<Matrix>& Problem::hessians() const {
  const auto* qt = std::get_if<QuadraticTerms>(&terms_);
  if (qt == nullptr) throw std::logic_error("not a quadratic problem");
  return qt->hessians;
}

const std::vector<Vector>& Problem::linear_terms() const {
  const auto* qt = std::get_if<QuadraticTerms>(&terms_);
  if (qt == nullptr) throw std::logic_error("not a quadratic problem");
  return qt->linear;
}

Problem synth_logistic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const RngStream root(seed);
  const Vector shared = gaussian_vector(root.purpose(Purpose::kSharedModel), cfg.dim, cfg.sigma_u);
  std::vector<NodeDataset> datasets;
  datasets.reserve(static_cast<std::size_t>(cfg.nodes));
  for (int i = 0; i < cfg.nodes; ++i) {
    const RngStream node = root.node(static_cast<std::uint64_t>(i));
    const Vector model = shared + gaussian_vector(node.purpose(Purpose::kNodeShift), cfg.dim, cfg.sigma_h);

    NodeDataset d;
    d.features.resize(cfg.samples, cfg.dim);
    d.labels.resize(cfg.samples);
    auto feature_engine = node.purpose(Purpose::kFeatures).engine();
    auto label_engine = node.purpose(Purpose::kLabels).engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int s = 0; s < cfg.samples; ++s) {
      for (int k = 0; k < cfg.dim; ++k) d.features(s, k) = cfg.feature_scale * normal(feature_engine);
      const double margin = d.features.row(s).dot(model.transpose());
      const double prob_positive = 1.0 / (1.0 + std::exp(-margin));
      d.labels(s) = uniform(label_engine) <= prob_positive ? 1.0 : -1.0;
    }
    datasets.push_back(std::move(d));
  }
  return Problem::logistic(std::move(datasets), cfg.eta, cfg.sigma);
}

Problem quadratic_problem(const QuadraticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = spec.nodes;
  const int m = spec.dim;
  const RngStream root(seed);

  // Basis and average spectrum are drawn independently of the node count, so
  // instances that differ only in `nodes` share their average Hessian.
  Eigen::MatrixXd gauss(m, m);
  {
    auto engine = root.purpose(Purpose::kHessianBasis).engine();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) gauss(r, c) = normal(engine);
  }
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();

  Vector spectrum(m);
  spectrum(0) = spec.mu;
  if (m >= 2) {
    auto engine = root.purpose(Purpose::kHessianSpectrum).engine();
    std::uniform_real_distribution<double> uniform(spec.mu, spec.L);
    for (int k = 1; k < m - 1; ++k) spectrum(k) = uniform(engine);
    spectrum(m - 1) = spec.L;
    std::sort(spectrum.begin(), spectrum.end());
  }

  const double spread = spec.heterogeneity > 0.0 ? spec.hessian_spread : 0.0;
  Matrix offsets(n, m);
  for (int i = 0; i < n; ++i) {
    auto engine = root.purpose(Purpose::kHessianSpread).node(static_cast<std::uint64_t>(i)).engine();
    std::uniform_real_distribution<double> uniform(-0.5, 0.5);
    for (int k = 0; k < m; ++k) offsets(i, k) = uniform(engine);
  }
  offsets.rowwise() -= offsets.colwise().mean();

  const Vector center = gaussian_vector(root.purpose(Purpose::kLinearTerm), m, 1.0);
  Matrix shifts(n, m);
  for (int i = 0; i < n; ++i) {
    shifts.row(i) =
        gaussian_vector(root.purpose(Purpose::kLinearTerm).node(static_cast<std::uint64_t>(i)), m, 1.0).transpose();
  }
  shifts.rowwise() -= shifts.colwise().mean();

  std::vector<Matrix> hessians;
  std::vector<Vector> linear;
  for (int i = 0; i < n; ++i) {
    const Vector eig = spectrum.array() * (1.0 + spread * offsets.row(i).transpose().array());
    Matrix a = basis * eig.asDiagonal() * basis.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    linear.push_back(a * center + spec.heterogeneity * shifts.row(i).transpose());
    hessians.push_back(std::move(a));
  }
  return Problem::quadratic(std::move(hessians), std::move(linear), spec.sigma);
}

double logreg_value(const Problem& problem, int node, const Eigen::Ref<const Vector>& x) {
  require(problem.is_logistic(), "not a logistic problem");
  return problem.value(node, x);
}

Vector logreg_grad(const Problem& problem, int node, const Eigen::Ref<const Vector>& x) {
  require(problem.is_logistic(), "not a logistic problem");
  return problem.gradient(node, x);
}

Vector stoch_grad(const Problem& problem, int node, const Eigen::Ref<const Vector>& x, const RngStream& stream) {
  return problem.stochastic_gradient(node, x, stream);
}

double global_grad_norm_sq(const Problem& problem, const Eigen::Ref<const Vector>& x) {
  return problem.global_gradient(x).squaredNorm();
}

double heterogeneity_at(const Problem& problem, const Eigen::Ref<const Vector>& x) {
  const Vector mean = problem.global_gradient(x);
  double total = 0.0;
  for (int i = 0; i < problem.n_nodes(); ++i) total += (problem.gradient(i, x) - mean).squaredNorm();
  return total / problem.n_nodes();
}

}  // namespace ledsim
