#include "restr/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace restr {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kTwoPi = 6.283185307179586476925286766559;

double matern32(double r, double variance, double lengthscale) {
  double s = kSqrt3 * r / lengthscale;
  return variance * (1.0 + s) * std::exp(-s);
}

double sqexp(double r, double variance, double lengthscale) {
  return variance * std::exp(-r * r / (2.0 * lengthscale * lengthscale));
}
}  // namespace

void KernelSpec::validate() const {
  if (!(variance > 0.0)) throw std::invalid_argument("kernel variance must be > 0");
  if (!(lengthscale > 0.0))
    throw std::invalid_argument("kernel lengthscale must be > 0");
  if (categorical_correlation < -1.0 || categorical_correlation > 1.0)
    throw std::invalid_argument("categorical correlation must lie in [-1,1]");
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2) {
  spec.validate();
  if (x.size() != x2.size())
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  switch (spec.family) {
    case KernelFamily::matern32:
      return matern32((x - x2).norm(), spec.variance, spec.lengthscale);
    case KernelFamily::sqexp:
      return sqexp((x - x2).norm(), spec.variance, spec.lengthscale);
    case KernelFamily::product_categorical: {
      if (x.size() < 2)
        throw std::invalid_argument(
            "product_categorical needs a continuous and a categorical coordinate");
      int d = static_cast<int>(x.size()) - 1;
      double r = (x.head(d) - x2.head(d)).norm();
      double cat = (x[d] == x2[d]) ? 1.0 : spec.categorical_correlation;
      return matern32(r, spec.variance, spec.lengthscale) * cat;
    }
  }
  throw std::logic_error("unknown kernel family");
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec,
                            const Eigen::MatrixXd& points, double jitter) {
  if (jitter < 0.0) throw std::invalid_argument("jitter must be >= 0");
  int n = static_cast<int>(points.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double v = kernel_eval(spec, points.row(i), points.row(j));
      K(i, j) = v;
      K(j, i) = v;
    }
    K(i, i) += jitter;
  }
  return K;
}

Eigen::MatrixXd gram_cholesky(const KernelSpec& spec,
                              const Eigen::MatrixXd& points) {
  spec.validate();
  double jitter = 1e-10 * spec.variance;
  const double cap = 1e-6 * spec.variance;
  Eigen::MatrixXd K = gram_matrix(spec, points, 0.0);
  for (;;) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    if (jitter >= cap)
      throw std::runtime_error("gram_cholesky: factorization failed at maximum jitter");
    jitter *= 10.0;
  }
}

GpSampler::GpSampler(const KernelSpec& spec, const Eigen::MatrixXd& points)
    : points_(points), L_(gram_cholesky(spec, points)) {}

Eigen::VectorXd GpSampler::draw(Rng& rng) const {
  int n = static_cast<int>(L_.rows());
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return L_ * z;
}

GridSample gp_sample(const KernelSpec& spec, const Eigen::MatrixXd& points,
                     std::uint64_t seed) {
  GpSampler sampler(spec, points);
  Rng rng(seed);
  GridSample out;
  out.points = points;
  out.values = sampler.draw(rng);
  return out;
}

double RffBasis::eval(const Eigen::VectorXd& xi) const {
  int D = static_cast<int>(amplitudes.size());
  double acc = 0.0;
  for (int d = 0; d < D; ++d)
    acc += amplitudes[d] * std::cos(frequencies.row(d).dot(xi) + phases[d]);
  return std::sqrt(2.0 / D) * acc;
}

Eigen::VectorXd RffBasis::eval_batch(const Eigen::MatrixXd& X) const {
  int D = static_cast<int>(amplitudes.size());
  Eigen::MatrixXd angles = X * frequencies.transpose();  // n × D
  angles.rowwise() += phases.transpose();
  return std::sqrt(2.0 / D) * (angles.array().cos().matrix() * amplitudes);
}

RffBasis rff_sample(int D, double lengthscale, double amplitude_sd, int dim,
                    std::uint64_t seed) {
  if (D < 1) throw std::invalid_argument("rff_sample: D must be >= 1");
  if (!(lengthscale > 0.0) || !(amplitude_sd >= 0.0) || dim < 1)
    throw std::invalid_argument("rff_sample: bad settings");
  RffBasis basis;
  basis.frequencies.resize(D, dim);
  basis.amplitudes.resize(D);
  basis.phases.resize(D);
  basis.amplitude_sd = amplitude_sd;
  Rng rng(seed);
  for (int d = 0; d < D; ++d) {
    basis.amplitudes[d] = amplitude_sd * rng.normal();
    basis.phases[d] = kTwoPi * rng.uniform();
    for (int k = 0; k < dim; ++k)
      basis.frequencies(d, k) = rng.student_t3() / lengthscale;
  }
  return basis;
}

namespace {

// Clamped cubic B-spline columns at t ∈ [0,1] with the given interior
// knots: K+4 local bumps forming a partition of unity, so adjacent
// coefficient differences measure the curvature of the drawn function.
Eigen::VectorXd bspline_columns(double t, const Eigen::VectorXd& knots_t) {
  const int deg = 3;
  const int K = static_cast<int>(knots_t.size());
  const int P = K + deg + 1;
  Eigen::VectorXd T(K + 2 * (deg + 1));
  for (int i = 0; i <= deg; ++i) T[i] = 0.0;
  for (int i = 0; i < K; ++i) T[deg + 1 + i] = knots_t[i];
  for (int i = 0; i <= deg; ++i) T[deg + 1 + K + i] = 1.0;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(P);
  // degree 0 on the padded knot vector, right-closed at t = 1
  Eigen::VectorXd n = Eigen::VectorXd::Zero(T.size() - 1);
  for (int i = 0; i < n.size(); ++i)
    if ((t >= T[i] && t < T[i + 1]) || (t >= 1.0 && T[i] < T[i + 1] && T[i + 1] >= 1.0))
      n[i] = 1.0;
  for (int d = 1; d <= deg; ++d)
    for (int i = 0; i + d + 1 < T.size(); ++i) {
      double left = 0.0, right = 0.0;
      if (T[i + d] > T[i]) left = (t - T[i]) / (T[i + d] - T[i]) * n[i];
      if (T[i + d + 1] > T[i + 1])
        right = (T[i + d + 1] - t) / (T[i + d + 1] - T[i + 1]) * n[i + 1];
      n[i] = left + right;
    }
  for (int i = 0; i < P; ++i) b[i] = n[i];
  return b;
}

// Second differences padded to full rank so a diverging penalty shrinks
// every coefficient (the flat-draw limit).  The two padding rows carry a
// small weight: at moderate penalties the level and slope directions stay
// close to diffuse, as in a standard P-spline whose difference penalty
// leaves them unpenalized.
Eigen::MatrixXd padded_second_difference(int P) {
  const double pad = 0.3;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(P, P);
  for (int i = 0; i < P; ++i) {
    D(i, i) = 1.0;
    if (i >= 1) D(i, i - 1) = -2.0;
    if (i >= 2) D(i, i - 2) = 1.0;
    if (i < 2) D.row(i) *= pad;
  }
  return D;
}

}  // namespace

double SplineDraw::eval(const Eigen::VectorXd& x) const { return eval(x, -1); }

double SplineDraw::eval(const Eigen::VectorXd& x, int category) const {
  double acc = intercept;
  double prior_var = intercept_var;
  for (size_t j = 0; j < coefficients.size(); ++j) {
    double lo = ranges[j].first, hi = ranges[j].second;
    double t = (x[static_cast<int>(j)] - lo) / (hi - lo);
    Eigen::VectorXd knots_t(knots[j].size());
    for (int i = 0; i < knots_t.size(); ++i)
      knots_t[i] = (knots[j][i] - lo) / (hi - lo);
    Eigen::VectorXd q = bspline_columns(t, knots_t) - col_mean[j];
    acc += q.dot(coefficients[j]);
    prior_var += q.dot(cov * q);
  }
  if (category_effect.size() > 0) prior_var += 1.0;
  if (category >= 0 && category < category_effect.size())
    acc += category_effect[category];
  return scale * acc / std::sqrt(prior_var);
}

SplineDraw spline_prior_sample(
    const std::vector<std::pair<double, double>>& x_range,
    const SplineSettings& settings, std::uint64_t seed) {
  if (settings.knots < 1) throw std::invalid_argument("spline: K must be >= 1");
  if (settings.penalty < 0.0)
    throw std::invalid_argument("spline: penalty must be >= 0");
  for (auto& r : x_range)
    if (!(r.second > r.first))
      throw std::invalid_argument("spline: degenerate range");

  const int K = settings.knots;
  const int P = K + 4;  // clamped cubic B-spline basis size
  const int n_ref = 201;

  SplineDraw draw;
  draw.penalty = settings.penalty;
  draw.ranges = x_range;

  Rng rng(seed);
  draw.intercept = settings.coef_scale * settings.intercept_sd * rng.normal();
  draw.intercept_var = settings.intercept_sd * settings.intercept_sd;

  Eigen::VectorXd knots_t(K);
  for (int i = 0; i < K; ++i) knots_t[i] = (i + 1.0) / (K + 1.0);

  // Shared across dimensions: basis geometry is identical in t units.
  // Columns are orthogonalized against the intercept (centered over a
  // reference grid); the coefficient prior keeps the natural B-spline
  // index so adjacent differences penalize curvature.
  Eigen::MatrixXd B(n_ref, P);
  for (int r = 0; r < n_ref; ++r)
    B.row(r) = bspline_columns(r / (n_ref - 1.0), knots_t).transpose();
  Eigen::VectorXd mu = B.colwise().mean();

  Eigen::MatrixXd D = padded_second_difference(P);
  Eigen::MatrixXd prec =
      Eigen::MatrixXd::Identity(P, P) + settings.penalty * (D.transpose() * D);
  Eigen::MatrixXd cov = prec.inverse();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spline_prior_sample: singular penalty system");
  Eigen::MatrixXd Lc = llt.matrixL();
  draw.cov = cov;

  for (size_t j = 0; j < x_range.size(); ++j) {
    Eigen::VectorXd z(P);
    for (int i = 0; i < P; ++i) z[i] = rng.normal();
    draw.coefficients.push_back(settings.coef_scale * (Lc * z));
    Eigen::VectorXd kx(K);
    for (int i = 0; i < K; ++i)
      kx[i] = x_range[j].first + knots_t[i] * (x_range[j].second - x_range[j].first);
    draw.knots.push_back(kx);
    draw.col_mean.push_back(mu);
  }

  if (settings.n_categories > 0) {
    double rho = settings.rho_cat;
    int C = settings.n_categories;
    // equicorrelated: c = sqrt(rho)·u·1 + sqrt(1−rho)·ε
    double u = rng.normal();
    draw.category_effect.resize(C);
    for (int c = 0; c < C; ++c)
      draw.category_effect[c] =
          settings.coef_scale *
          (std::sqrt(rho) * u + std::sqrt(1.0 - rho) * rng.normal());
  }

  // coef_scale cancels against the standardization in eval, which divides
  // by the analytic prior sd of the accumulated value
  draw.scale = settings.target_sd / settings.coef_scale;
  return draw;
}

}  // namespace restr
