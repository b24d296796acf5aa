#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "restr/rng.hpp"
#include "restr/types.hpp"

namespace restr {

enum class KernelFamily { matern32, sqexp, product_categorical };

// product_categorical treats the last input coordinate as a category
// label and multiplies a Matérn-3/2 kernel over the remaining
// coordinates by (1{d=d'} + rho_cat·1{d≠d'}).
struct KernelSpec {
  KernelFamily family = KernelFamily::matern32;
  double variance = 1.0;             // σ²
  double lengthscale = 1.0;          // ℓ
  double categorical_correlation = 0.0;  // ρ_cat

  void validate() const;
};

struct GridSample {
  Eigen::MatrixXd points;  // n × dim
  Eigen::VectorXd values;  // n
  std::optional<PartialOrderSpec> order;
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& x2);

Eigen::MatrixXd gram_matrix(const KernelSpec& spec,
                            const Eigen::MatrixXd& points, double jitter);

// Lower Cholesky factor of the Gram matrix, with the jitter schedule
// 1e-10·σ² escalating ×10 up to 1e-6·σ².  Throws on persistent failure.
Eigen::MatrixXd gram_cholesky(const KernelSpec& spec,
                              const Eigen::MatrixXd& points);

// Factors once; draws are L·z with z standard normal from the stream.
class GpSampler {
 public:
  GpSampler(const KernelSpec& spec, const Eigen::MatrixXd& points);

  Eigen::VectorXd draw(Rng& rng) const;
  const Eigen::MatrixXd& chol() const { return L_; }
  const Eigen::MatrixXd& points() const { return points_; }

 private:
  Eigen::MatrixXd points_;
  Eigen::MatrixXd L_;
};

GridSample gp_sample(const KernelSpec& spec, const Eigen::MatrixXd& points,
                     std::uint64_t seed);

// Random Fourier feature expansion h(ξ) = sqrt(2/D)·Σ_d a_d cos(w_d'ξ + b_d).
// Frequencies are Student-t(3)/ℓ per coordinate, which reproduces a
// Matérn-3/2 covariance coordinatewise.
struct RffBasis {
  Eigen::MatrixXd frequencies;  // D × dim
  Eigen::VectorXd amplitudes;   // D
  Eigen::VectorXd phases;       // D, in [0, 2π)
  double amplitude_sd = 1.0;

  double eval(const Eigen::VectorXd& xi) const;
  Eigen::VectorXd eval_batch(const Eigen::MatrixXd& X) const;
};

RffBasis rff_sample(int D, double lengthscale, double amplitude_sd, int dim,
                    std::uint64_t seed);

// Additive penalized-spline prior draw: per continuous dimension a
// clamped cubic B-spline basis with K interior knots, non-intercept
// columns orthogonalized against the intercept (centered over a
// reference grid), and coefficients α ~ N(0, (I + λD'D)^{-1}) with D a
// full-rank (weight-padded) second-difference matrix in the natural
// basis index, so the penalty shrinks curvature while level and slope
// stay close to diffuse.  An optional equicorrelated category effect is
// added, and the draw is standardized by its analytic pointwise prior
// sd, so every marginal variance equals target_sd² — matching a
// stationary GP of that variance.
struct SplineDraw {
  std::vector<Eigen::VectorXd> knots;       // per dimension, in x units
  std::vector<Eigen::VectorXd> coefficients;
  double penalty = 10.0;
  Eigen::VectorXd category_effect;          // empty if no categories

  std::vector<std::pair<double, double>> ranges;
  std::vector<Eigen::VectorXd> col_mean;    // per dimension
  Eigen::MatrixXd cov;                      // coefficient prior covariance
  double intercept = 0.0;
  double intercept_var = 1.0;               // prior variance of the intercept
  double scale = 1.0;

  double eval(const Eigen::VectorXd& x) const;
  double eval(const Eigen::VectorXd& x, int category) const;
};

struct SplineSettings {
  int knots = 4;            // K interior knots
  double penalty = 10.0;    // λ
  double coef_scale = 0.6;
  int n_categories = 0;
  double rho_cat = 0.6;
  double target_sd = 1.0;
  // Prior sd of the intercept relative to a unit-variance column direction.
  // Controls how much of each draw is a common level, mirroring the
  // long-range correlation a stationary kernel would induce.
  double intercept_sd = 1.0;
};

SplineDraw spline_prior_sample(
    const std::vector<std::pair<double, double>>& x_range,
    const SplineSettings& settings, std::uint64_t seed);

}  // namespace restr
