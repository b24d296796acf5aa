#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "restr/optimize.hpp"

namespace restr {

enum class Loss { squared_l2, l2_root, rad_correlation, vc_mismatch };

// The evaluation measure P_X realized as a finite weighted row set.
// Rules are evaluated as stacked vectors over these rows (multi-output
// predictions are flattened into consecutive rows).  For the estimated-
// discrepancy regime, row_obs groups rows by observation; weights must
// then encode the 1/n of the empirical measure so that the discrepancy
// equals (1/n)·Σ_i g(X_i, ·).
struct DiscrepancySpec {
  Loss loss = Loss::squared_l2;
  Eigen::VectorXd weights;
  std::vector<int> row_obs;
  int n_obs = 0;

  int rows() const { return static_cast<int>(weights.size()); }
};

DiscrepancySpec grid_spec(Loss loss, const Eigen::VectorXd& weights);
DiscrepancySpec empirical_spec(Loss loss, const std::vector<int>& row_obs,
                               int n_obs,
                               const Eigen::VectorXd& within_weights = {});

double discrepancy(const DiscrepancySpec& spec, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& g);

struct FitResult {
  double value = 0.0;
  Eigen::VectorXd argmin;
  long n_evals = 0;
  bool converged = true;
};

// A parametric class of prediction rules evaluated on the spec's rows.
// domain.dim()==0 marks a singleton (fixed rule).  exact_fit, when
// present, bypasses the numeric optimizer (closed-form least squares,
// constant rules, ...).
struct ModelClass {
  std::string name;
  BoxDomain domain;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> predict;
  std::function<std::optional<FitResult>(const Eigen::VectorXd& target,
                                         const DiscrepancySpec& spec)>
      exact_fit;
};

FitResult model_discrepancy(const ModelClass& model, const Eigen::VectorXd& g,
                            const DiscrepancySpec& spec,
                            const OptimSettings& opt,
                            const std::vector<Eigen::VectorXd>& warm_starts = {});

enum class InferenceKind { known_d, estimated_d_if, estimated_d_bootstrap };

struct RestrictivenessResult {
  double r_hat = 0.0;
  double se = 0.0;
  int M = 0;
  Eigen::VectorXd per_draw_model_d;
  Eigen::VectorXd per_draw_base_d;
  std::vector<Eigen::VectorXd> argmins;
  InferenceKind inference = InferenceKind::known_d;
};

struct InfluenceBundle {
  Eigen::VectorXd phi1;  // per-observation, averaged over draws
  Eigen::VectorXd phi0;
  Eigen::VectorXd psi;
  double sigma2 = 0.0;
};

// Fixed draw set; sampling over draws is the only uncertainty.
// se² = (s²_num − 2 r̂ s_cov + r̂² s²_den) / (M · mean(base d)²).
RestrictivenessResult restrictiveness_known(
    const ModelClass& model, const ModelClass& baseline,
    const std::vector<Eigen::VectorXd>& draws, const DiscrepancySpec& spec,
    const OptimSettings& opt, int workers = 1,
    const std::vector<std::vector<Eigen::VectorXd>>* warm_starts = nullptr);

// Empirical-measure regime: discrepancies are sample means over the
// observations encoded in spec.row_obs; the se comes from the plug-in
// influence function, conditional on the draws.
std::pair<RestrictivenessResult, InfluenceBundle> restrictiveness_estimated(
    const ModelClass& model, const ModelClass& baseline,
    const std::vector<Eigen::VectorXd>& draws, const DiscrepancySpec& spec,
    const OptimSettings& opt, int workers = 1,
    const std::vector<std::vector<Eigen::VectorXd>>* warm_starts = nullptr);

// Resamples observations with replacement, holding draws fixed; refits
// warm-started at the full-sample argmins.
double bootstrap_se(const ModelClass& model, const ModelClass& baseline,
                    const std::vector<Eigen::VectorXd>& draws,
                    const DiscrepancySpec& spec, int B, std::uint64_t seed,
                    const OptimSettings& opt, int workers = 1);

struct CompletenessResult {
  double kappa = 0.0;
  double se = 0.0;
  double loss_model = 0.0;
  double loss_base = 0.0;
};

// κ = (L_base − L_model) / (L_base − bench_loss)
CompletenessResult completeness(const ModelClass& model,
                                const Eigen::VectorXd& observed,
                                const ModelClass& baseline,
                                const DiscrepancySpec& spec,
                                const OptimSettings& opt, int B,
                                std::uint64_t seed, double bench_loss = 0.0,
                                int workers = 1);

// Average population risk of rules fitted on noise-free samples
// Y_i = f(X_i) of size n, for each n in n_grid.
struct LearningCurvePoint {
  int n = 0;
  double L = 0.0;
  double mc_se = 0.0;
};

using ScalarRule = std::function<double(const Eigen::VectorXd&)>;

std::vector<LearningCurvePoint> learning_curve(
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& Y)>& fitter,
    const std::vector<ScalarRule>& draws,
    const std::function<Eigen::MatrixXd(int n, std::uint64_t seed)>& sample_x,
    const std::function<double(const Eigen::VectorXd& theta,
                               const ScalarRule& f)>& population_risk,
    const std::vector<int>& n_grid, int reps, std::uint64_t seed);

// Q = ḡ(θ)' W ḡ(θ) with g_i(θ) = Z_i (Y_i − X_i'θ)
double gmm_criterion(const Eigen::VectorXd& theta, const Eigen::VectorXd& Y,
                     const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                     const Eigen::MatrixXd& weight);

}  // namespace restr
