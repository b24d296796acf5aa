#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "restr/choice.hpp"
#include "restr/engine.hpp"
#include "restr/kernels.hpp"
#include "restr/markets.hpp"

namespace restr {

// Indices of the L instruments with the largest |sample correlation
// with price| over the stacked rows, ties broken by lower index.
// Zero-variance candidates are excluded with a warning.
std::vector<int> select_instruments(const std::vector<Market>& markets, int L,
                                    std::vector<std::string>* warnings =
                                        nullptr);

// Full quadratic basis in the selected instruments evaluated at every
// stacked row: 1, z_l, z_l², z_l·z_k (l<k).  Rank-deficient columns are
// dropped (with a warning) before the thin-QR factor used for
// projections is formed.
struct ProjectionBasis {
  Eigen::MatrixXd columns;           // N × P, kept columns only
  Eigen::MatrixXd thin_q;            // N × P, orthonormal
  std::vector<std::string> labels;   // kept column labels
  std::vector<std::string> warnings; // dropped columns, if any
};

ProjectionBasis make_projection_basis(const ChoiceDesign& d,
                                      const std::vector<int>& iv_idx);

// Least-squares split h = h̄ + h̃ with h̄ in the basis span; returns
// (h̄, h̃).  h̃ is orthogonal to every basis column.
std::pair<Eigen::VectorXd, Eigen::VectorXd> project_onto_instruments(
    const Eigen::VectorXd& h, const ProjectionBasis& basis);

// One control-function draw: a random-Fourier-feature function over the
// standardized (price, instruments) coordinates, its projection onto
// the instrument basis, and the residual h̃ that enters utilities.
struct HDraw {
  RffBasis rff;
  Eigen::VectorXd values;
  Eigen::VectorXd hbar;
  Eigen::VectorXd htilde;
};

// Everything about the endogenous setting that is fixed across θ and h:
// the stacked markets (with observed shares — the outside share is held
// fixed), the selected instruments, the projection basis, and the
// standardized coordinates feeding the control-function draws.  The
// coordinates are always price plus the top two instruments, so using
// more instruments only grows the projection basis (the same function
// draws lose more of their span), never the functions themselves.
struct IvDesign {
  const ChoiceDesign* d = nullptr;
  std::vector<int> iv;
  ProjectionBasis basis;
  Eigen::MatrixXd xi;   // N × (1+min(2,L)), standardized per coordinate
  Eigen::VectorXd s0;   // observed outside share per market

  int N() const { return d->N(); }
  int n_markets() const { return d->n_markets(); }
};

// Selects num_iv instruments, builds the basis and coordinates.
// Requires observed shares on every market.
IvDesign make_iv_design(const ChoiceDesign& d, int num_iv);

struct RffSettings {
  int D = 512;
  double lengthscale = 1.0;
  double sd = 1.0;
};

HDraw sample_h(const IvDesign& iv, const RffSettings& rff, std::uint64_t seed);
std::vector<HDraw> sample_h_set(const IvDesign& iv, const RffSettings& rff,
                                int M_h, std::uint64_t seed);

// Inside-good share maps at fixed outside share: utilities
// u_j = x_j'β + adjust_j, inside softmax (or its nested / mixed analog
// over inside goods only) rescaled so inside shares sum to exactly
// 1 − s0.  θ layouts match the exogenous classes: mnl β (3);
// nl (β, ρ); mxl (β, σ) with R mixing draws keyed by seed.
Eigen::VectorXd iv_share_map(ChoiceFamily family, const Market& m,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& u_adjust, double s0,
                             int R = 200, std::uint64_t seed = 4242);

// Stacked fast path: utilities X·β + h̃ by market, rescaled to the
// design's fixed outside shares.  nu is the R×3 mixing matrix for mxl
// (ignored otherwise).
Eigen::VectorXd iv_stacked_shares(const IvDesign& iv, ChoiceFamily family,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& htilde,
                                  const Eigen::MatrixXd& nu);

// Rescales a pseudo-true share rule market-by-market so its inside
// shares also sum to 1 − s0m, making it comparable with the
// fixed-outside-share classes.
Eigen::VectorXd rescale_to_outside(const IvDesign& iv, Eigen::VectorXd shares);

// Semiparametric class over θ AND the M_h candidate control functions,
// encoded for the engine as an augmented parameter [h_index; θ] with
// exact_fit performing the double minimization: for each h (in order),
// the θ-minimization is warm-started at the incumbent argmin and at a
// per-h logit inversion.  predict decodes the h index, so influence
// and bootstrap machinery see an ordinary model class.
ModelClass semiparam_model(const IvDesign& iv, ChoiceFamily family,
                           const std::vector<HDraw>& hs, int R,
                           const OptimSettings& theta_opt,
                           std::uint64_t nu_seed = 2024);

// β = 0 baseline with the same control-function flexibility: the model-
// independent inside softmax of h̃ alone, minimized over the h draws.
ModelClass endog_baseline_model(const IvDesign& iv,
                                const std::vector<HDraw>& hs);

// min over h draws of min over θ of the share discrepancy against g.
struct SemiparamFit {
  double value = 0.0;
  Eigen::VectorXd theta;
  int h_index = 0;
};
SemiparamFit semiparam_discrepancy(const IvDesign& iv, ChoiceFamily family,
                                   const Eigen::VectorXd& g,
                                   const std::vector<HDraw>& hs,
                                   const OptimSettings& theta_opt, int R = 200,
                                   std::uint64_t nu_seed = 2024);

struct EndogTableRow {
  EligibleKind kind;
  ChoiceFamily family;
  RestrictivenessResult result;
};

struct EndogSettings {
  int M = 50;           // pseudo-rule draws
  int M_h = 20;         // control-function candidates
  int num_iv = 2;
  int R_opt = 200;      // mixing draws during optimization
  int R_report = 2000;  // mixing draws for reported values
  RffSettings rff;
};

// Restrictiveness of the semiparametric classes against each eligible
// set under the fixed-outside-share discrepancy, markets as
// observations.  One h candidate set is drawn per table and shared by
// every family and pseudo draw, so baselines agree exactly across
// families.
std::vector<EndogTableRow> endog_table(const ChoiceDesign& d,
                                       const EligibleChoiceSampler& sampler,
                                       const std::vector<EligibleKind>& kinds,
                                       const EndogSettings& settings,
                                       const OptimSettings& theta_opt,
                                       std::uint64_t seed, int workers = 1);

}  // namespace restr
