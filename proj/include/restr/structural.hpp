#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "restr/engine.hpp"
#include "restr/kernels.hpp"
#include "restr/optimize.hpp"

namespace restr {

// ---------------------------------------------------------------------
// Two-equation simultaneous system  y = By + α + Γx  with off-diagonal
// B (interaction coefficients β₁, β₂) and diagonal Γ (own-shifter
// coefficients γ₁, γ₂).
// ---------------------------------------------------------------------

struct SimEqParams {
  Eigen::Vector2d alpha = Eigen::Vector2d::Zero();
  double beta1 = 0.0;   // effect of y₂ on y₁
  double beta2 = 0.0;   // effect of y₁ on y₂
  double gamma1 = 0.0;  // effect of x₁ on y₁
  double gamma2 = 0.0;  // effect of x₂ on y₂
};

// Solved outcome (I − B)⁻¹(α + Γx).  Throws std::domain_error when
// β₁β₂ = 1 (singular system).
Eigen::Vector2d ds_reduced_form(const SimEqParams& p,
                                const Eigen::Vector2d& x);

// Discrete evaluation design shared by the three demand–supply modes:
// exogenous shifters x = (x₁, x₂) uniform on a 5×5 grid over [−1, 1]²,
// and an endogenous price P = π(x) + e with π(x) = 1 + 0.8x₁ + 0.6x₂
// and e a symmetric 5-point shock, so every conditional mean is an
// exact finite sum.
struct DsDesign {
  Eigen::MatrixXd x;             // n_x × 2 shifter grid
  Eigen::VectorXd x_weight;      // n_x, sums to 1
  Eigen::VectorXd p;             // n_atoms prices, grouped by x point
  Eigen::VectorXd joint_weight;  // n_atoms, sums to 1
  std::vector<int> atom_x;       // x index of each atom

  int n_x() const { return static_cast<int>(x.rows()); }
  int n_atoms() const { return static_cast<int>(p.size()); }

  // E[P | x], one entry per grid point
  Eigen::VectorXd pbar() const;
  // E[f(P, x₁) | x] for a rule tabulated on the atoms
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& f_atoms) const;
};

DsDesign make_ds_design();

// Default GP prior over eligible rules (both the ℝ²-valued rules on the
// shifter grid and the scalar rules on the (P, x₁) atoms).
KernelSpec ds_kernel_defaults();

// M stacked draws (f₁ over the grid; f₂ over the grid), length 2·n_x.
std::vector<Eigen::VectorXd> ds_rf_eligible_draws(const DsDesign& d,
                                                  const KernelSpec& kernel,
                                                  int M, std::uint64_t seed);

// M scalar rules tabulated on the (P, x₁) atoms, length n_atoms.
std::vector<Eigen::VectorXd> ds_joint_eligible_draws(const DsDesign& d,
                                                     const KernelSpec& kernel,
                                                     int M,
                                                     std::uint64_t seed);

// Solved-system rule class over the shifter grid: θ = (α₁, α₂, β₁, β₂,
// γ₁, γ₂) predicting the stacked (f̄₁; f̄₂) values.
BoxDomain ds_rf_default_box();
ModelClass ds_rf_model(const DsDesign& d, const BoxDomain& box);

// Analytic inverse of the best affine fit (c, D) to a stacked draw,
// mapped back to θ and clipped into the box: a warm start that hits
// the least-squares optimum whenever the inverse is interior.
Eigen::VectorXd ds_rf_warm_start(const DsDesign& d, const BoxDomain& box,
                                 const Eigen::VectorXd& stacked_draw);

// Demand rule observed through the shifters alone: θ = (α₀, β₀, γ₀)
// predicting α₀ + β₀·E[P|x] + γ₀x₁ on the grid.
ModelClass demand_only_model(const DsDesign& d, const BoxDomain& box);
BoxDomain demand_only_default_box();

// Demand rule on the joint (P, x₁) atoms: θ = (α₁, β₁, γ₁) predicting
// α₁ + β₁P + γ₁x₁ atom by atom.
ModelClass ds_sf_model(const DsDesign& d, const BoxDomain& box);

// Constant-rule baseline over `blocks` equal-length output blocks;
// exact_fit is the weighted block mean under the spec's row weights, so
// the baseline discrepancy equals the (sum of) weighted variances.
ModelClass constant_rule_baseline(int rows, int blocks);

DiscrepancySpec ds_rf_spec(const DsDesign& d);
DiscrepancySpec demand_only_spec(const DsDesign& d);
DiscrepancySpec ds_sf_spec(const DsDesign& d);

// Ratio of the solved-system fit error to the variance baseline over M
// GP draws; fixed-draw (delta-method) inference.
RestrictivenessResult ds_rf_restrictiveness(const DsDesign& d,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt);

// Conditional-mean reduction of the demand equation: per draw the rule
// f(P, x₁) enters only through f̄(x) = E[f(P, x₁)|x].
RestrictivenessResult demand_only_restrictiveness(const DsDesign& d,
                                                  const KernelSpec& kernel,
                                                  int M, std::uint64_t seed,
                                                  const OptimSettings& opt);

// Counterfactual (held-fixed price) form: the affine demand fit under
// the joint (P, x₁) design measure.
RestrictivenessResult ds_sf_restrictiveness(const DsDesign& d,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt);

// ---------------------------------------------------------------------
// Two-firm entry game with strategic substitutes: firm i enters when
// π_i(y_{-i}) = α_i + β_i y_{-i} + γ_i x_i is at least its shock, with
// independent shocks and β ≤ 0.  The (0,1)/(1,0) region overlaps, so
// predictions carry a per-x equilibrium-selection weight q.
// ---------------------------------------------------------------------

enum class EntryError { independent_logistic, independent_normal };

struct EntryParams {
  double alpha1 = 0.0, alpha2 = 0.0;
  double beta1 = 0.0, beta2 = 0.0;  // must be ≤ 0
  double gamma1 = 0.0, gamma2 = 0.0;
  EntryError error = EntryError::independent_logistic;
};

struct EntryRegions {
  double p00 = 0.0;
  double p11 = 0.0;
  double p10_unique = 0.0;
  double p01_unique = 0.0;
  double p_mult = 0.0;  // both (0,1) and (1,0) are equilibria
};

struct CcpVector {
  double p00 = 0.0, p01 = 0.0, p10 = 0.0, p11 = 0.0;
};

// Shock-space partition probabilities at covariates x = (x₁, x₂);
// the five entries sum to one.  Throws on β > 0.
EntryRegions entry_regions(const EntryParams& p, const Eigen::Vector2d& x);

// Choice probabilities once the multiplicity mass is split q : (1−q)
// between (1,0) and (0,1).
CcpVector entry_ccp(const EntryParams& p, const Eigen::Vector2d& x, double q);

// Uniform 5×5 grid over [−1, 1]²; rules are stacked point-major as
// (p00, p01, p10, p11) per grid point.
struct EntryDesign {
  Eigen::MatrixXd x;        // n_x × 2
  Eigen::VectorXd weight;   // n_x, sums to 1

  int n_x() const { return static_cast<int>(x.rows()); }
};

EntryDesign make_entry_design();
DiscrepancySpec entry_spec(const EntryDesign& d);

// Stacked CCPs at parameters θ = (α₁, α₂, β₁, β₂, γ₁, γ₂) and a common
// selection weight q at every x.
Eigen::VectorXd entry_ccp_stack(const EntryDesign& d, const EntryParams& p,
                                double q);

struct EntryFit {
  double value = 0.0;
  Eigen::VectorXd theta;  // (α₁, α₂, β₁, β₂, γ₁, γ₂)
  Eigen::VectorXd q;      // optimal selection weight per x
  long n_evals = 0;
};

BoxDomain entry_default_box();

// Best approximation of a stacked CCP rule g: the selection weight is
// profiled out in closed form at every x (the quadratic in q has the
// unconstrained optimum (p01u − p10u + p_mult + g10 − g01)/(2·p_mult),
// clipped to [0, 1]; q = 1/2 when p_mult = 0), and θ is minimized
// numerically.
EntryFit entry_discrepancy(const EntryDesign& d, const BoxDomain& box,
                           EntryError err, const Eigen::VectorXd& g,
                           const OptimSettings& opt,
                           const std::vector<Eigen::VectorXd>& warm_starts =
                               {});

// Engine wrappers: the model class fits via the selection-optimal
// discrepancy above; predict reports the q = 1/2 completion.
ModelClass entry_model(const EntryDesign& d, const BoxDomain& box,
                       EntryError err, const OptimSettings& opt);
ModelClass uniform_ccp_baseline(const EntryDesign& d);

// Dependent simplex-valued rules: three GP draws mapped through
// sequential logistic stick-breaking to (p00, p01, p10, p11).
class EntryCcpSampler {
 public:
  EntryCcpSampler(const EntryDesign& d, const KernelSpec& kernel);

  Eigen::VectorXd draw(std::uint64_t seed) const;

 private:
  const EntryDesign* d_;
  GpSampler gp_;
};

KernelSpec entry_kernel_defaults();

std::vector<Eigen::VectorXd> entry_eligible_draws(const EntryCcpSampler& s,
                                                  int M, std::uint64_t seed);

// Restrictiveness of the entry model against the stick-breaking rules,
// with the constant uniform CCP as baseline; fixed-draw inference.
RestrictivenessResult entry_restrictiveness(const EntryDesign& d,
                                            const BoxDomain& box,
                                            EntryError err,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt);

}  // namespace restr
