#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "restr/engine.hpp"
#include "restr/kernels.hpp"
#include "restr/markets.hpp"
#include "restr/rng.hpp"

namespace restr {

enum class ChoiceFamily { mnl, nl, mxl };
enum class EligibleKind { np_both, np_mean, np_individual };

std::string family_name(ChoiceFamily f);
std::string eligible_name(EligibleKind k);

// Softmax against an outside option with utility 0:
// p_j = exp(u_j) / (1 + Σ_k exp(u_k)), max-subtracted for overflow
// safety.  Throws std::invalid_argument on non-finite utilities.
Eigen::VectorXd softmax_with_outside(const Eigen::VectorXd& util);

struct NestMap {
  std::vector<int> nest_of;  // per product
  int n_nests = 0;
};

// Default nesting: the binary category flag (the only categorical
// characteristic).
NestMap nests_by_category(const Market& m);

// Plain logit shares from utilities x'β (characteristics price,
// category, constant).
Eigen::VectorXd mnl_shares(const Market& m, const Eigen::VectorXd& beta);

// Two-level nested logit: within-nest conditional probability times the
// nest probability, inclusive values in log space.  ρ = 0 returns the
// plain logit shares exactly (identical code path).
Eigen::VectorXd nl_shares(const Market& m, const Eigen::VectorXd& beta,
                          double rho, const NestMap& nests);

// Mixed logit: Monte-Carlo average over R draws ν ~ N(0, I) of logit
// shares at coefficients β + σ∘ν.  The draws depend on seed only, so
// repeated evaluations share common random numbers.  σ = 0 returns the
// plain logit shares exactly for any R.
Eigen::VectorXd mxl_shares(const Market& m, const Eigen::VectorXd& beta,
                           const Eigen::VectorXd& sigma, int R,
                           std::uint64_t seed);

// Markets with precomputed stacked characteristics.  All stacked
// vectors lay markets out in order (row offsets in `offset`).
struct ChoiceDesign {
  std::vector<Market> markets;
  Eigen::MatrixXd X;           // N×3 stacked characteristics
  std::vector<int> offset;     // size n_markets()+1
  std::vector<NestMap> nests;  // per market, by category

  int N() const { return static_cast<int>(X.rows()); }
  int n_markets() const { return static_cast<int>(markets.size()); }
};

ChoiceDesign make_choice_design(std::vector<Market> markets);

// Squared-L2 rows over stacked inside products with markets as the
// observations: d(p, s) = mean over markets of Σ_j (p_jm − s_jm)².
DiscrepancySpec choice_spec(const ChoiceDesign& d);
double choice_discrepancy(const ChoiceDesign& d, const Eigen::VectorXd& p,
                          const Eigen::VectorXd& s);

// Parametric share classes as optimizable model classes over the
// stacked rows.  θ layouts: mnl β (3); nl (β, ρ) with ρ ∈ [0, 0.99];
// mxl (β, σ) with σ ∈ [0, 40]³.  Boundary points reproduce the plain
// logit class exactly, so warm starts at a fitted β make nestedness
// hold to machine precision.
ModelClass choice_model(const ChoiceDesign& d, ChoiceFamily family,
                        int R = 500, std::uint64_t nu_seed = 2024);

// Singleton baseline: the uniform share vector 1/(J_m + 1).
ModelClass uniform_choice_baseline(const ChoiceDesign& d);

// Closed-form warm start: OLS of log(s_j / s0) on the characteristics.
// Exact inverse when s is a plain-logit share system.
Eigen::VectorXd logit_inversion_beta(const ChoiceDesign& d,
                                     const Eigen::VectorXd& shares);

// β ~ N(0, diag(20²,20²,20²)) truncated to a negative price
// coefficient by rejection; throws after 10⁶ tries (cannot trigger at
// these settings).  tries, when non-null, receives the attempt count.
Eigen::VectorXd sample_np_beta(Rng& rng, long* tries = nullptr);

// Forcing hooks used by unit tests to pin individual pieces of the
// mixture constructions (zero heterogeneity, fixed β, fixed common
// component).  Null members leave the sampled quantities untouched.
struct NpTestHooks {
  const Eigen::VectorXd* f_stacked = nullptr;   // common component
  const Eigen::VectorXd* sigma = nullptr;       // np_mean coefficient sd
  const Eigen::VectorXd* beta = nullptr;        // np_individual coefficients
  double individual_scale = 1.0;                // multiplies GP draws f_i
};

// Nonparametric pseudo-true share rules: a common component f drawn
// from a price-monotone GP construction (one joint draw over all
// product points; derivative-based accumulation within category, then
// centered per market) mixed over Ns simulated consumers.
//   np_both:       u_ij = f(x_j) + f_i(x_j), f_i a zero-mean GP draw
//   np_mean:       u_ij = f(x_j) + x_j'(σ∘ν_i), σ_k ~ inv-gamma(2,1)
//   np_individual: u_ij = x_j'β + f_i(x_j), β truncated as above
// Shares are Monte-Carlo softmax averages with an outside option.
// Construction cost (one N×N and per-market J×J Cholesky factors) is
// paid once; each rule draw reuses the factors.
class EligibleChoiceSampler {
 public:
  EligibleChoiceSampler(const ChoiceDesign& d, const KernelSpec& kernel,
                        int Ns = 2000);

  Eigen::VectorXd draw(EligibleKind kind, std::uint64_t seed,
                       const NpTestHooks* hooks = nullptr) const;
  Eigen::VectorXd np_both(std::uint64_t seed,
                          const NpTestHooks* hooks = nullptr) const;
  Eigen::VectorXd np_mean(std::uint64_t seed,
                          const NpTestHooks* hooks = nullptr) const;
  Eigen::VectorXd np_individual(std::uint64_t seed,
                                const NpTestHooks* hooks = nullptr) const;

  // The stacked price-monotone common component for a given seed (as
  // used by np_both/np_mean); exposed for constraint validation.
  Eigen::VectorXd common_component(std::uint64_t seed) const;

  const ChoiceDesign& design() const { return *d_; }

 private:
  Eigen::VectorXd mixture(const Eigen::VectorXd& base_util,
                          double individual_scale, Rng root) const;

  const ChoiceDesign* d_;
  KernelSpec kernel_;
  int Ns_;
  Eigen::MatrixXd joint_chol_;               // N×N, common component
  std::vector<Eigen::MatrixXd> market_chol_; // per market, consumers
};

// M pseudo-rule draws with per-draw child seeds.
std::vector<Eigen::VectorXd> eligible_draws(const EligibleChoiceSampler& s,
                                            EligibleKind kind, int M,
                                            std::uint64_t seed);

struct ChoiceTableRow {
  EligibleKind kind;
  ChoiceFamily family;
  RestrictivenessResult result;
};

// Restrictiveness of the three parametric classes against each
// requested eligible set, in the estimated-discrepancy regime with
// markets as observations.  Fits chain warm starts: the logit-inversion
// β per draw seeds the plain logit fit, whose argmins seed the nested
// and mixed fits at their boundary embeddings.  Mixed-logit fits use
// R_opt simulation draws; reported values are re-evaluated at the
// argmin with R_report draws (never above the plain-logit fit, since
// σ = 0 is always a candidate).
std::vector<ChoiceTableRow> choice_table(
    const EligibleChoiceSampler& sampler,
    const std::vector<EligibleKind>& kinds, int M, const OptimSettings& opt,
    std::uint64_t seed, int workers = 1, int R_opt = 500,
    int R_report = 2000);

// Default product kernel for the eligible samplers.
KernelSpec choice_kernel_defaults();

}  // namespace restr
