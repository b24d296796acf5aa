#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "restr/engine.hpp"
#include "restr/kernels.hpp"
#include "restr/shape.hpp"

namespace restr {

// binary lottery (z̄, z_, p): win z̄ with probability p, else z_
struct Lottery {
  double z_hi = 0.0;
  double z_lo = 0.0;
  double p = 0.0;
};

struct CptParams {
  double alpha = 1.0;
  double gamma = 1.0;
  double delta = 1.0;
};

struct DaParams {
  double alpha = 1.0;
  double eta = 0.0;
};

// v(z)=z^α, w(p)=δp^γ/(δp^γ+(1−p)^γ), CE = v⁻¹(w v(z̄) + (1−w) v(z_))
double cpt_ce(const Lottery& lot, const CptParams& params);

// w(p) = p / (1 + (1−p)η)
double da_ce(const Lottery& lot, const DaParams& params);

enum class RiskClass { CPT, DA };

// free parameters of a submodel; everything else pinned at the
// benchmark (α=1, γ=1, δ=1, η=0), which is expected value
struct SubmodelMask {
  bool alpha = false;
  bool gamma = false;
  bool delta = false;
  bool eta = false;

  std::string label(RiskClass cls) const;
  int n_free(RiskClass cls) const;
};

// feasible lottery grid: res³ nodes on [0,1]³ with z̄ ≥ z_ kept,
// columns (z̄, z_, p), lexicographic order
Eigen::MatrixXd lottery_grid(int res);

// A sampled pseudo-true certainty-equivalent rule.  The monotone latent
// is stored on the full rectangular cube (infeasible corners filled by
// clamping z̄ up to z_, which preserves the componentwise order), so
// off-grid queries interpolate the latent and re-transform at the
// query's own bounds.
struct LotteryRule {
  RectGrid latent;
  double mix_weight = 0.5;

  double eval(const Lottery& lot) const;
  Eigen::VectorXd on_points(const Eigen::MatrixXd& pts) const;
};

std::vector<LotteryRule> lottery_eligible_sampler(const KernelSpec& kernel,
                                                  int grid_res, int M,
                                                  std::uint64_t seed);

// spline-prior robustness variant: same monotone pipeline, latent drawn
// from the additive penalized-spline prior
std::vector<LotteryRule> lottery_eligible_sampler_spline(
    const SplineSettings& settings, int grid_res, int M, std::uint64_t seed);

// model + benchmark-singleton baseline over a fixed evaluation grid
struct RiskModelPair {
  ModelClass model;
  ModelClass baseline;
  RiskClass cls;
  SubmodelMask mask;
};

RiskModelPair build_risk_model(RiskClass cls, const SubmodelMask& mask,
                               const Eigen::MatrixXd& eval_points);

Eigen::VectorXd embed_benchmark(RiskClass cls, const SubmodelMask& mask);

// embed argmin of a sub-mask into the free coordinates of a super-mask
Eigen::VectorXd embed_submodel(RiskClass cls, const SubmodelMask& sub,
                               const Eigen::VectorXd& sub_argmin,
                               const SubmodelMask& super);

struct RiskRow {
  std::string spec_name;
  int n_free = 0;
  RestrictivenessResult result;
};

// Fits the 7 CPT and 2 DA submodels over a shared draw set with nested
// warm starts (every mask also starts at the benchmark), l2_root
// discrepancy, uniform weights on the feasible grid.
std::vector<RiskRow> risk_table(const std::vector<LotteryRule>& draws,
                                int grid_res, const OptimSettings& opt,
                                int workers);

std::vector<std::pair<RiskClass, SubmodelMask>> standard_risk_masks();

}  // namespace restr
