#include "restr/structural.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "restr/rng.hpp"

namespace restr {

namespace {

constexpr double kSingularTol = 1e-12;

Eigen::MatrixXd square_grid5() {
  Eigen::MatrixXd x(25, 2);
  int r = 0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j, ++r) {
      x(r, 0) = -1.0 + 0.5 * i;
      x(r, 1) = -1.0 + 0.5 * j;
    }
  }
  return x;
}

// Weighted least squares of y on the columns of A.
Eigen::VectorXd weighted_ls(const Eigen::MatrixXd& A,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;
  return Aw.colPivHouseholderQr().solve(yw);
}

Eigen::VectorXd vec6(double a, double b, double c, double d, double e,
                     double f) {
  Eigen::VectorXd v(6);
  v << a, b, c, d, e, f;
  return v;
}

SimEqParams params_from_theta(const Eigen::VectorXd& theta) {
  SimEqParams p;
  p.alpha << theta(0), theta(1);
  p.beta1 = theta(2);
  p.beta2 = theta(3);
  p.gamma1 = theta(4);
  p.gamma2 = theta(5);
  return p;
}

// Solve the system with the determinant floored away from zero so the
// optimizer sees a finite (huge) objective instead of an exception.
Eigen::Vector2d solve_floored(const SimEqParams& p, double x1, double x2) {
  double det = 1.0 - p.beta1 * p.beta2;
  if (std::abs(det) < kSingularTol) det = (det < 0.0 ? -1.0 : 1.0) * kSingularTol;
  const double r1 = p.alpha(0) + p.gamma1 * x1;
  const double r2 = p.alpha(1) + p.gamma2 * x2;
  return {(r1 + p.beta1 * r2) / det, (p.beta2 * r1 + r2) / det};
}

BoxDomain linear_box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  BoxDomain box = BoxDomain::bounded(lo, hi);
  box.hints.assign(box.dim(), Transform::linear);
  return box;
}

double logistic_cdf(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double error_cdf(EntryError err, double z) {
  return err == EntryError::independent_logistic ? logistic_cdf(z)
                                                 : normal_cdf(z);
}

double clip01(double q) { return q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q); }

// Selection weight minimizing the two overlap terms of the squared
// error at one grid point; the objective is quadratic in q.
double optimal_selection(const EntryRegions& r, double g01, double g10) {
  if (r.p_mult <= 0.0) return 0.5;
  const double q =
      (r.p01_unique - r.p10_unique + r.p_mult + g10 - g01) / (2.0 * r.p_mult);
  return clip01(q);
}

}  // namespace

// ---------------------------------------------------------------------
// Simultaneous system
// ---------------------------------------------------------------------

Eigen::Vector2d ds_reduced_form(const SimEqParams& p,
                                const Eigen::Vector2d& x) {
  const double det = 1.0 - p.beta1 * p.beta2;
  if (std::abs(det) < kSingularTol) {
    throw std::domain_error(
        "simultaneous system is singular: beta1*beta2 == 1");
  }
  const double r1 = p.alpha(0) + p.gamma1 * x(0);
  const double r2 = p.alpha(1) + p.gamma2 * x(1);
  Eigen::Vector2d y;
  y(0) = (r1 + p.beta1 * r2) / det;
  y(1) = (p.beta2 * r1 + r2) / det;
  return y;
}

Eigen::VectorXd DsDesign::pbar() const {
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n_x());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n_x());
  for (int a = 0; a < n_atoms(); ++a) {
    num(atom_x[a]) += joint_weight(a) * p(a);
    den(atom_x[a]) += joint_weight(a);
  }
  return num.array() / den.array();
}

Eigen::VectorXd DsDesign::conditional_mean(
    const Eigen::VectorXd& f_atoms) const {
  if (f_atoms.size() != n_atoms()) {
    throw std::invalid_argument("conditional_mean: rule has wrong length");
  }
  Eigen::VectorXd num = Eigen::VectorXd::Zero(n_x());
  Eigen::VectorXd den = Eigen::VectorXd::Zero(n_x());
  for (int a = 0; a < n_atoms(); ++a) {
    num(atom_x[a]) += joint_weight(a) * f_atoms(a);
    den(atom_x[a]) += joint_weight(a);
  }
  return num.array() / den.array();
}

DsDesign make_ds_design() {
  DsDesign d;
  d.x = square_grid5();
  d.x_weight = Eigen::VectorXd::Constant(25, 1.0 / 25.0);
  const double shock[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  const double shock_w[5] = {1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0,
                             1.0 / 16.0};
  const int n_atoms = 25 * 5;
  d.p.resize(n_atoms);
  d.joint_weight.resize(n_atoms);
  d.atom_x.resize(n_atoms);
  int a = 0;
  for (int j = 0; j < 25; ++j) {
    const double pi = 1.0 + 0.8 * d.x(j, 0) + 0.6 * d.x(j, 1);
    for (int k = 0; k < 5; ++k, ++a) {
      d.p(a) = pi + shock[k];
      d.joint_weight(a) = d.x_weight(j) * shock_w[k];
      d.atom_x[a] = j;
    }
  }
  return d;
}

KernelSpec ds_kernel_defaults() {
  KernelSpec k;
  k.family = KernelFamily::matern32;
  k.variance = 1.0;
  k.lengthscale = 0.75;
  return k;
}

std::vector<Eigen::VectorXd> ds_rf_eligible_draws(const DsDesign& d,
                                                  const KernelSpec& kernel,
                                                  int M, std::uint64_t seed) {
  GpSampler gp(kernel, d.x);
  Rng root(seed);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(M);
  for (int m = 0; m < M; ++m) {
    Rng stream = root.child(static_cast<std::uint64_t>(m));
    Eigen::VectorXd g(2 * d.n_x());
    g.head(d.n_x()) = gp.draw(stream);
    g.tail(d.n_x()) = gp.draw(stream);
    draws.push_back(std::move(g));
  }
  return draws;
}

std::vector<Eigen::VectorXd> ds_joint_eligible_draws(const DsDesign& d,
                                                     const KernelSpec& kernel,
                                                     int M,
                                                     std::uint64_t seed) {
  Eigen::MatrixXd pts(d.n_atoms(), 2);
  for (int a = 0; a < d.n_atoms(); ++a) {
    pts(a, 0) = d.p(a);
    pts(a, 1) = d.x(d.atom_x[a], 0);
  }
  GpSampler gp(kernel, pts);
  Rng root(seed);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(M);
  for (int m = 0; m < M; ++m) {
    Rng stream = root.child(static_cast<std::uint64_t>(m));
    draws.push_back(gp.draw(stream));
  }
  return draws;
}

BoxDomain ds_rf_default_box() {
  return linear_box(vec6(-20, -20, -8, -8, -20, -20),
                    vec6(20, 20, 8, 8, 20, 20));
}

ModelClass ds_rf_model(const DsDesign& d, const BoxDomain& box) {
  ModelClass m;
  m.name = "solved-system";
  m.domain = box;
  const Eigen::MatrixXd x = d.x;
  const int n = d.n_x();
  m.predict = [x, n](const Eigen::VectorXd& theta) {
    const SimEqParams p = params_from_theta(theta);
    Eigen::VectorXd out(2 * n);
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d y = solve_floored(p, x(j, 0), x(j, 1));
      out(j) = y(0);
      out(n + j) = y(1);
    }
    return out;
  };
  return m;
}

Eigen::VectorXd ds_rf_warm_start(const DsDesign& d, const BoxDomain& box,
                                 const Eigen::VectorXd& stacked_draw) {
  const int n = d.n_x();
  if (stacked_draw.size() != 2 * n) {
    throw std::invalid_argument("ds_rf_warm_start: draw has wrong length");
  }
  Eigen::MatrixXd A(n, 3);
  A.col(0).setOnes();
  A.col(1) = d.x.col(0);
  A.col(2) = d.x.col(1);
  const Eigen::VectorXd b1 = weighted_ls(A, stacked_draw.head(n), d.x_weight);
  const Eigen::VectorXd b2 = weighted_ls(A, stacked_draw.tail(n), d.x_weight);
  const double c1 = b1(0), d11 = b1(1), d12 = b1(2);
  const double c2 = b2(0), d21 = b2(1), d22 = b2(2);
  const double beta1 = std::abs(d22) > 1e-10 ? d12 / d22 : 0.0;
  const double beta2 = std::abs(d11) > 1e-10 ? d21 / d11 : 0.0;
  const double k = 1.0 - beta1 * beta2;
  Eigen::VectorXd theta = vec6(c1 - beta1 * c2, c2 - beta2 * c1, beta1, beta2,
                               k * d11, k * d22);
  return box.clamp(theta);
}

BoxDomain demand_only_default_box() {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(3, -20.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(3, 20.0);
  return linear_box(lo, hi);
}

ModelClass demand_only_model(const DsDesign& d, const BoxDomain& box) {
  ModelClass m;
  m.name = "demand-through-shifters";
  m.domain = box;
  const Eigen::VectorXd pbar = d.pbar();
  const Eigen::VectorXd x1 = d.x.col(0);
  m.predict = [pbar, x1](const Eigen::VectorXd& theta) {
    return (theta(0) + theta(1) * pbar.array() + theta(2) * x1.array())
        .matrix()
        .eval();
  };
  return m;
}

ModelClass ds_sf_model(const DsDesign& d, const BoxDomain& box) {
  ModelClass m;
  m.name = "held-fixed-price-demand";
  m.domain = box;
  const Eigen::VectorXd p = d.p;
  Eigen::VectorXd x1(d.n_atoms());
  for (int a = 0; a < d.n_atoms(); ++a) x1(a) = d.x(d.atom_x[a], 0);
  m.predict = [p, x1](const Eigen::VectorXd& theta) {
    return (theta(0) + theta(1) * p.array() + theta(2) * x1.array())
        .matrix()
        .eval();
  };
  return m;
}

ModelClass constant_rule_baseline(int rows, int blocks) {
  if (blocks <= 0 || rows % blocks != 0) {
    throw std::invalid_argument(
        "constant_rule_baseline: rows must split into equal blocks");
  }
  const int block_len = rows / blocks;
  ModelClass m;
  m.name = "constant-rule";
  m.domain = BoxDomain::unbounded(blocks);
  m.predict = [rows, blocks, block_len](const Eigen::VectorXd& theta) {
    Eigen::VectorXd out(rows);
    for (int b = 0; b < blocks; ++b) {
      out.segment(b * block_len, block_len).setConstant(theta(b));
    }
    return out;
  };
  m.exact_fit = [rows, blocks, block_len](const Eigen::VectorXd& target,
                                          const DiscrepancySpec& spec)
      -> std::optional<FitResult> {
    if (target.size() != rows || spec.rows() != rows) return std::nullopt;
    FitResult fit;
    fit.argmin.resize(blocks);
    Eigen::VectorXd pred(rows);
    for (int b = 0; b < blocks; ++b) {
      const auto w = spec.weights.segment(b * block_len, block_len);
      const auto t = target.segment(b * block_len, block_len);
      const double wsum = w.sum();
      fit.argmin(b) = wsum > 0.0 ? w.dot(t) / wsum : 0.0;
      pred.segment(b * block_len, block_len).setConstant(fit.argmin(b));
    }
    fit.value = discrepancy(spec, pred, target);
    fit.n_evals = 1;
    return fit;
  };
  return m;
}

DiscrepancySpec ds_rf_spec(const DsDesign& d) {
  Eigen::VectorXd w(2 * d.n_x());
  w.head(d.n_x()) = d.x_weight;
  w.tail(d.n_x()) = d.x_weight;
  return grid_spec(Loss::squared_l2, w);
}

DiscrepancySpec demand_only_spec(const DsDesign& d) {
  return grid_spec(Loss::squared_l2, d.x_weight);
}

DiscrepancySpec ds_sf_spec(const DsDesign& d) {
  return grid_spec(Loss::squared_l2, d.joint_weight);
}

RestrictivenessResult ds_rf_restrictiveness(const DsDesign& d,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt) {
  const BoxDomain box = ds_rf_default_box();
  const std::vector<Eigen::VectorXd> draws =
      ds_rf_eligible_draws(d, kernel, M, seed);
  std::vector<std::vector<Eigen::VectorXd>> warms(draws.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    warms[m].push_back(ds_rf_warm_start(d, box, draws[m]));
  }
  return restrictiveness_known(ds_rf_model(d, box),
                               constant_rule_baseline(2 * d.n_x(), 2), draws,
                               ds_rf_spec(d), opt, 1, &warms);
}

RestrictivenessResult demand_only_restrictiveness(const DsDesign& d,
                                                  const KernelSpec& kernel,
                                                  int M, std::uint64_t seed,
                                                  const OptimSettings& opt) {
  const BoxDomain box = demand_only_default_box();
  const std::vector<Eigen::VectorXd> joint =
      ds_joint_eligible_draws(d, kernel, M, seed);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(joint.size());
  for (const Eigen::VectorXd& f : joint) draws.push_back(d.conditional_mean(f));

  Eigen::MatrixXd A(d.n_x(), 3);
  A.col(0).setOnes();
  A.col(1) = d.pbar();
  A.col(2) = d.x.col(0);
  std::vector<std::vector<Eigen::VectorXd>> warms(draws.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    warms[m].push_back(box.clamp(weighted_ls(A, draws[m], d.x_weight)));
  }
  return restrictiveness_known(demand_only_model(d, box),
                               constant_rule_baseline(d.n_x(), 1), draws,
                               demand_only_spec(d), opt, 1, &warms);
}

RestrictivenessResult ds_sf_restrictiveness(const DsDesign& d,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt) {
  const BoxDomain box = demand_only_default_box();
  const std::vector<Eigen::VectorXd> draws =
      ds_joint_eligible_draws(d, kernel, M, seed);

  Eigen::MatrixXd A(d.n_atoms(), 3);
  A.col(0).setOnes();
  A.col(1) = d.p;
  for (int a = 0; a < d.n_atoms(); ++a) A(a, 2) = d.x(d.atom_x[a], 0);
  std::vector<std::vector<Eigen::VectorXd>> warms(draws.size());
  for (std::size_t m = 0; m < draws.size(); ++m) {
    warms[m].push_back(box.clamp(weighted_ls(A, draws[m], d.joint_weight)));
  }
  return restrictiveness_known(ds_sf_model(d, box),
                               constant_rule_baseline(d.n_atoms(), 1), draws,
                               ds_sf_spec(d), opt, 1, &warms);
}

// ---------------------------------------------------------------------
// Entry game
// ---------------------------------------------------------------------

EntryRegions entry_regions(const EntryParams& p, const Eigen::Vector2d& x) {
  if (p.beta1 > 0.0 || p.beta2 > 0.0) {
    throw std::domain_error(
        "entry interactions must be non-positive (strategic substitutes)");
  }
  const double pi1_out = p.alpha1 + p.gamma1 * x(0);
  const double pi2_out = p.alpha2 + p.gamma2 * x(1);
  const double a0 = error_cdf(p.error, pi1_out);
  const double a1 = error_cdf(p.error, pi1_out + p.beta1);
  const double b0 = error_cdf(p.error, pi2_out);
  const double b1 = error_cdf(p.error, pi2_out + p.beta2);
  EntryRegions r;
  r.p00 = (1.0 - a0) * (1.0 - b0);
  r.p11 = a1 * b1;
  r.p_mult = (a0 - a1) * (b0 - b1);
  r.p10_unique = a1 * (1.0 - b1) + (a0 - a1) * (1.0 - b0);
  r.p01_unique = (1.0 - a1) * b1 + (1.0 - a0) * (b0 - b1);
  return r;
}

CcpVector entry_ccp(const EntryParams& p, const Eigen::Vector2d& x, double q) {
  const EntryRegions r = entry_regions(p, x);
  CcpVector c;
  c.p00 = r.p00;
  c.p11 = r.p11;
  c.p10 = r.p10_unique + q * r.p_mult;
  c.p01 = r.p01_unique + (1.0 - q) * r.p_mult;
  return c;
}

EntryDesign make_entry_design() {
  EntryDesign d;
  d.x = square_grid5();
  d.weight = Eigen::VectorXd::Constant(25, 1.0 / 25.0);
  return d;
}

DiscrepancySpec entry_spec(const EntryDesign& d) {
  Eigen::VectorXd w(4 * d.n_x());
  for (int j = 0; j < d.n_x(); ++j) w.segment(4 * j, 4).setConstant(d.weight(j));
  return grid_spec(Loss::squared_l2, w);
}

Eigen::VectorXd entry_ccp_stack(const EntryDesign& d, const EntryParams& p,
                                double q) {
  Eigen::VectorXd out(4 * d.n_x());
  for (int j = 0; j < d.n_x(); ++j) {
    const CcpVector c = entry_ccp(p, d.x.row(j).transpose(), q);
    out(4 * j + 0) = c.p00;
    out(4 * j + 1) = c.p01;
    out(4 * j + 2) = c.p10;
    out(4 * j + 3) = c.p11;
  }
  return out;
}

BoxDomain entry_default_box() {
  return linear_box(vec6(-4, -4, -4, -4, -4, -4), vec6(4, 4, 0, 0, 4, 4));
}

EntryFit entry_discrepancy(const EntryDesign& d, const BoxDomain& box,
                           EntryError err, const Eigen::VectorXd& g,
                           const OptimSettings& opt,
                           const std::vector<Eigen::VectorXd>& warm_starts) {
  if (g.size() != 4 * d.n_x()) {
    throw std::invalid_argument("entry_discrepancy: rule has wrong length");
  }
  const Eigen::MatrixXd x = d.x;
  const Eigen::VectorXd w = d.weight;
  auto objective = [&x, &w, err, &g](const Eigen::VectorXd& theta) {
    EntryParams p;
    p.alpha1 = theta(0);
    p.alpha2 = theta(1);
    p.beta1 = theta(2);
    p.beta2 = theta(3);
    p.gamma1 = theta(4);
    p.gamma2 = theta(5);
    p.error = err;
    double total = 0.0;
    for (int j = 0; j < x.rows(); ++j) {
      const EntryRegions r = entry_regions(p, x.row(j).transpose());
      const double g00 = g(4 * j + 0), g01 = g(4 * j + 1);
      const double g10 = g(4 * j + 2), g11 = g(4 * j + 3);
      const double q = optimal_selection(r, g01, g10);
      const double p10 = r.p10_unique + q * r.p_mult;
      const double p01 = r.p01_unique + (1.0 - q) * r.p_mult;
      const double e00 = r.p00 - g00, e01 = p01 - g01;
      const double e10 = p10 - g10, e11 = r.p11 - g11;
      total += w(j) * (e00 * e00 + e01 * e01 + e10 * e10 + e11 * e11);
    }
    return total;
  };
  const OptimResult res = minimize(objective, box, opt, warm_starts);

  EntryFit fit;
  fit.value = res.value;
  fit.theta = res.argmin;
  fit.n_evals = res.n_evals;
  fit.q.resize(d.n_x());
  EntryParams p;
  p.alpha1 = res.argmin(0);
  p.alpha2 = res.argmin(1);
  p.beta1 = res.argmin(2);
  p.beta2 = res.argmin(3);
  p.gamma1 = res.argmin(4);
  p.gamma2 = res.argmin(5);
  p.error = err;
  for (int j = 0; j < d.n_x(); ++j) {
    const EntryRegions r = entry_regions(p, x.row(j).transpose());
    fit.q(j) = optimal_selection(r, g(4 * j + 1), g(4 * j + 2));
  }
  return fit;
}

ModelClass entry_model(const EntryDesign& d, const BoxDomain& box,
                       EntryError err, const OptimSettings& opt) {
  ModelClass m;
  m.name = "entry-substitutes";
  m.domain = box;
  m.predict = [d, err](const Eigen::VectorXd& theta) {
    EntryParams p;
    p.alpha1 = theta(0);
    p.alpha2 = theta(1);
    p.beta1 = std::min(theta(2), 0.0);
    p.beta2 = std::min(theta(3), 0.0);
    p.gamma1 = theta(4);
    p.gamma2 = theta(5);
    p.error = err;
    return entry_ccp_stack(d, p, 0.5);
  };
  m.exact_fit = [d, box, err, opt](const Eigen::VectorXd& target,
                                   const DiscrepancySpec& spec)
      -> std::optional<FitResult> {
    if (spec.loss != Loss::squared_l2 || target.size() != 4 * d.n_x()) {
      return std::nullopt;
    }
    const EntryFit ef = entry_discrepancy(d, box, err, target, opt);
    FitResult fit;
    fit.value = ef.value;
    fit.argmin = ef.theta;
    fit.n_evals = ef.n_evals;
    return fit;
  };
  return m;
}

ModelClass uniform_ccp_baseline(const EntryDesign& d) {
  ModelClass m;
  m.name = "uniform-ccp";
  m.domain = BoxDomain::empty();
  const int rows = 4 * d.n_x();
  m.predict = [rows](const Eigen::VectorXd&) {
    return Eigen::VectorXd::Constant(rows, 0.25).eval();
  };
  m.exact_fit = [rows](const Eigen::VectorXd& target,
                       const DiscrepancySpec& spec)
      -> std::optional<FitResult> {
    if (target.size() != rows) return std::nullopt;
    FitResult fit;
    fit.value =
        discrepancy(spec, Eigen::VectorXd::Constant(rows, 0.25), target);
    fit.argmin = Eigen::VectorXd();
    fit.n_evals = 1;
    return fit;
  };
  return m;
}

KernelSpec entry_kernel_defaults() {
  KernelSpec k;
  k.family = KernelFamily::matern32;
  k.variance = 2.25;
  k.lengthscale = 0.75;
  return k;
}

EntryCcpSampler::EntryCcpSampler(const EntryDesign& d, const KernelSpec& kernel)
    : d_(&d), gp_(kernel, d.x) {}

Eigen::VectorXd EntryCcpSampler::draw(std::uint64_t seed) const {
  Rng rng(seed);
  const Eigen::VectorXd g1 = gp_.draw(rng);
  const Eigen::VectorXd g2 = gp_.draw(rng);
  const Eigen::VectorXd g3 = gp_.draw(rng);
  const int n = d_->n_x();
  Eigen::VectorXd out(4 * n);
  for (int j = 0; j < n; ++j) {
    const double s1 = logistic_cdf(g1(j));
    const double s2 = logistic_cdf(g2(j));
    const double s3 = logistic_cdf(g3(j));
    out(4 * j + 0) = s1;
    out(4 * j + 1) = (1.0 - s1) * s2;
    out(4 * j + 2) = (1.0 - s1) * (1.0 - s2) * s3;
    out(4 * j + 3) = (1.0 - s1) * (1.0 - s2) * (1.0 - s3);
  }
  return out;
}

std::vector<Eigen::VectorXd> entry_eligible_draws(const EntryCcpSampler& s,
                                                  int M, std::uint64_t seed) {
  Rng root(seed);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(M);
  for (int m = 0; m < M; ++m) {
    Rng stream = root.child(static_cast<std::uint64_t>(m));
    draws.push_back(s.draw(stream.next_u64()));
  }
  return draws;
}

RestrictivenessResult entry_restrictiveness(const EntryDesign& d,
                                            const BoxDomain& box,
                                            EntryError err,
                                            const KernelSpec& kernel, int M,
                                            std::uint64_t seed,
                                            const OptimSettings& opt) {
  const EntryCcpSampler sampler(d, kernel);
  const std::vector<Eigen::VectorXd> draws =
      entry_eligible_draws(sampler, M, seed);
  return restrictiveness_known(entry_model(d, box, err, opt),
                               uniform_ccp_baseline(d), draws, entry_spec(d),
                               opt);
}

}  // namespace restr
