#include "restr/engine.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "restr/parallel.hpp"
#include "restr/rng.hpp"

namespace restr {

DiscrepancySpec grid_spec(Loss loss, const Eigen::VectorXd& weights) {
  DiscrepancySpec s;
  s.loss = loss;
  s.weights = weights;
  s.n_obs = static_cast<int>(weights.size());
  s.row_obs.resize(weights.size());
  for (int i = 0; i < s.n_obs; ++i) s.row_obs[i] = i;
  return s;
}

DiscrepancySpec empirical_spec(Loss loss, const std::vector<int>& row_obs,
                               int n_obs, const Eigen::VectorXd& within_weights) {
  DiscrepancySpec s;
  s.loss = loss;
  s.row_obs = row_obs;
  s.n_obs = n_obs;
  int R = static_cast<int>(row_obs.size());
  s.weights.resize(R);
  for (int r = 0; r < R; ++r) {
    if (row_obs[r] < 0 || row_obs[r] >= n_obs)
      throw std::invalid_argument("empirical_spec: bad observation index");
    double w = within_weights.size() > 0 ? within_weights[r] : 1.0;
    s.weights[r] = w / n_obs;
  }
  return s;
}

namespace {

void check_pm1(const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(std::abs(v[i]) - 1.0) > 1e-9)
      throw std::invalid_argument("rad/vc discrepancy requires ±1-valued rules");
}

}  // namespace

double discrepancy(const DiscrepancySpec& spec, const Eigen::VectorXd& f,
                   const Eigen::VectorXd& g) {
  if (f.size() != spec.rows() || g.size() != spec.rows())
    throw std::invalid_argument("discrepancy: rule/spec size mismatch");
  switch (spec.loss) {
    case Loss::squared_l2:
      return spec.weights.dot((f - g).array().square().matrix());
    case Loss::l2_root:
      return std::sqrt(spec.weights.dot((f - g).array().square().matrix()));
    case Loss::rad_correlation: {
      check_pm1(f);
      check_pm1(g);
      double wsum = spec.weights.sum();
      return spec.weights.dot(
                 (1.0 - (f.array() * g.array())).matrix()) /
             wsum;
    }
    case Loss::vc_mismatch: {
      check_pm1(f);
      check_pm1(g);
      double wsum = spec.weights.sum();
      double acc = 0.0;
      for (int i = 0; i < f.size(); ++i)
        if (f[i] * g[i] < 0.0) acc += spec.weights[i];
      return acc / wsum;
    }
  }
  throw std::logic_error("unknown loss");
}

FitResult model_discrepancy(const ModelClass& model, const Eigen::VectorXd& g,
                            const DiscrepancySpec& spec,
                            const OptimSettings& opt,
                            const std::vector<Eigen::VectorXd>& warm_starts) {
  if (model.exact_fit) {
    if (auto r = model.exact_fit(g, spec)) return *r;
  }
  if (model.domain.dim() == 0) {
    FitResult r;
    r.argmin = Eigen::VectorXd(0);
    r.value = discrepancy(spec, model.predict(r.argmin), g);
    r.n_evals = 1;
    return r;
  }
  OptimResult o = minimize(
      [&](const Eigen::VectorXd& th) {
        return discrepancy(spec, model.predict(th), g);
      },
      model.domain, opt, warm_starts);
  FitResult r;
  r.value = o.value;
  r.argmin = o.argmin;
  r.n_evals = o.n_evals;
  r.converged = o.converged;
  return r;
}

namespace {

struct DrawFits {
  Eigen::VectorXd model_d;
  Eigen::VectorXd base_d;
  std::vector<Eigen::VectorXd> model_argmin;
  std::vector<Eigen::VectorXd> base_argmin;
};

DrawFits fit_all(const ModelClass& model, const ModelClass& baseline,
                 const std::vector<Eigen::VectorXd>& draws,
                 const DiscrepancySpec& spec, const OptimSettings& opt,
                 int workers,
                 const std::vector<std::vector<Eigen::VectorXd>>* warm_starts) {
  int M = static_cast<int>(draws.size());
  if (M < 1) throw std::invalid_argument("restrictiveness: need at least 1 draw");
  if (warm_starts && static_cast<int>(warm_starts->size()) != M)
    throw std::invalid_argument("restrictiveness: warm start count mismatch");
  DrawFits fits;
  fits.model_d.resize(M);
  fits.base_d.resize(M);
  fits.model_argmin.resize(M);
  fits.base_argmin.resize(M);
  Rng master(opt.seed);
  parallel_for(M, workers, [&](int m) {
    OptimSettings o = opt;
    o.seed = master.child(2 * m).next_u64();
    std::vector<Eigen::VectorXd> warm;
    if (warm_starts) warm = (*warm_starts)[m];
    FitResult fm = model_discrepancy(model, draws[m], spec, o, warm);
    o.seed = master.child(2 * m + 1).next_u64();
    FitResult fb = model_discrepancy(baseline, draws[m], spec, o);
    fits.model_d[m] = fm.value;
    fits.base_d[m] = fb.value;
    fits.model_argmin[m] = fm.argmin;
    fits.base_argmin[m] = fb.argmin;
  });
  return fits;
}

double ratio_or_throw(const Eigen::VectorXd& num, const Eigen::VectorXd& den) {
  double mu0 = den.mean();
  if (!(mu0 > 0.0))
    throw std::domain_error(
        "restrictiveness: baseline discrepancy mean must be positive "
        "(nondegeneracy)");
  return num.mean() / mu0;
}

}  // namespace

RestrictivenessResult restrictiveness_known(
    const ModelClass& model, const ModelClass& baseline,
    const std::vector<Eigen::VectorXd>& draws, const DiscrepancySpec& spec,
    const OptimSettings& opt, int workers,
    const std::vector<std::vector<Eigen::VectorXd>>* warm_starts) {
  DrawFits fits = fit_all(model, baseline, draws, spec, opt, workers, warm_starts);
  int M = static_cast<int>(draws.size());

  RestrictivenessResult res;
  res.M = M;
  res.per_draw_model_d = fits.model_d;
  res.per_draw_base_d = fits.base_d;
  res.argmins = fits.model_argmin;
  res.inference = InferenceKind::known_d;
  res.r_hat = ratio_or_throw(fits.model_d, fits.base_d);

  if (M >= 2) {
    double mu0 = fits.base_d.mean();
    Eigen::VectorXd cn = fits.model_d.array() - fits.model_d.mean();
    Eigen::VectorXd cd = fits.base_d.array() - mu0;
    double s_num = cn.squaredNorm() / (M - 1);
    double s_den = cd.squaredNorm() / (M - 1);
    double s_cov = cn.dot(cd) / (M - 1);
    double v = (s_num - 2.0 * res.r_hat * s_cov + res.r_hat * res.r_hat * s_den) /
               (M * mu0 * mu0);
    res.se = v > 0.0 ? std::sqrt(v) : 0.0;
  }
  return res;
}

std::pair<RestrictivenessResult, InfluenceBundle> restrictiveness_estimated(
    const ModelClass& model, const ModelClass& baseline,
    const std::vector<Eigen::VectorXd>& draws, const DiscrepancySpec& spec,
    const OptimSettings& opt, int workers,
    const std::vector<std::vector<Eigen::VectorXd>>* warm_starts) {
  if (spec.loss != Loss::squared_l2)
    throw std::invalid_argument(
        "estimated-discrepancy inference needs the squared_l2 loss "
        "(per-observation moment representation)");
  int n = spec.n_obs;
  if (n < 30)
    throw std::invalid_argument("estimated-discrepancy inference needs n >= 30");

  DrawFits fits = fit_all(model, baseline, draws, spec, opt, workers, warm_starts);
  int M = static_cast<int>(draws.size());

  RestrictivenessResult res;
  res.M = M;
  res.per_draw_model_d = fits.model_d;
  res.per_draw_base_d = fits.base_d;
  res.argmins = fits.model_argmin;
  res.inference = InferenceKind::estimated_d_if;
  res.r_hat = ratio_or_throw(fits.model_d, fits.base_d);
  double mu0 = fits.base_d.mean();

  // per-observation moments g(X_i, θ̂; f_m), accumulated over draws
  auto obs_moments = [&](const ModelClass& mc, const Eigen::VectorXd& argmin,
                         const Eigen::VectorXd& g) {
    Eigen::VectorXd pred = mc.predict(argmin);
    Eigen::VectorXd gi = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < spec.rows(); ++r) {
      double e = pred[r] - g[r];
      gi[spec.row_obs[r]] += n * spec.weights[r] * e * e;
    }
    return gi;
  };

  InfluenceBundle inf;
  inf.phi1 = Eigen::VectorXd::Zero(n);
  inf.phi0 = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < M; ++m) {
    inf.phi1 += obs_moments(model, fits.model_argmin[m], draws[m]).array().matrix() -
                Eigen::VectorXd::Constant(n, fits.model_d[m]);
    inf.phi0 += obs_moments(baseline, fits.base_argmin[m], draws[m]) -
                Eigen::VectorXd::Constant(n, fits.base_d[m]);
  }
  inf.phi1 /= M;
  inf.phi0 /= M;
  inf.psi = (inf.phi1 - res.r_hat * inf.phi0) / mu0;
  double mean_psi = inf.psi.mean();
  inf.sigma2 = (inf.psi.array() - mean_psi).square().sum() / (n - 1);
  res.se = std::sqrt(inf.sigma2 / n);
  return {res, inf};
}

double bootstrap_se(const ModelClass& model, const ModelClass& baseline,
                    const std::vector<Eigen::VectorXd>& draws,
                    const DiscrepancySpec& spec, int B, std::uint64_t seed,
                    const OptimSettings& opt, int workers) {
  if (B < 100) throw std::invalid_argument("bootstrap_se: B must be >= 100");
  int n = spec.n_obs;
  int M = static_cast<int>(draws.size());

  // full-sample fits provide warm starts for every replicate
  DrawFits full = fit_all(model, baseline, draws, spec, opt, workers, nullptr);

  Eigen::VectorXd r_star(B);
  Rng master(seed);
  parallel_for(B, workers, [&](int b) {
    Rng rng = master.child(b);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      counts[rng.uniform_index(static_cast<std::uint64_t>(n))] += 1.0;
    DiscrepancySpec boot = spec;
    for (int r = 0; r < spec.rows(); ++r)
      boot.weights[r] = spec.weights[r] * counts[spec.row_obs[r]];

    OptimSettings o = opt;
    o.n_starts = 1;  // warm-started refit
    double num = 0.0, den = 0.0;
    for (int m = 0; m < M; ++m) {
      o.seed = rng.next_u64();
      num += model_discrepancy(model, draws[m], boot, o, {full.model_argmin[m]})
                 .value;
      o.seed = rng.next_u64();
      den += model_discrepancy(baseline, draws[m], boot, o,
                               {full.base_argmin[m]})
                 .value;
    }
    r_star[b] = den > 0.0 ? num / den : 0.0;
  });
  double mean = r_star.mean();
  return std::sqrt((r_star.array() - mean).square().sum() / (B - 1));
}

CompletenessResult completeness(const ModelClass& model,
                                const Eigen::VectorXd& observed,
                                const ModelClass& baseline,
                                const DiscrepancySpec& spec,
                                const OptimSettings& opt, int B,
                                std::uint64_t seed, double bench_loss,
                                int workers) {
  FitResult fm = model_discrepancy(model, observed, spec, opt);
  FitResult fb = model_discrepancy(baseline, observed, spec, opt);
  if (!(fb.value > 0.0))
    throw std::domain_error("completeness: baseline loss is zero (degenerate data)");
  CompletenessResult out;
  out.loss_model = fm.value;
  out.loss_base = fb.value;
  out.kappa = (fb.value - fm.value) / (fb.value - bench_loss);

  if (B > 0) {
    int n = spec.n_obs;
    Eigen::VectorXd k_star(B);
    Rng master(seed);
    parallel_for(B, workers, [&](int b) {
      Rng rng = master.child(b);
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i)
        counts[rng.uniform_index(static_cast<std::uint64_t>(n))] += 1.0;
      DiscrepancySpec boot = spec;
      for (int r = 0; r < spec.rows(); ++r)
        boot.weights[r] = spec.weights[r] * counts[spec.row_obs[r]];
      OptimSettings o = opt;
      o.n_starts = 1;
      o.seed = rng.next_u64();
      double lm = model_discrepancy(model, observed, boot, o, {fm.argmin}).value;
      o.seed = rng.next_u64();
      double lb =
          model_discrepancy(baseline, observed, boot, o, {fb.argmin}).value;
      k_star[b] = lb > bench_loss ? (lb - lm) / (lb - bench_loss) : 0.0;
    });
    double mean = k_star.mean();
    out.se = std::sqrt((k_star.array() - mean).square().sum() /
                       std::max(B - 1, 1));
  }
  return out;
}

std::vector<LearningCurvePoint> learning_curve(
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd& X,
                                        const Eigen::VectorXd& Y)>& fitter,
    const std::vector<ScalarRule>& draws,
    const std::function<Eigen::MatrixXd(int n, std::uint64_t seed)>& sample_x,
    const std::function<double(const Eigen::VectorXd& theta,
                               const ScalarRule& f)>& population_risk,
    const std::vector<int>& n_grid, int reps, std::uint64_t seed) {
  std::vector<LearningCurvePoint> out;
  Rng master(seed);
  for (size_t gi = 0; gi < n_grid.size(); ++gi) {
    int n = n_grid[gi];
    std::vector<double> risks;
    for (size_t m = 0; m < draws.size(); ++m) {
      for (int rep = 0; rep < reps; ++rep) {
        std::uint64_t s =
            master.child(gi * 1000003 + m * 131 + rep).next_u64();
        Eigen::MatrixXd X = sample_x(n, s);
        Eigen::VectorXd Y(n);
        for (int i = 0; i < n; ++i) Y[i] = draws[m](X.row(i));
        Eigen::VectorXd theta = fitter(X, Y);
        risks.push_back(population_risk(theta, draws[m]));
      }
    }
    LearningCurvePoint p;
    p.n = n;
    double mean = 0.0;
    for (double r : risks) mean += r;
    mean /= risks.size();
    double var = 0.0;
    for (double r : risks) var += (r - mean) * (r - mean);
    var /= std::max<size_t>(risks.size() - 1, 1);
    p.L = mean;
    p.mc_se = std::sqrt(var / risks.size());
    out.push_back(p);
  }
  return out;
}

double gmm_criterion(const Eigen::VectorXd& theta, const Eigen::VectorXd& Y,
                     const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z,
                     const Eigen::MatrixXd& weight) {
  int n = static_cast<int>(Y.size());
  if (X.rows() != n || Z.rows() != n)
    throw std::invalid_argument("gmm_criterion: sample size mismatch");
  if (X.cols() != theta.size())
    throw std::invalid_argument("gmm_criterion: theta dimension mismatch");
  if (weight.rows() != Z.cols() || weight.cols() != Z.cols())
    throw std::invalid_argument("gmm_criterion: weight dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(
      weight + 1e-12 * weight.norm() * Eigen::MatrixXd::Identity(weight.rows(),
                                                                 weight.cols()));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gmm_criterion: weight matrix is not PSD");
  Eigen::VectorXd gbar = Z.transpose() * (Y - X * theta) / n;
  return gbar.dot(weight * gbar);
}

}  // namespace restr
