#include "restr/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "restr/parallel.hpp"

namespace restr {

namespace {

double cpt_weight(double p, double gamma, double delta) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double a = delta * std::pow(p, gamma);
  double b = std::pow(1.0 - p, gamma);
  return a / (a + b);
}

double ce_from_weight(const Lottery& lot, double w, double alpha) {
  double u = w * std::pow(lot.z_hi, alpha) + (1.0 - w) * std::pow(lot.z_lo, alpha);
  double ce = std::pow(u, 1.0 / alpha);
  return std::clamp(ce, lot.z_lo, lot.z_hi);
}

void check_lottery(const Lottery& lot) {
  if (lot.z_hi < lot.z_lo)
    throw std::invalid_argument("lottery: z_hi must be >= z_lo");
}

}  // namespace

double cpt_ce(const Lottery& lot, const CptParams& params) {
  check_lottery(lot);
  if (!(params.alpha > 0.0) || !(params.gamma > 0.0) || !(params.delta > 0.0))
    throw std::invalid_argument("cpt_ce: parameters out of range");
  return ce_from_weight(lot, cpt_weight(lot.p, params.gamma, params.delta),
                        params.alpha);
}

double da_ce(const Lottery& lot, const DaParams& params) {
  check_lottery(lot);
  if (!(params.alpha > 0.0) || !(params.eta > -1.0))
    throw std::invalid_argument("da_ce: parameters out of range");
  double w = lot.p / (1.0 + (1.0 - lot.p) * params.eta);
  return ce_from_weight(lot, w, params.alpha);
}

std::string SubmodelMask::label(RiskClass cls) const {
  std::string s = cls == RiskClass::CPT ? "cpt(" : "da(";
  bool first = true;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!first) s += ",";
    s += name;
    first = false;
  };
  add(alpha, "alpha");
  if (cls == RiskClass::CPT) {
    add(gamma, "gamma");
    add(delta, "delta");
  } else {
    add(eta, "eta");
  }
  return s + ")";
}

int SubmodelMask::n_free(RiskClass cls) const {
  if (cls == RiskClass::CPT) return int(alpha) + int(gamma) + int(delta);
  return int(alpha) + int(eta);
}

Eigen::MatrixXd lottery_grid(int res) {
  if (res < 2) throw std::invalid_argument("lottery_grid: resolution must be >= 2");
  Eigen::VectorXd ax(res);
  for (int i = 0; i < res; ++i) ax[i] = i / (res - 1.0);
  std::vector<Eigen::Vector3d> nodes;
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      if (ax[i] < ax[j]) continue;  // infeasible: z̄ < z_
      for (int k = 0; k < res; ++k)
        nodes.emplace_back(ax[i], ax[j], ax[k]);
    }
  Eigen::MatrixXd pts(nodes.size(), 3);
  for (size_t r = 0; r < nodes.size(); ++r) pts.row(r) = nodes[r];
  return pts;
}

namespace {

// completes feasible-node latent values onto the full cube; for an
// infeasible node (z̄ index i < z_ index j) uses the diagonal node
// (j, j, k), which keeps the cube componentwise monotone
RectGrid complete_cube(const Eigen::VectorXd& ax,
                       const Eigen::VectorXd& feasible_values) {
  int res = static_cast<int>(ax.size());
  RectGrid grid;
  grid.axes = {ax, ax, ax};
  grid.values.resize(res * res * res);

  std::vector<std::vector<int>> node_of(res, std::vector<int>(res, -1));
  int idx = 0;
  for (int i = 0; i < res; ++i)
    for (int j = 0; j <= i; ++j) node_of[i][j] = idx++;

  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j)
      for (int k = 0; k < res; ++k) {
        int feas = i >= j ? node_of[i][j] : node_of[j][j];
        grid.values[(std::int64_t(i) * res + j) * res + k] =
            feasible_values[feas * res + k];
      }
  return grid;
}

PartialOrderSpec lottery_order() {
  return PartialOrderSpec{{Direction::increasing, Direction::increasing,
                           Direction::increasing}};
}

std::vector<LotteryRule> rules_from_latents(
    const Eigen::MatrixXd& points, int res,
    const std::vector<Eigen::VectorXd>& latents) {
  auto pairs = comparable_pairs(points, lottery_order());
  Eigen::VectorXd ax(res);
  for (int i = 0; i < res; ++i) ax[i] = i / (res - 1.0);
  std::vector<LotteryRule> out(latents.size());
  parallel_for(static_cast<int>(latents.size()), [&](int m) {
    LotteryRule rule;
    Eigen::VectorXd g = monotone_mix(latents[m], pairs, &rule.mix_weight);
    rule.latent = complete_cube(ax, g);
    out[m] = std::move(rule);
  });
  return out;
}

}  // namespace

double LotteryRule::eval(const Lottery& lot) const {
  check_lottery(lot);
  Eigen::Vector3d q(lot.z_hi, lot.z_lo, lot.p);
  double g = interpolate(latent, q).value;
  return range_transform(g, lot.z_lo, lot.z_hi);
}

Eigen::VectorXd LotteryRule::on_points(const Eigen::MatrixXd& pts) const {
  Eigen::VectorXd v(pts.rows());
  for (int r = 0; r < pts.rows(); ++r)
    v[r] = eval(Lottery{pts(r, 0), pts(r, 1), pts(r, 2)});
  return v;
}

std::vector<LotteryRule> lottery_eligible_sampler(const KernelSpec& kernel,
                                                  int grid_res, int M,
                                                  std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("lottery_eligible_sampler: M >= 1");
  Eigen::MatrixXd points = lottery_grid(grid_res);
  GpSampler sampler(kernel, points);
  Rng master(seed);
  std::vector<Eigen::VectorXd> latents(M);
  parallel_for(M, [&](int m) {
    Rng rng = master.child(m);
    latents[m] = sampler.draw(rng);
  });
  return rules_from_latents(points, grid_res, latents);
}

std::vector<LotteryRule> lottery_eligible_sampler_spline(
    const SplineSettings& settings, int grid_res, int M, std::uint64_t seed) {
  if (M < 1) throw std::invalid_argument("lottery_eligible_sampler_spline: M >= 1");
  Eigen::MatrixXd points = lottery_grid(grid_res);
  std::vector<std::pair<double, double>> ranges = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  Rng master(seed);
  std::vector<Eigen::VectorXd> latents(M);
  parallel_for(M, [&](int m) {
    SplineDraw draw =
        spline_prior_sample(ranges, settings, master.child(m).next_u64());
    Eigen::VectorXd v(points.rows());
    for (int r = 0; r < points.rows(); ++r) v[r] = draw.eval(points.row(r));
    latents[m] = v;
  });
  return rules_from_latents(points, grid_res, latents);
}

namespace {

struct ParamLayout {
  std::vector<char> names;  // 'a','g','d','e' in box order
};

ParamLayout layout(RiskClass cls, const SubmodelMask& mask) {
  ParamLayout l;
  if (mask.alpha) l.names.push_back('a');
  if (cls == RiskClass::CPT) {
    if (mask.gamma) l.names.push_back('g');
    if (mask.delta) l.names.push_back('d');
  } else if (mask.eta) {
    l.names.push_back('e');
  }
  return l;
}

void fill_params(RiskClass cls, const SubmodelMask& mask,
                 const Eigen::VectorXd& theta, CptParams& cpt, DaParams& da) {
  cpt = CptParams{};
  da = DaParams{};
  ParamLayout l = layout(cls, mask);
  for (size_t i = 0; i < l.names.size(); ++i) {
    double v = theta[static_cast<int>(i)];
    switch (l.names[i]) {
      case 'a':
        cpt.alpha = v;
        da.alpha = v;
        break;
      case 'g':
        cpt.gamma = v;
        break;
      case 'd':
        cpt.delta = v;
        break;
      case 'e':
        da.eta = v;
        break;
    }
  }
}

}  // namespace

RiskModelPair build_risk_model(RiskClass cls, const SubmodelMask& mask,
                               const Eigen::MatrixXd& eval_points) {
  ParamLayout l = layout(cls, mask);
  int d = static_cast<int>(l.names.size());
  BoxDomain box;
  box.lower.resize(d);
  box.upper.resize(d);
  box.hints.assign(d, Transform::logit);
  for (int i = 0; i < d; ++i) {
    switch (l.names[i]) {
      case 'a':
      case 'g':
        box.lower[i] = 0.01;
        box.upper[i] = 1.0;
        break;
      case 'd':
        box.lower[i] = 0.01;
        box.upper[i] = 20.0;
        box.hints[i] = Transform::log_scale;
        break;
      case 'e':
        box.lower[i] = -0.99;
        box.upper[i] = 20.0;
        break;
    }
  }

  Eigen::MatrixXd pts = eval_points;
  auto predict = [cls, mask, pts](const Eigen::VectorXd& theta) {
    CptParams cpt;
    DaParams da;
    fill_params(cls, mask, theta, cpt, da);
    Eigen::VectorXd out(pts.rows());
    for (int r = 0; r < pts.rows(); ++r) {
      Lottery lot{pts(r, 0), pts(r, 1), pts(r, 2)};
      out[r] = cls == RiskClass::CPT ? cpt_ce(lot, cpt) : da_ce(lot, da);
    }
    return out;
  };

  RiskModelPair pair;
  pair.cls = cls;
  pair.mask = mask;
  pair.model.name = mask.label(cls);
  pair.model.domain = box;
  pair.model.predict = predict;

  pair.baseline.name = cls == RiskClass::CPT ? "cpt(benchmark)" : "da(benchmark)";
  pair.baseline.domain = BoxDomain::empty();
  Eigen::VectorXd bench(pts.rows());
  for (int r = 0; r < pts.rows(); ++r)
    bench[r] = pts(r, 2) * pts(r, 0) + (1.0 - pts(r, 2)) * pts(r, 1);
  pair.baseline.predict = [bench](const Eigen::VectorXd&) { return bench; };
  return pair;
}

Eigen::VectorXd embed_benchmark(RiskClass cls, const SubmodelMask& mask) {
  ParamLayout l = layout(cls, mask);
  Eigen::VectorXd v(l.names.size());
  for (size_t i = 0; i < l.names.size(); ++i)
    v[static_cast<int>(i)] = l.names[i] == 'e' ? 0.0 : 1.0;
  return v;
}

Eigen::VectorXd embed_submodel(RiskClass cls, const SubmodelMask& sub,
                               const Eigen::VectorXd& sub_argmin,
                               const SubmodelMask& super) {
  ParamLayout ls = layout(cls, sub);
  ParamLayout lp = layout(cls, super);
  Eigen::VectorXd v = embed_benchmark(cls, super);
  for (size_t i = 0; i < ls.names.size(); ++i) {
    for (size_t j = 0; j < lp.names.size(); ++j)
      if (lp.names[j] == ls.names[i])
        v[static_cast<int>(j)] = sub_argmin[static_cast<int>(i)];
  }
  return v;
}

std::vector<std::pair<RiskClass, SubmodelMask>> standard_risk_masks() {
  auto cpt = [](bool a, bool g, bool d) {
    SubmodelMask m;
    m.alpha = a;
    m.gamma = g;
    m.delta = d;
    return std::make_pair(RiskClass::CPT, m);
  };
  auto da = [](bool a, bool e) {
    SubmodelMask m;
    m.alpha = a;
    m.eta = e;
    return std::make_pair(RiskClass::DA, m);
  };
  return {cpt(true, true, true), cpt(false, true, true), cpt(true, false, true),
          cpt(false, false, true), cpt(true, true, false),
          cpt(false, true, false), cpt(true, false, false), da(true, true),
          da(false, true)};
}

std::vector<RiskRow> risk_table(const std::vector<LotteryRule>& draws,
                                int grid_res, const OptimSettings& opt,
                                int workers) {
  const int M = static_cast<int>(draws.size());
  if (M < 1) throw std::invalid_argument("risk_table: no draws");
  Eigen::MatrixXd points = lottery_grid(grid_res);
  DiscrepancySpec spec = grid_spec(
      Loss::l2_root,
      Eigen::VectorXd::Constant(points.rows(), 1.0 / points.rows()));

  auto masks = standard_risk_masks();
  const int K = static_cast<int>(masks.size());
  std::vector<RiskModelPair> pairs;
  pairs.reserve(K);
  for (auto& [cls, mask] : masks) pairs.push_back(build_risk_model(cls, mask, points));

  // fit order: fewer free parameters first, so smaller-model argmins warm
  // the larger masks of the same class
  std::vector<int> fit_order(K);
  for (int i = 0; i < K; ++i) fit_order[i] = i;
  std::stable_sort(fit_order.begin(), fit_order.end(), [&](int a, int b) {
    return masks[a].second.n_free(masks[a].first) <
           masks[b].second.n_free(masks[b].first);
  });

  auto is_submask = [](RiskClass c1, const SubmodelMask& s, RiskClass c2,
                       const SubmodelMask& t) {
    if (c1 != c2) return false;
    return (!s.alpha || t.alpha) && (!s.gamma || t.gamma) &&
           (!s.delta || t.delta) && (!s.eta || t.eta);
  };

  Eigen::MatrixXd model_d(M, K);
  Eigen::VectorXd base_d(M);
  std::vector<std::vector<Eigen::VectorXd>> argmins(
      M, std::vector<Eigen::VectorXd>(K));

  Rng master(opt.seed);
  parallel_for(M, workers, [&](int m) {
    Eigen::VectorXd g = draws[m].on_points(points);
    base_d[m] = discrepancy(spec, pairs[0].baseline.predict(Eigen::VectorXd(0)), g);
    Rng draw_rng = master.child(m);
    for (int oi = 0; oi < K; ++oi) {
      int k = fit_order[oi];
      auto& [cls, mask] = masks[k];
      std::vector<Eigen::VectorXd> warm = {embed_benchmark(cls, mask)};
      for (int oj = 0; oj < oi; ++oj) {
        int k2 = fit_order[oj];
        if (is_submask(masks[k2].first, masks[k2].second, cls, mask))
          warm.push_back(
              embed_submodel(cls, masks[k2].second, argmins[m][k2], mask));
      }
      OptimSettings o = opt;
      o.seed = draw_rng.child(k).next_u64();
      FitResult fit = model_discrepancy(pairs[k].model, g, spec, o, warm);
      model_d(m, k) = fit.value;
      argmins[m][k] = fit.argmin;
    }
  });

  std::vector<RiskRow> rows;
  for (int k = 0; k < K; ++k) {
    RiskRow row;
    row.spec_name = masks[k].second.label(masks[k].first);
    row.n_free = masks[k].second.n_free(masks[k].first);
    RestrictivenessResult res;
    res.M = M;
    res.per_draw_model_d = model_d.col(k);
    res.per_draw_base_d = base_d;
    res.inference = InferenceKind::known_d;
    double mu0 = base_d.mean();
    if (!(mu0 > 0.0))
      throw std::domain_error("risk_table: degenerate baseline discrepancy");
    res.r_hat = model_d.col(k).mean() / mu0;
    if (M >= 2) {
      Eigen::VectorXd cn = model_d.col(k).array() - model_d.col(k).mean();
      Eigen::VectorXd cd = base_d.array() - mu0;
      double s_num = cn.squaredNorm() / (M - 1);
      double s_den = cd.squaredNorm() / (M - 1);
      double s_cov = cn.dot(cd) / (M - 1);
      double v = (s_num - 2.0 * res.r_hat * s_cov +
                  res.r_hat * res.r_hat * s_den) /
                 (M * mu0 * mu0);
      res.se = v > 0.0 ? std::sqrt(v) : 0.0;
    }
    for (int m = 0; m < M; ++m) res.argmins.push_back(argmins[m][k]);
    row.result = res;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace restr
