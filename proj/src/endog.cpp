#include "restr/endog.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <tuple>

namespace restr {

namespace {

Eigen::VectorXd stack_column(const std::vector<Market>& markets,
                             const std::function<double(const Market&, int)>&
                                 get) {
  int n = total_products(markets);
  Eigen::VectorXd out(n);
  int k = 0;
  for (const auto& m : markets)
    for (int j = 0; j < m.J(); ++j) out[k++] = get(m, j);
  return out;
}

}  // namespace

std::vector<int> select_instruments(const std::vector<Market>& markets, int L,
                                    std::vector<std::string>* warnings) {
  if (markets.empty()) throw std::invalid_argument("no markets");
  const int n_iv = markets.front().n_instruments();
  for (const auto& m : markets)
    if (m.n_instruments() != n_iv)
      throw std::invalid_argument("inconsistent instrument counts");
  Eigen::VectorXd price = stack_column(
      markets, [](const Market& m, int j) { return m.price[j]; });
  Eigen::VectorXd dp = price.array() - price.mean();
  double price_norm = dp.norm();
  if (price_norm == 0.0)
    throw std::invalid_argument("price has zero variance");

  struct Scored {
    int index;
    double abs_corr;
  };
  std::vector<Scored> scored;
  for (int l = 0; l < n_iv; ++l) {
    Eigen::VectorXd z = stack_column(
        markets, [l](const Market& m, int j) { return m.z(j, l); });
    Eigen::VectorXd dz = z.array() - z.mean();
    double zn = dz.norm();
    if (zn == 0.0) {
      if (warnings)
        warnings->push_back("instrument z" + std::to_string(l + 1) +
                            " has zero variance; excluded");
      continue;
    }
    scored.push_back({l, std::abs(dp.dot(dz) / (price_norm * zn))});
  }
  if (static_cast<int>(scored.size()) < L)
    throw std::invalid_argument("fewer usable instruments than requested");
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Scored& a, const Scored& b) {
                     if (a.abs_corr != b.abs_corr)
                       return a.abs_corr > b.abs_corr;
                     return a.index < b.index;
                   });
  std::vector<int> out(L);
  for (int i = 0; i < L; ++i) out[i] = scored[i].index;
  return out;
}

ProjectionBasis make_projection_basis(const ChoiceDesign& d,
                                      const std::vector<int>& iv_idx) {
  const int L = static_cast<int>(iv_idx.size());
  if (L < 1) throw std::invalid_argument("projection basis: need instruments");
  const int N = d.N();
  const int P0 = 1 + 2 * L + L * (L - 1) / 2;
  Eigen::MatrixXd raw(N, P0);
  std::vector<std::string> labels;
  labels.reserve(P0);
  raw.col(0).setOnes();
  labels.push_back("1");
  Eigen::MatrixXd Z(N, L);
  for (int l = 0; l < L; ++l) {
    Z.col(l) = stack_column(d.markets, [&, l](const Market& m, int j) {
      return m.z(j, iv_idx[l]);
    });
    raw.col(1 + l) = Z.col(l);
    labels.push_back("z" + std::to_string(iv_idx[l] + 1));
  }
  for (int l = 0; l < L; ++l) {
    raw.col(1 + L + l) = Z.col(l).array().square();
    labels.push_back("z" + std::to_string(iv_idx[l] + 1) + "^2");
  }
  int c = 1 + 2 * L;
  for (int l = 0; l < L; ++l)
    for (int k = l + 1; k < L; ++k) {
      raw.col(c++) = Z.col(l).array() * Z.col(k).array();
      labels.push_back("z" + std::to_string(iv_idx[l] + 1) + "*z" +
                       std::to_string(iv_idx[k] + 1));
    }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(raw);
  int rank = static_cast<int>(pivoted.rank());
  ProjectionBasis basis;
  if (rank == P0) {
    basis.columns = raw;
    basis.labels = labels;
  } else {
    std::vector<int> kept(pivoted.colsPermutation().indices().data(),
                          pivoted.colsPermutation().indices().data() + rank);
    std::sort(kept.begin(), kept.end());
    basis.columns.resize(N, rank);
    for (int i = 0; i < rank; ++i) {
      basis.columns.col(i) = raw.col(kept[i]);
      basis.labels.push_back(labels[kept[i]]);
    }
    std::vector<bool> is_kept(P0, false);
    for (int i : kept) is_kept[i] = true;
    for (int i = 0; i < P0; ++i)
      if (!is_kept[i])
        basis.warnings.push_back("dropped dependent basis column '" +
                                 labels[i] + "'");
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis.columns);
  basis.thin_q = qr.householderQ() *
                 Eigen::MatrixXd::Identity(N, basis.columns.cols());
  return basis;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> project_onto_instruments(
    const Eigen::VectorXd& h, const ProjectionBasis& basis) {
  if (h.size() != basis.thin_q.rows())
    throw std::invalid_argument("projection: length mismatch");
  Eigen::VectorXd hbar = basis.thin_q * (basis.thin_q.transpose() * h);
  return {hbar, h - hbar};
}

IvDesign make_iv_design(const ChoiceDesign& d, int num_iv) {
  for (const auto& m : d.markets)
    if (!m.has_shares())
      throw std::invalid_argument(
          "endogenous setting needs observed shares (fixed outside share)");
  IvDesign iv;
  iv.d = &d;
  std::vector<std::string> warnings;
  iv.iv = select_instruments(d.markets, num_iv, &warnings);
  iv.basis = make_projection_basis(d, iv.iv);
  for (auto& w : warnings) iv.basis.warnings.push_back(std::move(w));

  // The control-function input coordinates are held fixed at price and
  // the top two instruments no matter how many instruments enter the
  // projection basis: extra instruments then act purely as added
  // restrictions (a strictly larger span to project out of the same
  // function draws), which is the comparison the multi-instrument
  // variant is meant to make.
  const int Lx = std::min(2, num_iv);
  iv.xi.resize(d.N(), 1 + Lx);
  iv.xi.col(0) = d.X.col(0);
  for (int l = 0; l < Lx; ++l)
    iv.xi.col(1 + l) = stack_column(d.markets, [&, l](const Market& m, int j) {
      return m.z(j, iv.iv[l]);
    });
  for (int c = 0; c < iv.xi.cols(); ++c) {
    double mean = iv.xi.col(c).mean();
    double sd = std::sqrt((iv.xi.col(c).array() - mean).square().mean());
    if (sd == 0.0) sd = 1.0;
    iv.xi.col(c) = (iv.xi.col(c).array() - mean) / sd;
  }
  iv.s0.resize(d.n_markets());
  for (int m = 0; m < d.n_markets(); ++m)
    iv.s0[m] = d.markets[m].outside_share();
  return iv;
}

HDraw sample_h(const IvDesign& iv, const RffSettings& rff,
               std::uint64_t seed) {
  HDraw h;
  h.rff = rff_sample(rff.D, rff.lengthscale, rff.sd,
                     static_cast<int>(iv.xi.cols()), seed);
  h.values = h.rff.eval_batch(iv.xi);
  std::tie(h.hbar, h.htilde) = project_onto_instruments(h.values, iv.basis);
  return h;
}

std::vector<HDraw> sample_h_set(const IvDesign& iv, const RffSettings& rff,
                                int M_h, std::uint64_t seed) {
  if (M_h < 1) throw std::invalid_argument("need at least one h draw");
  Rng root(seed);
  std::vector<HDraw> out;
  out.reserve(M_h);
  for (int i = 0; i < M_h; ++i)
    out.push_back(sample_h(iv, rff, root.next_u64()));
  return out;
}

namespace {

Eigen::VectorXd inside_softmax(const Eigen::VectorXd& util) {
  if (!util.allFinite())
    throw std::invalid_argument("share map: non-finite utilities");
  Eigen::ArrayXd e = (util.array() - util.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd inside_nl(const Eigen::VectorXd& util, double rho,
                          const NestMap& nests) {
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("nl shares: rho must lie in [0, 1)");
  if (rho == 0.0) return inside_softmax(util);
  if (!util.allFinite())
    throw std::invalid_argument("share map: non-finite utilities");
  const int J = static_cast<int>(util.size());
  const double inv = 1.0 / (1.0 - rho);
  Eigen::VectorXd nest_max = Eigen::VectorXd::Constant(
      nests.n_nests, -std::numeric_limits<double>::infinity());
  for (int j = 0; j < J; ++j) {
    int g = nests.nest_of[j];
    nest_max[g] = std::max(nest_max[g], util[j] * inv);
  }
  Eigen::VectorXd nest_sum = Eigen::VectorXd::Zero(nests.n_nests);
  for (int j = 0; j < J; ++j) {
    int g = nests.nest_of[j];
    nest_sum[g] += std::exp(util[j] * inv - nest_max[g]);
  }
  Eigen::VectorXd b(nests.n_nests);
  for (int g = 0; g < nests.n_nests; ++g)
    b[g] = std::isfinite(nest_max[g])
               ? (1.0 - rho) * (nest_max[g] + std::log(nest_sum[g]))
               : -std::numeric_limits<double>::infinity();
  double bmax = b.maxCoeff();
  double total = 0.0;
  for (int g = 0; g < nests.n_nests; ++g)
    if (std::isfinite(b[g])) total += std::exp(b[g] - bmax);
  Eigen::VectorXd p(J);
  for (int j = 0; j < J; ++j) {
    int g = nests.nest_of[j];
    double l_g = nest_max[g] + std::log(nest_sum[g]);
    p[j] = std::exp(util[j] * inv - l_g + b[g] - bmax - std::log(total));
  }
  return p;
}

Eigen::VectorXd inside_mxl_cols_mean(const Eigen::MatrixXd& util) {
  const int J = static_cast<int>(util.rows());
  const int R = static_cast<int>(util.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(J);
  for (int r = 0; r < R; ++r) {
    Eigen::ArrayXd e = (util.col(r).array() - util.col(r).maxCoeff()).exp();
    acc.array() += e / e.sum();
  }
  return acc / R;
}

Eigen::MatrixXd crn_nu(int R, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd nu(R, 3);
  for (int r = 0; r < R; ++r)
    for (int k = 0; k < 3; ++k) nu(r, k) = rng.normal();
  return nu;
}

int theta_dim(ChoiceFamily f) {
  switch (f) {
    case ChoiceFamily::mnl: return 3;
    case ChoiceFamily::nl: return 4;
    case ChoiceFamily::mxl: return 6;
  }
  return 0;
}

BoxDomain family_box(ChoiceFamily f) {
  const double b = 60.0;
  switch (f) {
    case ChoiceFamily::mnl: {
      auto box = BoxDomain::bounded(Eigen::VectorXd::Constant(3, -b),
                                    Eigen::VectorXd::Constant(3, b));
      box.hints.assign(3, Transform::linear);
      return box;
    }
    case ChoiceFamily::nl: {
      Eigen::VectorXd lo(4), hi(4);
      lo << -b, -b, -b, 0.0;
      hi << b, b, b, 0.99;
      auto box = BoxDomain::bounded(lo, hi);
      box.hints.assign(4, Transform::linear);
      return box;
    }
    case ChoiceFamily::mxl: {
      Eigen::VectorXd lo(6), hi(6);
      lo << -b, -b, -b, 0.0, 0.0, 0.0;
      hi << b, b, b, 40.0, 40.0, 40.0;
      auto box = BoxDomain::bounded(lo, hi);
      box.hints.assign(6, Transform::linear);
      return box;
    }
  }
  throw std::logic_error("unknown family");
}

// OLS of (log g − h̃) on within-market-demeaned (price, category);
// the inside map is invariant to the utility level, so the constant
// coordinate is left at zero.
Eigen::VectorXd inside_inversion_beta(const IvDesign& iv,
                                      const Eigen::VectorXd& g,
                                      const Eigen::VectorXd& htilde) {
  const ChoiceDesign& d = *iv.d;
  Eigen::VectorXd y(d.N());
  Eigen::MatrixXd x(d.N(), 2);
  for (int m = 0; m < d.n_markets(); ++m) {
    int off = d.offset[m], J = d.markets[m].J();
    for (int j = 0; j < J; ++j)
      y[off + j] = std::log(std::max(g[off + j], 1e-300)) - htilde[off + j];
    y.segment(off, J).array() -= y.segment(off, J).mean();
    for (int c = 0; c < 2; ++c) {
      x.block(off, c, J, 1) = d.X.block(off, c, J, 1);
      x.block(off, c, J, 1).array() -= x.block(off, c, J, 1).mean();
    }
  }
  Eigen::VectorXd b2 = x.colPivHouseholderQr().solve(y);
  Eigen::VectorXd beta(3);
  beta << b2[0], b2[1], 0.0;
  return beta;
}

}  // namespace

Eigen::VectorXd iv_share_map(ChoiceFamily family, const Market& m,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& u_adjust, double s0,
                             int R, std::uint64_t seed) {
  if (theta.size() != theta_dim(family))
    throw std::invalid_argument("iv_share_map: theta length mismatch");
  if (u_adjust.size() != m.J())
    throw std::invalid_argument("iv_share_map: adjustment length mismatch");
  if (!(s0 > 0.0 && s0 < 1.0))
    throw std::invalid_argument("iv_share_map: outside share must be in (0,1)");
  Eigen::VectorXd u = m.x() * theta.head(3) + u_adjust;
  Eigen::VectorXd p;
  switch (family) {
    case ChoiceFamily::mnl:
      p = inside_softmax(u);
      break;
    case ChoiceFamily::nl:
      p = inside_nl(u, theta[3], nests_by_category(m));
      break;
    case ChoiceFamily::mxl: {
      Eigen::VectorXd sigma = theta.tail(3);
      if (sigma.isZero(0.0)) {
        p = inside_softmax(u);
      } else {
        Eigen::MatrixXd nu = crn_nu(R, seed);
        Eigen::MatrixXd shift =
            (m.x() * sigma.asDiagonal()) * nu.transpose();
        p = inside_mxl_cols_mean(shift.colwise() + u);
      }
      break;
    }
  }
  return (1.0 - s0) * p;
}

Eigen::VectorXd iv_stacked_shares(const IvDesign& iv, ChoiceFamily family,
                                  const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& htilde,
                                  const Eigen::MatrixXd& nu) {
  const ChoiceDesign& d = *iv.d;
  if (theta.size() != theta_dim(family))
    throw std::invalid_argument("iv shares: theta length mismatch");
  Eigen::VectorXd u = d.X * theta.head(3) + htilde;
  if (!u.allFinite())
    throw std::invalid_argument("share map: non-finite utilities");
  Eigen::VectorXd p(d.N());
  const bool mix = family == ChoiceFamily::mxl && !theta.tail(3).isZero(0.0);
  Eigen::MatrixXd shift;
  if (mix)
    shift = (d.X * theta.tail(3).asDiagonal()) * nu.transpose();
  for (int m = 0; m < d.n_markets(); ++m) {
    int off = d.offset[m], J = d.markets[m].J();
    Eigen::VectorXd seg;
    switch (family) {
      case ChoiceFamily::mnl:
        seg = inside_softmax(u.segment(off, J));
        break;
      case ChoiceFamily::nl:
        seg = inside_nl(u.segment(off, J), theta[3], d.nests[m]);
        break;
      case ChoiceFamily::mxl:
        seg = mix ? inside_mxl_cols_mean(shift.middleRows(off, J).colwise() +
                                         u.segment(off, J))
                  : inside_softmax(u.segment(off, J));
        break;
    }
    p.segment(off, J) = (1.0 - iv.s0[m]) * seg;
  }
  return p;
}

Eigen::VectorXd rescale_to_outside(const IvDesign& iv,
                                   Eigen::VectorXd shares) {
  const ChoiceDesign& d = *iv.d;
  if (shares.size() != d.N())
    throw std::invalid_argument("rescale: length mismatch");
  for (int m = 0; m < d.n_markets(); ++m) {
    int off = d.offset[m], J = d.markets[m].J();
    double inside = shares.segment(off, J).sum();
    if (inside <= 0.0)
      throw std::invalid_argument("rescale: degenerate inside shares");
    shares.segment(off, J) *= (1.0 - iv.s0[m]) / inside;
  }
  return shares;
}

namespace {

// θ-only class at a fixed control function
ModelClass fixed_h_model(const IvDesign& iv, ChoiceFamily family,
                         const Eigen::VectorXd& htilde,
                         const Eigen::MatrixXd& nu) {
  ModelClass mc;
  mc.name = family_name(family) + "+h";
  mc.domain = family_box(family);
  mc.predict = [&iv, family, &htilde, &nu](const Eigen::VectorXd& th) {
    return iv_stacked_shares(iv, family, th, htilde, nu);
  };
  return mc;
}

}  // namespace

ModelClass semiparam_model(const IvDesign& iv, ChoiceFamily family,
                           const std::vector<HDraw>& hs, int R,
                           const OptimSettings& theta_opt,
                           std::uint64_t nu_seed) {
  if (hs.empty()) throw std::invalid_argument("semiparam model: no h draws");
  const int M_h = static_cast<int>(hs.size());
  const int k = theta_dim(family);
  Eigen::MatrixXd nu = crn_nu(R, nu_seed);

  ModelClass mc;
  mc.name = family_name(family) + "+control";
  BoxDomain tb = family_box(family);
  Eigen::VectorXd lo(1 + k), hi(1 + k);
  lo[0] = 0.0;
  hi[0] = M_h - 1;
  lo.tail(k) = tb.lower;
  hi.tail(k) = tb.upper;
  mc.domain = BoxDomain::bounded(lo, hi);
  mc.domain.hints.assign(1 + k, Transform::linear);

  auto predict = [&iv, family, &hs, nu, M_h](const Eigen::VectorXd& th) {
    int hi_idx = static_cast<int>(std::llround(th[0]));
    hi_idx = std::min(std::max(hi_idx, 0), M_h - 1);
    return iv_stacked_shares(iv, family, th.tail(th.size() - 1),
                             hs[hi_idx].htilde, nu);
  };
  mc.predict = predict;

  mc.exact_fit = [&iv, family, &hs, nu, theta_opt, k, M_h](
                     const Eigen::VectorXd& g, const DiscrepancySpec& spec)
      -> std::optional<FitResult> {
    FitResult best;
    best.value = std::numeric_limits<double>::infinity();
    long evals = 0;
    Eigen::VectorXd incumbent;
    for (int hi_idx = 0; hi_idx < M_h; ++hi_idx) {
      ModelClass inner = fixed_h_model(iv, family, hs[hi_idx].htilde, nu);
      std::vector<Eigen::VectorXd> warms;
      Eigen::VectorXd inv_beta =
          inside_inversion_beta(iv, g, hs[hi_idx].htilde);
      Eigen::VectorXd w0 = Eigen::VectorXd::Zero(k);
      w0.head(3) = inv_beta;
      warms.push_back(w0);
      if (incumbent.size() == k) warms.push_back(incumbent);
      OptimSettings inner_opt = theta_opt;
      if (hi_idx > 0) inner_opt.n_starts = 1;
      FitResult fit = model_discrepancy(inner, g, spec, inner_opt, warms);
      evals += fit.n_evals;
      if (fit.value < best.value) {
        best.value = fit.value;
        best.converged = fit.converged;
        best.argmin.resize(1 + k);
        best.argmin[0] = hi_idx;
        best.argmin.tail(k) = fit.argmin;
        incumbent = fit.argmin;
      }
    }
    best.n_evals = evals;
    return best;
  };
  return mc;
}

ModelClass endog_baseline_model(const IvDesign& iv,
                                const std::vector<HDraw>& hs) {
  if (hs.empty()) throw std::invalid_argument("baseline: no h draws");
  const int M_h = static_cast<int>(hs.size());
  // cache the M_h fixed share systems
  auto cached = std::make_shared<std::vector<Eigen::VectorXd>>();
  cached->reserve(M_h);
  Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd no_nu(0, 3);
  for (int i = 0; i < M_h; ++i)
    cached->push_back(iv_stacked_shares(iv, ChoiceFamily::mnl, zero3,
                                        hs[i].htilde, no_nu));

  ModelClass mc;
  mc.name = "control-only";
  Eigen::VectorXd lo(1), hi(1);
  lo[0] = 0.0;
  hi[0] = M_h - 1;
  mc.domain = BoxDomain::bounded(lo, hi);
  mc.domain.hints.assign(1, Transform::linear);
  mc.predict = [cached, M_h](const Eigen::VectorXd& th) {
    int hi_idx = static_cast<int>(std::llround(th[0]));
    hi_idx = std::min(std::max(hi_idx, 0), M_h - 1);
    return (*cached)[hi_idx];
  };
  mc.exact_fit = [cached, M_h](const Eigen::VectorXd& g,
                               const DiscrepancySpec& spec)
      -> std::optional<FitResult> {
    FitResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < M_h; ++i) {
      double v = discrepancy(spec, (*cached)[i], g);
      if (v < best.value) {
        best.value = v;
        best.argmin = Eigen::VectorXd::Constant(1, i);
      }
    }
    best.n_evals = M_h;
    return best;
  };
  return mc;
}

SemiparamFit semiparam_discrepancy(const IvDesign& iv, ChoiceFamily family,
                                   const Eigen::VectorXd& g,
                                   const std::vector<HDraw>& hs,
                                   const OptimSettings& theta_opt, int R,
                                   std::uint64_t nu_seed) {
  ModelClass mc = semiparam_model(iv, family, hs, R, theta_opt, nu_seed);
  DiscrepancySpec spec = choice_spec(*iv.d);
  auto fit = mc.exact_fit(g, spec);
  SemiparamFit out;
  out.value = fit->value;
  out.h_index = static_cast<int>(std::llround(fit->argmin[0]));
  out.theta = fit->argmin.tail(fit->argmin.size() - 1);
  return out;
}

std::vector<EndogTableRow> endog_table(const ChoiceDesign& d,
                                       const EligibleChoiceSampler& sampler,
                                       const std::vector<EligibleKind>& kinds,
                                       const EndogSettings& settings,
                                       const OptimSettings& theta_opt,
                                       std::uint64_t seed, int workers) {
  IvDesign iv = make_iv_design(d, settings.num_iv);
  DiscrepancySpec spec = choice_spec(d);
  Rng root(seed);
  std::vector<HDraw> hs =
      sample_h_set(iv, settings.rff, settings.M_h, root.child(1).next_u64());
  ModelClass baseline = endog_baseline_model(iv, hs);
  const std::uint64_t nu_seed = 777;

  OptimSettings mxl_opt = theta_opt;
  mxl_opt.n_starts = std::min(theta_opt.n_starts, 2);

  ModelClass m_mnl =
      semiparam_model(iv, ChoiceFamily::mnl, hs, settings.R_opt, theta_opt,
                      nu_seed);
  ModelClass m_nl =
      semiparam_model(iv, ChoiceFamily::nl, hs, settings.R_opt, theta_opt,
                      nu_seed);
  ModelClass m_mxl = semiparam_model(iv, ChoiceFamily::mxl, hs,
                                     settings.R_opt, mxl_opt, nu_seed);
  ModelClass m_mxl_rep = semiparam_model(iv, ChoiceFamily::mxl, hs,
                                         settings.R_report, mxl_opt, nu_seed);

  std::vector<EndogTableRow> rows;
  for (size_t ki = 0; ki < kinds.size(); ++ki) {
    auto draws =
        eligible_draws(sampler, kinds[ki], settings.M,
                       root.child(2 + ki).next_u64());
    for (auto& g : draws) g = rescale_to_outside(iv, std::move(g));

    auto [res_mnl, inf_mnl] = restrictiveness_estimated(
        m_mnl, baseline, draws, spec, theta_opt, workers);
    (void)inf_mnl;
    auto [res_nl, inf_nl] = restrictiveness_estimated(
        m_nl, baseline, draws, spec, theta_opt, workers);
    (void)inf_nl;
    auto [res_mxl, inf_mxl] = restrictiveness_estimated(
        m_mxl, baseline, draws, spec, mxl_opt, workers);
    (void)inf_mxl;

    // The plain-logit argmin embeds exactly into both larger classes
    // (ρ = 0 / σ = 0 are special-cased), so reported nested values
    // never exceed the plain-logit value.  Mixed-logit fits are also
    // re-evaluated with the reporting draw count.
    for (size_t i = 0; i < draws.size(); ++i) {
      double d_mnl = res_mnl.per_draw_model_d[i];
      if (d_mnl < res_nl.per_draw_model_d[i]) {
        res_nl.per_draw_model_d[i] = d_mnl;
        Eigen::VectorXd at(5);
        at << res_mnl.argmins[i], 0.0;
        res_nl.argmins[i] = at;
      }
      double d_rep = discrepancy(
          spec, m_mxl_rep.predict(res_mxl.argmins[i]), draws[i]);
      if (d_mnl < d_rep) {
        d_rep = d_mnl;
        Eigen::VectorXd at(7);
        at << res_mnl.argmins[i], 0.0, 0.0, 0.0;
        res_mxl.argmins[i] = at;
      }
      res_mxl.per_draw_model_d[i] = d_rep;
    }
    res_nl.r_hat =
        res_nl.per_draw_model_d.mean() / res_nl.per_draw_base_d.mean();
    res_mxl.r_hat =
        res_mxl.per_draw_model_d.mean() / res_mxl.per_draw_base_d.mean();

    rows.push_back({kinds[ki], ChoiceFamily::mnl, std::move(res_mnl)});
    rows.push_back({kinds[ki], ChoiceFamily::nl, std::move(res_nl)});
    rows.push_back({kinds[ki], ChoiceFamily::mxl, std::move(res_mxl)});
  }
  return rows;
}

}  // namespace restr
