#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "restr/engine.hpp"
#include "restr/rng.hpp"
#include "restr/structural.hpp"

using namespace restr;

TEST_SUITE_BEGIN("structural");

namespace {

OptimSettings quick_opt(int n_starts = 6) {
  OptimSettings o;
  o.n_starts = n_starts;
  o.max_evals = 2000;
  o.seed = 3;
  return o;
}

Eigen::VectorXd vec6(double a, double b, double c, double d, double e,
                     double f) {
  Eigen::VectorXd v(6);
  v << a, b, c, d, e, f;
  return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

// independent weighted least-squares oracle: coefficients and weighted
// residual sum of squares of y on the columns of A
std::pair<Eigen::VectorXd, double> ls_oracle(const Eigen::MatrixXd& A,
                                             const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd Aw = sw.asDiagonal() * A;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;
  Eigen::VectorXd coef = Aw.colPivHouseholderQr().solve(yw);
  const double ssr = (yw - Aw * coef).squaredNorm();
  return {coef, ssr};
}

EntryParams entry_params6(const Eigen::VectorXd& t,
                          EntryError err = EntryError::independent_logistic) {
  EntryParams p;
  p.alpha1 = t(0);
  p.alpha2 = t(1);
  p.beta1 = t(2);
  p.beta2 = t(3);
  p.gamma1 = t(4);
  p.gamma2 = t(5);
  p.error = err;
  return p;
}

double region_sum(const EntryRegions& r) {
  return r.p00 + r.p11 + r.p10_unique + r.p01_unique + r.p_mult;
}

// atom-level x1 column of the demand-supply design
Eigen::VectorXd atom_x1(const DsDesign& d) {
  Eigen::VectorXd x1(d.n_atoms());
  for (int a = 0; a < d.n_atoms(); ++a) x1(a) = d.x(d.atom_x[a], 0);
  return x1;
}

}  // namespace

TEST_CASE("solving the two-equation system matches hand calculations") {
  // no interaction: the system is already reduced
  SimEqParams p;
  p.alpha << 0.3, -0.7;
  p.gamma1 = 1.5;
  p.gamma2 = 2.0;
  Eigen::Vector2d y = ds_reduced_form(p, {0.4, -0.2});
  CHECK(y(0) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(-1.1).epsilon(1e-14));

  // symmetric interaction of one half doubles the stand-alone outcome
  SimEqParams q;
  q.alpha.setZero();
  q.beta1 = 0.5;
  q.beta2 = 0.5;
  q.gamma1 = 1.0;
  q.gamma2 = 1.0;
  y = ds_reduced_form(q, {1.0, 1.0});
  CHECK(y(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(2.0).epsilon(1e-14));

  // generic parameters against a dense 2x2 matrix solve
  Rng rng(20);
  for (int rep = 0; rep < 100; ++rep) {
    SimEqParams g;
    g.alpha << 4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0;
    g.beta1 = 1.8 * rng.uniform() - 0.9;
    g.beta2 = 1.8 * rng.uniform() - 0.9;
    g.gamma1 = 4.0 * rng.uniform() - 2.0;
    g.gamma2 = 4.0 * rng.uniform() - 2.0;
    Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    Eigen::Matrix2d ImB;
    ImB << 1.0, -g.beta1, -g.beta2, 1.0;
    Eigen::Vector2d rhs(g.alpha(0) + g.gamma1 * x(0),
                        g.alpha(1) + g.gamma2 * x(1));
    Eigen::Vector2d ref = ImB.colPivHouseholderQr().solve(rhs);
    Eigen::Vector2d got = ds_reduced_form(g, x);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
  }

  SimEqParams s;
  s.beta1 = 2.0;
  s.beta2 = 0.5;
  CHECK_THROWS_AS(ds_reduced_form(s, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("the solved outcome reproduces itself when substituted back") {
  Rng rng(21);
  for (int rep = 0; rep < 1000; ++rep) {
    SimEqParams p;
    p.alpha << 4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0;
    p.beta1 = 1.4 * rng.uniform() - 0.7;
    p.beta2 = 1.4 * rng.uniform() - 0.7;
    p.gamma1 = 4.0 * rng.uniform() - 2.0;
    p.gamma2 = 4.0 * rng.uniform() - 2.0;
    Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    Eigen::Vector2d y = ds_reduced_form(p, x);
    const double lhs1 = p.alpha(0) + p.beta1 * y(1) + p.gamma1 * x(0);
    const double lhs2 = p.alpha(1) + p.beta2 * y(0) + p.gamma2 * x(1);
    CHECK(std::abs(y(0) - lhs1) < 1e-12);
    CHECK(std::abs(y(1) - lhs2) < 1e-12);
  }
}

TEST_CASE("the demand-supply design is a proper probability layout") {
  DsDesign d = make_ds_design();
  CHECK(d.n_x() == 25);
  CHECK(d.n_atoms() == 125);
  CHECK(d.x_weight.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.joint_weight.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.x.col(0).minCoeff() == -1.0);
  CHECK(d.x.col(0).maxCoeff() == 1.0);

  // symmetric shocks: the conditional price mean is the systematic part
  Eigen::VectorXd pbar = d.pbar();
  for (int j = 0; j < d.n_x(); ++j) {
    const double pi = 1.0 + 0.8 * d.x(j, 0) + 0.6 * d.x(j, 1);
    CHECK(pbar(j) == doctest::Approx(pi).epsilon(1e-13));
  }

  // conditional means: identity on price, constants pass through
  Eigen::VectorXd mean_p = d.conditional_mean(d.p);
  CHECK((mean_p - pbar).cwiseAbs().maxCoeff() < 1e-13);
  Eigen::VectorXd c = d.conditional_mean(Eigen::VectorXd::Constant(125, 3.25));
  CHECK((c.array() - 3.25).abs().maxCoeff() < 1e-13);

  CHECK_THROWS_AS(d.conditional_mean(Eigen::VectorXd::Zero(7)),
                  std::invalid_argument);
}

TEST_CASE("the solved-system class recovers rules it contains") {
  DsDesign d = make_ds_design();
  BoxDomain box = ds_rf_default_box();
  ModelClass model = ds_rf_model(d, box);
  Eigen::VectorXd theta_star = vec6(0.5, -0.3, -0.6, 0.4, 1.2, -0.8);
  Eigen::VectorXd target = model.predict(theta_star);

  // the affine inverse finds the generating parameters exactly
  Eigen::VectorXd warm = ds_rf_warm_start(d, box, target);
  CHECK((warm - theta_star).cwiseAbs().maxCoeff() < 1e-8);

  FitResult fit = model_discrepancy(model, target, ds_rf_spec(d), quick_opt(),
                                    {warm});
  CHECK(fit.value < 1e-12);
}

TEST_CASE("solved-system fits match an affine least-squares oracle") {
  DsDesign d = make_ds_design();
  BoxDomain box = ds_rf_default_box();
  ModelClass model = ds_rf_model(d, box);
  DiscrepancySpec spec = ds_rf_spec(d);

  Eigen::MatrixXd A(d.n_x(), 3);
  A.col(0).setOnes();
  A.col(1) = d.x.col(0);
  A.col(2) = d.x.col(1);

  auto draws = ds_rf_eligible_draws(d, ds_kernel_defaults(), 4, 501);
  for (const Eigen::VectorXd& g : draws) {
    const double oracle = ls_oracle(A, g.head(25), d.x_weight).second +
                          ls_oracle(A, g.tail(25), d.x_weight).second;
    FitResult fit = model_discrepancy(model, g, spec, quick_opt(),
                                      {ds_rf_warm_start(d, box, g)});
    CHECK(fit.value == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("solved-system restrictiveness is interior with a variance baseline") {
  DsDesign d = make_ds_design();
  OptimSettings opt = quick_opt(4);
  RestrictivenessResult res =
      ds_rf_restrictiveness(d, ds_kernel_defaults(), 8, 777, opt);
  CHECK(res.M == 8);
  CHECK(res.r_hat > 0.0);
  CHECK(res.r_hat < 1.0);
  CHECK(res.se > 0.0);
  CHECK(std::isfinite(res.se));

  // the baseline per-draw error is the summed weighted variance
  auto draws = ds_rf_eligible_draws(d, ds_kernel_defaults(), 8, 777);
  for (int m = 0; m < 8; ++m) {
    double var_sum = 0.0;
    for (int cpt = 0; cpt < 2; ++cpt) {
      Eigen::VectorXd f = cpt == 0 ? draws[m].head(25) : draws[m].tail(25);
      const double mean = d.x_weight.dot(f);
      var_sum += d.x_weight.dot((f.array() - mean).square().matrix());
    }
    CHECK(res.per_draw_base_d(m) == doctest::Approx(var_sum).epsilon(1e-10));
  }

  // same seed, same table
  RestrictivenessResult res2 =
      ds_rf_restrictiveness(d, ds_kernel_defaults(), 8, 777, opt);
  CHECK(res.r_hat == res2.r_hat);
  CHECK(res.se == res2.se);
}

TEST_CASE("constant rules break the variance baseline") {
  DsDesign d = make_ds_design();
  std::vector<Eigen::VectorXd> draws = {Eigen::VectorXd::Constant(50, 0.7)};
  CHECK_THROWS_AS(
      restrictiveness_known(ds_rf_model(d, ds_rf_default_box()),
                            constant_rule_baseline(50, 2), draws,
                            ds_rf_spec(d), quick_opt(2)),
      std::domain_error);
}

TEST_CASE("the shifter-observed demand class matches reduced targets") {
  DsDesign d = make_ds_design();
  BoxDomain box = demand_only_default_box();
  ModelClass model = demand_only_model(d, box);
  DiscrepancySpec spec = demand_only_spec(d);

  // a rule of price and the first shifter reduces without error
  Eigen::VectorXd theta_star = vec3(2.0, 3.0, -1.0);
  Eigen::VectorXd atoms =
      theta_star(0) + (theta_star(1) * d.p + theta_star(2) * atom_x1(d)).array();
  Eigen::VectorXd target = d.conditional_mean(atoms);
  FitResult fit =
      model_discrepancy(model, target, spec, quick_opt(), {theta_star});
  CHECK(fit.value < 1e-12);

  // least-squares warm start lands on the generating coefficients
  Eigen::MatrixXd A(d.n_x(), 3);
  A.col(0).setOnes();
  A.col(1) = d.pbar();
  A.col(2) = d.x.col(0);
  Eigen::VectorXd coef = ls_oracle(A, target, d.x_weight).first;
  CHECK((coef - theta_star).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("reducing to conditional means equals the joint minimization") {
  // small design with four shifter points and three price atoms each
  const int nx = 4, nk = 3, na = nx * nk;
  Eigen::VectorXd x1(nx);
  x1 << -1.0, -0.2, 0.5, 1.0;
  Eigen::VectorXd wx(nx);
  wx << 0.1, 0.2, 0.3, 0.4;
  Eigen::VectorXd wk(nk);
  wk << 0.25, 0.5, 0.25;
  const double shock[3] = {-1.0, 0.0, 1.0};

  Eigen::VectorXd p(na), w(na), pbar(nx);
  std::vector<int> ax(na);
  int a = 0;
  for (int j = 0; j < nx; ++j) {
    pbar(j) = 1.0 + 0.8 * x1(j);
    for (int k = 0; k < nk; ++k, ++a) {
      p(a) = pbar(j) + shock[k];
      w(a) = wx(j) * wk(k);
      ax[a] = j;
    }
  }

  // an arbitrary fixed rule on the atoms
  Eigen::VectorXd g(na);
  for (int i = 0; i < na; ++i)
    g(i) = std::sin(3.0 * p(i)) + x1(ax[i]) * x1(ax[i]) + 0.05 * i;

  // joint problem: affine-in-(price, shifter) rule plus a free
  // adjustment with zero conditional mean at every shifter point
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(na, 3 + 2 * nx);
  A.col(0).setOnes();
  A.col(1) = p;
  for (int i = 0; i < na; ++i) A(i, 2) = x1(ax[i]);
  for (int j = 0; j < nx; ++j) {
    // basis of {u : wk.dot(u) = 0} on the three atoms of point j
    A(j * nk + 0, 3 + 2 * j) = 1.0;
    A(j * nk + 2, 3 + 2 * j) = -wk(0) / wk(2);
    A(j * nk + 1, 3 + 2 * j + 1) = 1.0;
    A(j * nk + 2, 3 + 2 * j + 1) = -wk(1) / wk(2);
  }
  auto joint = ls_oracle(A, g, w);

  // reduced problem: fit the conditional means only
  Eigen::VectorXd gbar = Eigen::VectorXd::Zero(nx);
  for (int i = 0; i < na; ++i) gbar(ax[i]) += wk(i % nk) * g(i);
  Eigen::MatrixXd Ar(nx, 3);
  Ar.col(0).setOnes();
  Ar.col(1) = pbar;
  Ar.col(2) = x1;
  auto reduced = ls_oracle(Ar, gbar, wx);

  CHECK(joint.second == doctest::Approx(reduced.second).epsilon(1e-6));
  CHECK((joint.first.head(3) - reduced.first).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("held-fixed-price demand fits match a normal-equations oracle") {
  DsDesign d = make_ds_design();
  BoxDomain box = demand_only_default_box();
  ModelClass model = ds_sf_model(d, box);
  DiscrepancySpec spec = ds_sf_spec(d);

  // realizable rule
  Eigen::VectorXd theta_star = vec3(2.0, 3.0, -1.0);
  Eigen::VectorXd target =
      theta_star(0) + (theta_star(1) * d.p + theta_star(2) * atom_x1(d)).array();
  FitResult fit =
      model_discrepancy(model, target, spec, quick_opt(), {theta_star});
  CHECK(fit.value < 1e-12);

  // curved rule: engine value equals the projection residual
  Eigen::VectorXd curved = d.p.array().square();
  Eigen::MatrixXd A(d.n_atoms(), 3);
  A.col(0).setOnes();
  A.col(1) = d.p;
  A.col(2) = atom_x1(d);
  auto oracle = ls_oracle(A, curved, d.joint_weight);
  FitResult cfit = model_discrepancy(model, curved, spec, quick_opt(),
                                     {box.clamp(oracle.first)});
  CHECK(cfit.value == doctest::Approx(oracle.second).epsilon(1e-10));
}

TEST_CASE("the two demand views disagree on curved rules") {
  DsDesign d = make_ds_design();
  Eigen::VectorXd curved = d.p.array().square();

  // view through the shifters: only the conditional mean survives
  Eigen::MatrixXd Ar(d.n_x(), 3);
  Ar.col(0).setOnes();
  Ar.col(1) = d.pbar();
  Ar.col(2) = d.x.col(0);
  auto mean_fit = model_discrepancy(
      demand_only_model(d, demand_only_default_box()),
      d.conditional_mean(curved), demand_only_spec(d), quick_opt(),
      {ls_oracle(Ar, d.conditional_mean(curved), d.x_weight).first});

  // view at held-fixed prices: the full curvature must be matched
  Eigen::MatrixXd A(d.n_atoms(), 3);
  A.col(0).setOnes();
  A.col(1) = d.p;
  A.col(2) = atom_x1(d);
  auto fixed_fit = model_discrepancy(
      ds_sf_model(d, demand_only_default_box()), curved, ds_sf_spec(d),
      quick_opt(), {ls_oracle(A, curved, d.joint_weight).first});

  CHECK(std::abs(fixed_fit.value - mean_fit.value) > 1e-6);
  // holding price fixed exposes strictly more structure here
  CHECK(fixed_fit.value > mean_fit.value);
}

TEST_CASE("entry shock-space regions form a partition") {
  Rng rng(31);
  for (int rep = 0; rep < 1000; ++rep) {
    EntryParams p;
    p.alpha1 = 4.0 * rng.uniform() - 2.0;
    p.alpha2 = 4.0 * rng.uniform() - 2.0;
    p.beta1 = -3.0 * rng.uniform();
    p.beta2 = -3.0 * rng.uniform();
    p.gamma1 = 4.0 * rng.uniform() - 2.0;
    p.gamma2 = 4.0 * rng.uniform() - 2.0;
    p.error = rep % 2 == 0 ? EntryError::independent_logistic
                           : EntryError::independent_normal;
    Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    EntryRegions r = entry_regions(p, x);
    CHECK(r.p00 >= 0.0);
    CHECK(r.p11 >= 0.0);
    CHECK(r.p10_unique >= 0.0);
    CHECK(r.p01_unique >= 0.0);
    CHECK(r.p_mult >= 0.0);
    CHECK(region_sum(r) == doctest::Approx(1.0).epsilon(1e-12));
  }

  EntryParams bad;
  bad.beta1 = 0.2;
  CHECK_THROWS_AS(entry_regions(bad, {0.0, 0.0}), std::domain_error);
}

TEST_CASE("entry without interaction factors into independent choices") {
  Rng rng(32);
  for (int rep = 0; rep < 200; ++rep) {
    EntryParams p;
    p.alpha1 = 4.0 * rng.uniform() - 2.0;
    p.alpha2 = 4.0 * rng.uniform() - 2.0;
    p.gamma1 = 4.0 * rng.uniform() - 2.0;
    p.gamma2 = 4.0 * rng.uniform() - 2.0;
    p.error = rep % 2 == 0 ? EntryError::independent_logistic
                           : EntryError::independent_normal;
    Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    const double z1 = p.alpha1 + p.gamma1 * x(0);
    const double z2 = p.alpha2 + p.gamma2 * x(1);
    const double f1 = p.error == EntryError::independent_logistic
                          ? 1.0 / (1.0 + std::exp(-z1))
                          : 0.5 * std::erfc(-z1 / std::sqrt(2.0));
    const double f2 = p.error == EntryError::independent_logistic
                          ? 1.0 / (1.0 + std::exp(-z2))
                          : 0.5 * std::erfc(-z2 / std::sqrt(2.0));
    EntryRegions r = entry_regions(p, x);
    CHECK(r.p_mult == 0.0);
    CHECK(r.p00 == doctest::Approx((1 - f1) * (1 - f2)).epsilon(1e-14));
    CHECK(r.p11 == doctest::Approx(f1 * f2).epsilon(1e-14));
    CHECK(r.p10_unique == doctest::Approx(f1 * (1 - f2)).epsilon(1e-14));
    CHECK(r.p01_unique == doctest::Approx((1 - f1) * f2).epsilon(1e-14));
  }
}

TEST_CASE("entry regions match a simulation oracle") {
  EntryParams p;
  p.alpha1 = 0.4;
  p.alpha2 = 0.4;
  p.beta1 = -1.0;
  p.beta2 = -1.0;
  p.gamma1 = 0.5;
  p.gamma2 = 0.5;
  Eigen::Vector2d x(0.6, 0.6);
  EntryRegions r = entry_regions(p, x);

  // symmetric primitives make the two unique-entry regions equal
  CHECK(r.p10_unique == doctest::Approx(r.p01_unique).epsilon(1e-14));

  const double pi1_out = p.alpha1 + p.gamma1 * x(0);
  const double pi2_out = p.alpha2 + p.gamma2 * x(1);
  const int N = 10000000;
  Rng rng(99);
  long c00 = 0, c11 = 0, c10 = 0, c01 = 0, cm = 0;
  for (int i = 0; i < N; ++i) {
    const double u1 = rng.uniform(), u2 = rng.uniform();
    const double e1 = std::log(u1 / (1.0 - u1));
    const double e2 = std::log(u2 / (1.0 - u2));
    const bool in1_alone = e1 <= pi1_out;           // enters if rival out
    const bool in1_joint = e1 <= pi1_out + p.beta1; // enters even if rival in
    const bool in2_alone = e2 <= pi2_out;
    const bool in2_joint = e2 <= pi2_out + p.beta2;
    if (!in1_alone && !in2_alone) {
      ++c00;
    } else if (in1_joint && in2_joint) {
      ++c11;
    } else if (in1_alone && !in1_joint && in2_alone && !in2_joint) {
      ++cm;  // both lone-entry profiles are self-enforcing
    } else if (in1_joint || (in1_alone && !in2_alone)) {
      ++c10;
    } else {
      ++c01;
    }
  }
  auto check_close = [&](double prob, long count) {
    const double mc = static_cast<double>(count) / N;
    const double se = std::sqrt(std::max(prob * (1.0 - prob), 1e-12) / N);
    CHECK(std::abs(prob - mc) < 3.0 * se + 1e-9);
  };
  check_close(r.p00, c00);
  check_close(r.p11, c11);
  check_close(r.p_mult, cm);
  check_close(r.p10_unique, c10);
  check_close(r.p01_unique, c01);
}

TEST_CASE("splitting the multiplicity mass yields coherent probabilities") {
  Rng rng(33);
  for (int rep = 0; rep < 200; ++rep) {
    EntryParams p;
    p.alpha1 = 2.0 * rng.uniform() - 1.0;
    p.alpha2 = 2.0 * rng.uniform() - 1.0;
    p.beta1 = -2.0 * rng.uniform();
    p.beta2 = -2.0 * rng.uniform();
    p.gamma1 = 2.0 * rng.uniform() - 1.0;
    p.gamma2 = 2.0 * rng.uniform() - 1.0;
    Eigen::Vector2d x(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
    EntryRegions r = entry_regions(p, x);
    CcpVector lo = entry_ccp(p, x, 0.0);
    CcpVector hi = entry_ccp(p, x, 1.0);
    CcpVector mid = entry_ccp(p, x, 0.5);
    CHECK(lo.p00 + lo.p01 + lo.p10 + lo.p11 ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lo.p10 == doctest::Approx(r.p10_unique).epsilon(1e-14));
    CHECK(hi.p10 == doctest::Approx(r.p10_unique + r.p_mult).epsilon(1e-14));
    CHECK(hi.p01 == doctest::Approx(r.p01_unique).epsilon(1e-14));
    CHECK(mid.p10 == doctest::Approx(0.5 * (lo.p10 + hi.p10)).epsilon(1e-13));
    CHECK(mid.p01 == doctest::Approx(0.5 * (lo.p01 + hi.p01)).epsilon(1e-13));
  }
}

TEST_CASE("the selection weight is profiled out exactly") {
  EntryDesign d = make_entry_design();
  DiscrepancySpec spec = entry_spec(d);
  Eigen::VectorXd theta = vec6(0.3, -0.2, -1.1, -0.7, 0.8, 0.6);
  EntryParams p = entry_params6(theta);

  // a singleton box pins the parameters so only the selection varies
  BoxDomain point = BoxDomain::bounded(theta, theta);
  point.hints.assign(6, Transform::linear);

  // targets whose optimal split lies exactly on the scan grid
  const double t_grid[4] = {0.0, 0.37, 0.82, 1.0};
  Eigen::VectorXd g(4 * d.n_x());
  for (int j = 0; j < d.n_x(); ++j) {
    EntryRegions r = entry_regions(p, d.x.row(j).transpose());
    const double t = t_grid[j % 4];
    g(4 * j + 0) = r.p00 + 0.01;
    g(4 * j + 1) = r.p01_unique + (1.0 - t) * r.p_mult;
    g(4 * j + 2) = r.p10_unique + t * r.p_mult;
    g(4 * j + 3) = r.p11 - 0.01;
  }

  EntryFit fit = entry_discrepancy(d, point, EntryError::independent_logistic,
                                   g, quick_opt(2));

  // independent oracle: scan 101 selection weights at every point
  double best_total = 0.0;
  for (int j = 0; j < d.n_x(); ++j) {
    EntryRegions r = entry_regions(p, d.x.row(j).transpose());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100; ++k) {
      const double q = 0.01 * k;
      const double p10 = r.p10_unique + q * r.p_mult;
      const double p01 = r.p01_unique + (1.0 - q) * r.p_mult;
      const double v = std::pow(r.p00 - g(4 * j), 2) +
                       std::pow(p01 - g(4 * j + 1), 2) +
                       std::pow(p10 - g(4 * j + 2), 2) +
                       std::pow(r.p11 - g(4 * j + 3), 2);
      best = std::min(best, v);
    }
    best_total += d.weight(j) * best;
    CHECK(fit.q(j) == doctest::Approx(t_grid[j % 4]).epsilon(1e-10));
  }
  CHECK(fit.value == doctest::Approx(best_total).epsilon(1e-10));

  // on arbitrary rules the closed form can only improve on the scan
  EntryCcpSampler sampler(d, entry_kernel_defaults());
  Eigen::VectorXd g2 = sampler.draw(7);
  EntryFit fit2 = entry_discrepancy(d, point, EntryError::independent_logistic,
                                    g2, quick_opt(2));
  double scan_total = 0.0;
  for (int j = 0; j < d.n_x(); ++j) {
    EntryRegions r = entry_regions(p, d.x.row(j).transpose());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100; ++k) {
      const double q = 0.01 * k;
      const double p10 = r.p10_unique + q * r.p_mult;
      const double p01 = r.p01_unique + (1.0 - q) * r.p_mult;
      const double v = std::pow(r.p00 - g2(4 * j), 2) +
                       std::pow(p01 - g2(4 * j + 1), 2) +
                       std::pow(p10 - g2(4 * j + 2), 2) +
                       std::pow(r.p11 - g2(4 * j + 3), 2);
      best = std::min(best, v);
    }
    scan_total += d.weight(j) * best;
  }
  CHECK(fit2.value <= scan_total + 1e-15);
  CHECK(spec.rows() == 4 * d.n_x());
}

TEST_CASE("realizable entry rules are matched") {
  EntryDesign d = make_entry_design();
  BoxDomain box = entry_default_box();
  Eigen::VectorXd theta_star = vec6(0.2, -0.1, -0.8, -0.6, 0.7, 0.5);
  EntryParams p = entry_params6(theta_star);
  Eigen::VectorXd g = entry_ccp_stack(d, p, 0.3);

  EntryFit fit = entry_discrepancy(d, box, EntryError::independent_logistic, g,
                                   quick_opt(4), {theta_star});
  CHECK(fit.value < 1e-12);
  for (int j = 0; j < d.n_x(); ++j) {
    EntryRegions r = entry_regions(p, d.x.row(j).transpose());
    if (r.p_mult > 1e-8) CHECK(fit.q(j) == doctest::Approx(0.3).epsilon(1e-6));
  }

  // multistart alone also locates the generating structure
  EntryFit blind = entry_discrepancy(d, box, EntryError::independent_logistic,
                                     g, quick_opt(10));
  CHECK(blind.value < 1e-6);

  // the profiled selection beats both corner completions
  DiscrepancySpec spec = entry_spec(d);
  const double at0 = discrepancy(spec, entry_ccp_stack(d, p, 0.0), g);
  const double at1 = discrepancy(spec, entry_ccp_stack(d, p, 1.0), g);
  CHECK(fit.value < at0);
  CHECK(fit.value < at1);
}

TEST_CASE("stick-breaking rules are proper conditional choice probabilities") {
  EntryDesign d = make_entry_design();
  EntryCcpSampler sampler(d, entry_kernel_defaults());
  auto draws = entry_eligible_draws(sampler, 3, 4321);
  REQUIRE(draws.size() == 3);
  for (const Eigen::VectorXd& g : draws) {
    REQUIRE(g.size() == 4 * d.n_x());
    for (int i = 0; i < g.size(); ++i) {
      CHECK(g(i) > 0.0);
      CHECK(g(i) < 1.0);
    }
    for (int j = 0; j < d.n_x(); ++j) {
      CHECK(g.segment(4 * j, 4).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  auto again = entry_eligible_draws(sampler, 3, 4321);
  CHECK((draws[2] - again[2]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((draws[0] - draws[1]).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("model-generated entry rules give near-zero restrictiveness") {
  EntryDesign d = make_entry_design();
  BoxDomain box = entry_default_box();
  DiscrepancySpec spec = entry_spec(d);
  ModelClass baseline = uniform_ccp_baseline(d);

  Rng rng(55);
  std::vector<Eigen::VectorXd> draws;
  std::vector<Eigen::VectorXd> truths;
  for (int m = 0; m < 6; ++m) {
    Eigen::VectorXd t = vec6(2.0 * rng.uniform() - 1.0,
                             2.0 * rng.uniform() - 1.0, -1.5 * rng.uniform(),
                             -1.5 * rng.uniform(), 2.0 * rng.uniform() - 1.0,
                             2.0 * rng.uniform() - 1.0);
    truths.push_back(t);
    draws.push_back(entry_ccp_stack(d, entry_params6(t), rng.uniform()));
  }

  double num = 0.0, den = 0.0;
  for (int m = 0; m < 6; ++m) {
    EntryFit fit = entry_discrepancy(d, box, EntryError::independent_logistic,
                                     draws[m], quick_opt(2), {truths[m]});
    CHECK(fit.value < 1e-12);
    num += fit.value;
    auto base = baseline.exact_fit(draws[m], spec);
    REQUIRE(base.has_value());
    CHECK(base->value > 1e-4);
    den += base->value;
  }
  CHECK(num / den < 1e-10);

  // the engine path without hints still drives the ratio near zero
  RestrictivenessResult res = restrictiveness_known(
      entry_model(d, box, EntryError::independent_logistic, quick_opt(6)),
      baseline, draws, spec, quick_opt(6));
  CHECK(res.r_hat < 5e-3);
}

TEST_CASE("the entry model nests inside a wider interaction box") {
  EntryDesign d = make_entry_design();
  EntryCcpSampler sampler(d, entry_kernel_defaults());
  auto draws = entry_eligible_draws(sampler, 5, 88);

  BoxDomain narrow = BoxDomain::bounded(vec6(-4, -4, -2, -2, -4, -4),
                                        vec6(4, 4, 0, 0, 4, 4));
  narrow.hints.assign(6, Transform::linear);
  BoxDomain wide = BoxDomain::bounded(vec6(-6, -6, -4, -4, -6, -6),
                                      vec6(6, 6, 0, 0, 6, 6));
  wide.hints.assign(6, Transform::linear);

  for (const Eigen::VectorXd& g : draws) {
    EntryFit fn = entry_discrepancy(d, narrow,
                                    EntryError::independent_logistic, g,
                                    quick_opt(4));
    EntryFit fw = entry_discrepancy(d, wide, EntryError::independent_logistic,
                                    g, quick_opt(4), {fn.theta});
    CHECK(fw.value <= fn.value + 1e-12);
  }
}

TEST_CASE("entry restrictiveness is reproducible and interior") {
  EntryDesign d = make_entry_design();
  RestrictivenessResult res = entry_restrictiveness(
      d, entry_default_box(), EntryError::independent_logistic,
      entry_kernel_defaults(), 12, 91, quick_opt(4));
  CHECK(res.M == 12);
  CHECK(res.r_hat > 0.0);
  CHECK(res.r_hat < 1.0);
  CHECK(res.se > 0.0);
  CHECK(std::isfinite(res.se));

  // baseline distances: squared deviation from the uniform table
  EntryCcpSampler sampler(d, entry_kernel_defaults());
  auto draws = entry_eligible_draws(sampler, 12, 91);
  for (int m = 0; m < 12; ++m) {
    double ref = 0.0;
    for (int j = 0; j < d.n_x(); ++j)
      ref += d.weight(j) *
             (draws[m].segment(4 * j, 4).array() - 0.25).square().sum();
    CHECK(res.per_draw_base_d(m) == doctest::Approx(ref).epsilon(1e-10));
  }

  RestrictivenessResult res2 = entry_restrictiveness(
      d, entry_default_box(), EntryError::independent_logistic,
      entry_kernel_defaults(), 12, 91, quick_opt(4));
  CHECK(res.r_hat == res2.r_hat);
}

TEST_SUITE_END();
