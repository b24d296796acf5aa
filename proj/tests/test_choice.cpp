#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "restr/choice.hpp"
#include "restr/engine.hpp"
#include "restr/markets.hpp"

using namespace restr;

TEST_SUITE_BEGIN("choice");

namespace {

Market toy_market(std::initializer_list<double> prices,
                  std::initializer_list<double> mushy) {
  Market m;
  m.id = 1;
  m.price.resize(prices.size());
  int i = 0;
  for (double p : prices) m.price[i++] = p;
  m.mushy.resize(mushy.size());
  i = 0;
  for (double c : mushy) m.mushy[i++] = c;
  return m;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

// dense nested-logit evaluation straight from the definition, safe for
// small utilities only
Eigen::VectorXd nl_dense(const Eigen::VectorXd& u, double rho,
                         const NestMap& nests) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(nests.n_nests);
  for (int j = 0; j < u.size(); ++j)
    sums[nests.nest_of[j]] += std::exp(u[j] / (1.0 - rho));
  double denom = 1.0;
  for (int g = 0; g < nests.n_nests; ++g)
    if (sums[g] > 0.0) denom += std::pow(sums[g], 1.0 - rho);
  Eigen::VectorXd p(u.size());
  for (int j = 0; j < u.size(); ++j) {
    int g = nests.nest_of[j];
    p[j] = std::exp(u[j] / (1.0 - rho)) * std::pow(sums[g], -rho) / denom;
  }
  return p;
}

ChoiceDesign small_design(int J = 5, int n_markets = 4, std::uint64_t seed = 3) {
  return make_choice_design(generate_synthetic_markets(J, n_markets, false,
                                                       seed));
}

}  // namespace

TEST_CASE("logit shares: zero utilities split evenly with the outside good") {
  Market m = toy_market({1.0, 2.0, 3.0}, {0, 1, 0});
  Eigen::VectorXd p = mnl_shares(m, vec3(0, 0, 0));
  for (int j = 0; j < 3; ++j) CHECK(p[j] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("logit shares: single product at zero utility gets one half") {
  Market m = toy_market({1.0}, {0});
  // price coefficient 1, constant −1 cancels the unit price
  Eigen::VectorXd p = mnl_shares(m, vec3(1.0, 0.0, -1.0));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("logit shares: pinned two-product utilities") {
  Market m = toy_market({1.0, 2.0}, {0, 0});
  Eigen::VectorXd p = mnl_shares(m, vec3(1.0, 0.0, 0.0));  // utilities 1, 2
  double e1 = std::exp(1.0), e2 = std::exp(2.0);
  CHECK(p[0] == doctest::Approx(e1 / (1 + e1 + e2)).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(e2 / (1 + e1 + e2)).epsilon(1e-14));
  CHECK(p[0] == doctest::Approx(0.2447).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.6652).epsilon(1e-3));
}

TEST_CASE("logit shares stay finite under huge utilities") {
  Market m = toy_market({1.0, 2.0}, {0, 0});
  Eigen::VectorXd p = mnl_shares(m, vec3(1000.0, 0.0, 0.0));
  CHECK(p.allFinite());
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.sum() <= 1.0 + 1e-12);
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("non-finite utilities are rejected") {
  Market m = toy_market({1.0, 2.0}, {0, 0});
  double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(mnl_shares(m, vec3(inf, 0, 0)), std::invalid_argument);
  NestMap nests = nests_by_category(m);
  CHECK_THROWS_AS(nl_shares(m, vec3(inf, 0, 0), 0.5, nests),
                  std::invalid_argument);
}

TEST_CASE("nested shares collapse to logit at rho zero, exactly") {
  Market m = toy_market({1.0, 2.5, 3.0, 4.2}, {0, 1, 0, 1});
  Eigen::VectorXd beta = vec3(-0.7, 0.4, 0.2);
  Eigen::VectorXd a = nl_shares(m, beta, 0.0, nests_by_category(m));
  Eigen::VectorXd b = mnl_shares(m, beta);
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("single nest at zero utilities matches the hand formula") {
  Market m = toy_market({1.0, 2.0}, {0, 0});
  NestMap one;
  one.nest_of = {0, 0};
  one.n_nests = 1;
  Eigen::VectorXd p = nl_shares(m, vec3(0, 0, 0), 0.5, one);
  // within-nest 1/2 each; nest probability √2/(1+√2)
  double expect = 1.0 / (2.0 + std::sqrt(2.0));
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("singleton nests make the within-nest correlation vacuous") {
  Market m = toy_market({1.0, 2.0, 3.0}, {0, 1, 0});
  NestMap singletons;
  singletons.nest_of = {0, 1, 2};
  singletons.n_nests = 3;
  Eigen::VectorXd beta = vec3(0.6, -0.3, 0.1);
  Eigen::VectorXd a = nl_shares(m, beta, 0.97, singletons);
  Eigen::VectorXd b = mnl_shares(m, beta);
  for (int j = 0; j < 3; ++j)
    CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
}

TEST_CASE("nested shares match a dense evaluation of the definition") {
  Market m = toy_market({1.0, 1.5, 2.0, 3.0, 4.0}, {0, 1, 1, 0, 1});
  NestMap nests = nests_by_category(m);
  Eigen::VectorXd beta = vec3(-0.6, 0.8, 0.5);
  for (double rho : {0.1, 0.3, 0.7, 0.95}) {
    Eigen::VectorXd a = nl_shares(m, beta, rho, nests);
    Eigen::VectorXd b = nl_dense(m.x() * beta, rho, nests);
    for (int j = 0; j < 5; ++j)
      CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
    CHECK(a.minCoeff() > 0.0);
    CHECK(a.sum() < 1.0);
  }
}

TEST_CASE("mixed shares with zero sigma equal logit shares exactly") {
  Market m = toy_market({1.0, 2.0, 3.0}, {0, 1, 0});
  Eigen::VectorXd beta = vec3(-0.5, 0.3, 0.4);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd logit = mnl_shares(m, beta);
  for (int R : {1, 777}) {
    Eigen::VectorXd p = mxl_shares(m, beta, z, R, 42);
    CHECK((p.array() == logit.array()).all());
  }
}

TEST_CASE("mixed shares average the logistic over the mixing draws") {
  Market m = toy_market({1.0}, {0});
  // utility 1 + 10·ν on a single inside product
  Eigen::VectorXd beta = vec3(1.0, 0.0, 0.0);
  Eigen::VectorXd sigma(3);
  sigma << 10.0, 0.0, 0.0;
  Eigen::VectorXd p = mxl_shares(m, beta, sigma, 2000, 99);

  std::mt19937 gen(12345);
  std::normal_distribution<double> nd;
  double acc = 0.0;
  const int n_oracle = 1000000;
  for (int i = 0; i < n_oracle; ++i)
    acc += 1.0 / (1.0 + std::exp(-(1.0 + 10.0 * nd(gen))));
  double oracle = acc / n_oracle;
  // 3 × the R=2000 Monte-Carlo se (the oracle's own error is 45× smaller)
  double tol = 3.0 * 0.5 / std::sqrt(2000.0);
  CHECK(std::abs(p[0] - oracle) < tol);
}

TEST_CASE("mixed shares share common random numbers by seed") {
  Market m = toy_market({1.0, 2.0}, {0, 1});
  Eigen::VectorXd beta = vec3(-0.4, 0.6, 0.0);
  Eigen::VectorXd sigma(3);
  sigma << 1.0, 2.0, 0.5;
  Eigen::VectorXd a = mxl_shares(m, beta, sigma, 100, 7);
  Eigen::VectorXd b = mxl_shares(m, beta, sigma, 100, 7);
  CHECK((a.array() == b.array()).all());
  Eigen::VectorXd c = mxl_shares(m, beta, sigma, 100, 8);
  CHECK_FALSE((a.array() == c.array()).all());
}

TEST_CASE("forced-zero mixtures give uniform shares") {
  ChoiceDesign d = small_design();
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 60);
  Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(d.N());
  Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);

  NpTestHooks both;
  both.f_stacked = &zero_f;
  both.individual_scale = 0.0;
  Eigen::VectorXd p = sampler.np_both(5, &both);
  for (int r = 0; r < d.N(); ++r)
    CHECK(p[r] == doctest::Approx(1.0 / 6.0).epsilon(1e-13));

  NpTestHooks mean;
  mean.f_stacked = &zero_f;
  mean.sigma = &zero3;
  p = sampler.np_mean(5, &mean);
  for (int r = 0; r < d.N(); ++r)
    CHECK(p[r] == doctest::Approx(1.0 / 6.0).epsilon(1e-13));

  NpTestHooks ind;
  ind.beta = &zero3;
  ind.individual_scale = 0.0;
  p = sampler.np_individual(5, &ind);
  for (int r = 0; r < d.N(); ++r)
    CHECK(p[r] == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("degenerate individual component collapses to logit at the "
          "forced coefficients") {
  ChoiceDesign d = small_design();
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 40);
  Eigen::VectorXd beta = vec3(-0.9, 0.5, 0.2);
  NpTestHooks hooks;
  hooks.beta = &beta;
  hooks.individual_scale = 0.0;
  Eigen::VectorXd p = sampler.np_individual(11, &hooks);
  for (int m = 0; m < d.n_markets(); ++m) {
    Eigen::VectorXd expect = mnl_shares(d.markets[m], beta);
    Eigen::VectorXd got = p.segment(d.offset[m], d.markets[m].J());
    CHECK((got - expect).lpNorm<Eigen::Infinity>() < 1e-13);
  }
}

TEST_CASE("pseudo-true rules are valid share systems") {
  ChoiceDesign d = small_design();
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 80);
  for (EligibleKind k : {EligibleKind::np_both, EligibleKind::np_mean,
                         EligibleKind::np_individual}) {
    Eigen::VectorXd p = sampler.draw(k, 17);
    CHECK(p.minCoeff() > 0.0);
    for (int m = 0; m < d.n_markets(); ++m) {
      double inside = p.segment(d.offset[m], d.markets[m].J()).sum();
      CHECK(inside < 1.0);
      CHECK(inside > 0.0);
    }
  }
}

TEST_CASE("common component is weakly decreasing in price within category") {
  ChoiceDesign d = small_design(8, 6, 9);
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 10);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Eigen::VectorXd f = sampler.common_component(seed);
    for (int m = 0; m < d.n_markets(); ++m) {
      const Market& mk = d.markets[m];
      for (int i = 0; i < mk.J(); ++i)
        for (int j = 0; j < mk.J(); ++j) {
          if (mk.mushy[i] != mk.mushy[j]) continue;
          if (mk.price[i] <= mk.price[j])
            CHECK(f[d.offset[m] + i] >= f[d.offset[m] + j] - 1e-9);
        }
      double mean =
          f.segment(d.offset[m], mk.J()).mean();
      CHECK(std::abs(mean) < 1e-9);  // centered per market
    }
  }
}

TEST_CASE("individual heterogeneity actually moves the mixture") {
  ChoiceDesign d = small_design();
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 50);
  Eigen::VectorXd with = sampler.np_both(13);
  NpTestHooks hooks;
  hooks.individual_scale = 0.0;
  Eigen::VectorXd without = sampler.np_both(13, &hooks);
  CHECK((with - without).lpNorm<Eigen::Infinity>() > 1e-4);
}

TEST_CASE("truncated coefficient prior accepts about half the draws") {
  Rng rng(2718);
  int first_try = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    long tries = 0;
    Eigen::VectorXd beta = sample_np_beta(rng, &tries);
    CHECK(beta[0] < 0.0);
    if (tries == 1) ++first_try;
  }
  double rate = static_cast<double>(first_try) / n;
  CHECK(rate > 0.47);
  CHECK(rate < 0.53);
}

TEST_CASE("logit inversion recovers generating coefficients exactly on "
          "logit data") {
  ChoiceDesign d = small_design(6, 5, 21);
  Eigen::VectorXd beta = vec3(-1.2, 0.8, 0.3);
  ModelClass mnl = choice_model(d, ChoiceFamily::mnl);
  Eigen::VectorXd shares = mnl.predict(beta);
  Eigen::VectorXd est = logit_inversion_beta(d, shares);
  CHECK((est - beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("choice discrepancy: identity, toy value, and size guard") {
  auto ms = generate_synthetic_markets(2, 2, false, 4);
  ChoiceDesign d = make_choice_design(ms);
  Eigen::VectorXd p(4), s(4);
  p << 0.2, 0.3, 0.25, 0.25;
  s << 0.1, 0.4, 0.25, 0.15;
  CHECK(choice_discrepancy(d, p, p) == 0.0);
  // market 1: 0.01 + 0.01; market 2: 0 + 0.01; mean = 0.015
  CHECK(choice_discrepancy(d, p, s) == doctest::Approx(0.015).epsilon(1e-12));
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(choice_discrepancy(d, bad, s), std::invalid_argument);
}

TEST_CASE("the discrepancy spec reproduces the share discrepancy") {
  ChoiceDesign d = small_design();
  DiscrepancySpec spec = choice_spec(d);
  Rng rng(5);
  Eigen::VectorXd p(d.N()), s(d.N());
  for (int r = 0; r < d.N(); ++r) {
    p[r] = rng.uniform(0.0, 0.1);
    s[r] = rng.uniform(0.0, 0.1);
  }
  CHECK(discrepancy(spec, p, s) ==
        doctest::Approx(choice_discrepancy(d, p, s)).epsilon(1e-14));
}

TEST_CASE("model classes agree with the per-market share maps") {
  ChoiceDesign d = small_design();
  Eigen::VectorXd beta = vec3(-0.8, 0.6, 0.1);

  ModelClass mnl = choice_model(d, ChoiceFamily::mnl);
  Eigen::VectorXd p = mnl.predict(beta);
  for (int m = 0; m < d.n_markets(); ++m)
    CHECK((p.segment(d.offset[m], d.markets[m].J()) -
           mnl_shares(d.markets[m], beta))
              .lpNorm<Eigen::Infinity>() == 0.0);

  ModelClass nl = choice_model(d, ChoiceFamily::nl);
  Eigen::VectorXd theta_nl(4);
  theta_nl << beta, 0.4;
  p = nl.predict(theta_nl);
  for (int m = 0; m < d.n_markets(); ++m)
    CHECK((p.segment(d.offset[m], d.markets[m].J()) -
           nl_shares(d.markets[m], beta, 0.4, d.nests[m]))
              .lpNorm<Eigen::Infinity>() == 0.0);

  ModelClass mxl = choice_model(d, ChoiceFamily::mxl, 50);
  Eigen::VectorXd theta_mxl(6);
  theta_mxl << beta, 0.0, 0.0, 0.0;
  CHECK(((mxl.predict(theta_mxl) - mnl.predict(beta)).array() == 0.0).all());
}

TEST_CASE("uniform baseline is a singleton returning 1/(J+1)") {
  ChoiceDesign d = small_design(4, 3, 6);
  ModelClass base = uniform_choice_baseline(d);
  CHECK(base.domain.dim() == 0);
  Eigen::VectorXd p = base.predict(Eigen::VectorXd(0));
  CHECK((p.array() == 0.2).all());
}

TEST_CASE("warm-started fits respect class nesting") {
  ChoiceDesign d = small_design(4, 6, 31);
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 100);
  Eigen::VectorXd g = sampler.np_both(2);
  DiscrepancySpec spec = choice_spec(d);
  OptimSettings opt;
  opt.n_starts = 4;
  opt.max_evals = 400;

  ModelClass mnl = choice_model(d, ChoiceFamily::mnl);
  FitResult fit_mnl = model_discrepancy(mnl, g, spec, opt,
                                        {logit_inversion_beta(d, g)});

  Eigen::VectorXd warm_nl(4), warm_mxl(6);
  warm_nl << fit_mnl.argmin, 0.0;
  warm_mxl << fit_mnl.argmin, 0.0, 0.0, 0.0;
  ModelClass nl = choice_model(d, ChoiceFamily::nl);
  ModelClass mxl = choice_model(d, ChoiceFamily::mxl, 60);
  FitResult fit_nl = model_discrepancy(nl, g, spec, opt, {warm_nl});
  FitResult fit_mxl = model_discrepancy(mxl, g, spec, opt, {warm_mxl});

  CHECK(fit_nl.value <= fit_mnl.value + 1e-9);
  CHECK(fit_mxl.value <= fit_mnl.value + 1e-9);
}

TEST_CASE("choice table: deterministic, nested, and sane at toy scale") {
  // 30 markets: the estimated-discrepancy inference path requires
  // enough observations for the plug-in variance
  ChoiceDesign d = small_design(3, 30, 41);
  EligibleChoiceSampler sampler(d, choice_kernel_defaults(), 40);
  OptimSettings opt;
  opt.n_starts = 2;
  opt.max_evals = 250;
  auto run = [&] {
    return choice_table(sampler, {EligibleKind::np_both}, 2, opt, 77, 1, 40,
                        60);
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == 3);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].result.r_hat == b[i].result.r_hat);
    CHECK(a[i].result.se == b[i].result.se);
    CHECK(a[i].result.r_hat >= 0.0);
    CHECK(std::isfinite(a[i].result.se));
  }
  CHECK(a[1].result.r_hat <= a[0].result.r_hat + 1e-9);  // nl vs mnl
  CHECK(a[2].result.r_hat <= a[0].result.r_hat + 1e-9);  // mxl vs mnl
}

TEST_SUITE_END();
