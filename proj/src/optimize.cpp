#include "restr/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "restr/rng.hpp"

namespace restr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogitCap = 36.0;

double finite_or_inf(double v) { return std::isnan(v) ? kInf : v; }

double logit(double u) {
  u = std::clamp(u, 0.0, 1.0);
  if (u <= 0.0) return -kLogitCap;
  if (u >= 1.0) return kLogitCap;
  return std::clamp(std::log(u / (1.0 - u)), -kLogitCap, kLogitCap);
}

double sigmoid(double y) { return 1.0 / (1.0 + std::exp(-y)); }

}  // namespace

void BoxDomain::validate() const {
  if (upper.size() != lower.size())
    throw std::invalid_argument("BoxDomain: bound size mismatch");
  if (!hints.empty() && static_cast<int>(hints.size()) != dim())
    throw std::invalid_argument("BoxDomain: hint size mismatch");
  for (int k = 0; k < dim(); ++k)
    if (lower[k] > upper[k]) throw std::invalid_argument("BoxDomain: lower > upper");
}

Transform BoxDomain::effective_hint(int k) const {
  if (!hints.empty() && hints[k] != Transform::linear) return hints[k];
  bool lo = std::isfinite(lower[k]), hi = std::isfinite(upper[k]);
  if (!hints.empty()) {  // explicit linear
    return Transform::linear;
  }
  if (lo && hi) return Transform::logit;
  if (lo != hi) return Transform::log_scale;
  return Transform::linear;
}

Eigen::VectorXd BoxDomain::clamp(const Eigen::VectorXd& x) const {
  Eigen::VectorXd c = x;
  for (int k = 0; k < dim(); ++k)
    c[k] = std::clamp(c[k], lower[k], upper[k]);
  return c;
}

BoxDomain BoxDomain::bounded(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  BoxDomain b;
  b.lower = lo;
  b.upper = hi;
  b.validate();
  return b;
}

BoxDomain BoxDomain::unbounded(int d) {
  BoxDomain b;
  b.lower = Eigen::VectorXd::Constant(d, -kInf);
  b.upper = Eigen::VectorXd::Constant(d, kInf);
  return b;
}

namespace {

// per-coordinate bijection between the box interior and the real line
struct CoordMap {
  const BoxDomain& box;

  double to_internal(int k, double x) const {
    double lo = box.lower[k], hi = box.upper[k];
    switch (box.effective_hint(k)) {
      case Transform::logit:
        return logit((x - lo) / (hi - lo));
      case Transform::log_scale:
        if (std::isfinite(lo) && std::isfinite(hi)) {
          if (lo <= 0.0) return logit((x - lo) / (hi - lo));
          return logit((std::log(std::max(x, lo)) - std::log(lo)) /
                       (std::log(hi) - std::log(lo)));
        }
        if (std::isfinite(lo)) return std::log(std::max(x - lo, 1e-300));
        if (std::isfinite(hi)) return -std::log(std::max(hi - x, 1e-300));
        return x;
      case Transform::linear:
        return x;
    }
    return x;
  }

  double to_external(int k, double y) const {
    double lo = box.lower[k], hi = box.upper[k];
    switch (box.effective_hint(k)) {
      case Transform::logit:
        return lo + (hi - lo) * sigmoid(std::clamp(y, -kLogitCap, kLogitCap));
      case Transform::log_scale:
        if (std::isfinite(lo) && std::isfinite(hi)) {
          if (lo <= 0.0)
            return lo + (hi - lo) * sigmoid(std::clamp(y, -kLogitCap, kLogitCap));
          return std::exp(std::log(lo) +
                          sigmoid(std::clamp(y, -kLogitCap, kLogitCap)) *
                              (std::log(hi) - std::log(lo)));
        }
        if (std::isfinite(lo)) return lo + std::exp(std::min(y, 700.0));
        if (std::isfinite(hi)) return hi - std::exp(std::min(y, 700.0));
        return y;
      case Transform::linear:
        return std::isfinite(lo) || std::isfinite(hi)
                   ? std::clamp(y, lo, hi)
                   : y;
    }
    return y;
  }

  Eigen::VectorXd to_internal(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(box.dim());
    for (int k = 0; k < box.dim(); ++k) y[k] = to_internal(k, x[k]);
    return y;
  }

  Eigen::VectorXd to_external(const Eigen::VectorXd& y) const {
    Eigen::VectorXd x(box.dim());
    for (int k = 0; k < box.dim(); ++k) x[k] = to_external(k, y[k]);
    return x;
  }
};

struct NmOutcome {
  Eigen::VectorXd y;
  double value = kInf;
  long evals = 0;
  bool converged = false;
};

NmOutcome nelder_mead(const Objective& f, const CoordMap& map,
                      const Eigen::VectorXd& y0, double tol, int max_evals) {
  const int d = static_cast<int>(y0.size());
  long evals = 0;
  auto eval_y = [&](const Eigen::VectorXd& y) {
    ++evals;
    return finite_or_inf(f(map.to_external(y)));
  };

  std::vector<Eigen::VectorXd> verts(d + 1, y0);
  std::vector<double> fv(d + 1);
  for (int k = 0; k < d; ++k) {
    double step = 0.35 * (1.0 + std::abs(y0[k]));
    verts[k + 1][k] += step;
  }
  for (int i = 0; i <= d; ++i) fv[i] = eval_y(verts[i]);

  auto order = [&] {
    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> v2(d + 1);
    std::vector<double> f2(d + 1);
    for (int i = 0; i <= d; ++i) {
      v2[i] = verts[idx[i]];
      f2[i] = fv[idx[i]];
    }
    verts.swap(v2);
    fv.swap(f2);
  };

  NmOutcome out;
  while (evals < max_evals) {
    order();
    double diam = 0.0;
    for (int i = 1; i <= d; ++i)
      diam = std::max(diam, (verts[i] - verts[0]).lpNorm<Eigen::Infinity>());
    double spread = fv[d] - fv[0];
    if (diam <= tol && spread <= tol * (1.0 + std::abs(fv[0]))) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += verts[i];
    centroid /= d;

    Eigen::VectorXd xr = centroid + (centroid - verts[d]);
    double fr = eval_y(xr);
    if (fr < fv[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - verts[d]);
      double fe = eval_y(xe);
      if (fe < fr) {
        verts[d] = xe;
        fv[d] = fe;
      } else {
        verts[d] = xr;
        fv[d] = fr;
      }
    } else if (fr < fv[d - 1]) {
      verts[d] = xr;
      fv[d] = fr;
    } else {
      bool outside = fr < fv[d];
      Eigen::VectorXd xc =
          outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                  : Eigen::VectorXd(centroid - 0.5 * (centroid - verts[d]));
      double fc = eval_y(xc);
      if (fc < (outside ? fr : fv[d])) {
        verts[d] = xc;
        fv[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          verts[i] = verts[0] + 0.5 * (verts[i] - verts[0]);
          fv[i] = eval_y(verts[i]);
          if (evals >= max_evals) break;
        }
      }
    }
  }
  order();
  out.y = verts[0];
  out.value = fv[0];
  out.evals = evals;
  return out;
}

// greedy coordinate pattern search in raw coordinates, projected onto
// the box; cleans up boundary optima the smooth transforms approach
// only asymptotically
void polish(const Objective& f, const BoxDomain& box, Eigen::VectorXd& x,
            double& fx, long& evals, int budget) {
  const int d = box.dim();
  if (budget <= 0 || d == 0) return;
  Eigen::VectorXd step(d);
  for (int k = 0; k < d; ++k) {
    double lo = box.lower[k], hi = box.upper[k];
    step[k] = (std::isfinite(lo) && std::isfinite(hi)) ? 0.25 * (hi - lo)
                                                       : 0.5 * (1.0 + std::abs(x[k]));
  }
  int used = 0;
  while (used < budget && step.maxCoeff() > 1e-12) {
    bool improved = false;
    for (int k = 0; k < d && used < budget; ++k) {
      for (double sgn : {+1.0, -1.0}) {
        Eigen::VectorXd cand = x;
        cand[k] = std::clamp(cand[k] + sgn * step[k], box.lower[k], box.upper[k]);
        if (cand[k] == x[k]) continue;
        double fc = finite_or_inf(f(cand));
        ++evals;
        ++used;
        if (fc < fx) {
          x = cand;
          fx = fc;
          improved = true;
          break;
        }
        if (used >= budget) break;
      }
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace

OptimResult minimize(const Objective& objective, const BoxDomain& domain,
                     const OptimSettings& settings,
                     const std::vector<Eigen::VectorXd>& extra_starts) {
  domain.validate();
  const int d = domain.dim();

  if (d == 0) {
    OptimResult r;
    r.argmin = Eigen::VectorXd(0);
    r.value = finite_or_inf(objective(r.argmin));
    r.n_evals = 1;
    r.converged = true;
    r.start_index = 0;
    return r;
  }

  CoordMap map{domain};
  Rng rng(settings.seed);

  // Latin hypercube over the search coordinates
  std::vector<Eigen::VectorXd> starts;
  int S = std::max(settings.n_starts, 1);
  std::vector<std::vector<int>> perms(d, std::vector<int>(S));
  for (int k = 0; k < d; ++k) {
    auto& p = perms[k];
    std::iota(p.begin(), p.end(), 0);
    for (int i = S - 1; i > 0; --i)
      std::swap(p[i], p[rng.uniform_index(i + 1)]);
  }
  for (int s = 0; s < S; ++s) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) {
      double u = (perms[k][s] + rng.uniform()) / S;
      double lo = domain.lower[k], hi = domain.upper[k];
      if (std::isfinite(lo) && std::isfinite(hi)) {
        x[k] = map.to_external(k, logit(u));
      } else {
        // strata over the internal coordinate
        x[k] = map.to_external(k, -5.0 + 10.0 * u);
      }
    }
    starts.push_back(x);
  }
  for (const auto& w : extra_starts) {
    if (w.size() != d)
      throw std::invalid_argument("minimize: extra start dimension mismatch");
    starts.push_back(domain.clamp(w));
  }

  OptimResult best;
  best.value = kInf;
  long total_evals = 0;
  bool any_finite = false;

  for (int s = 0; s < static_cast<int>(starts.size()); ++s) {
    int label = s < S ? s : -1;
    const Eigen::VectorXd& x0 = starts[s];
    double f0 = finite_or_inf(objective(x0));
    ++total_evals;
    if (std::isfinite(f0)) any_finite = true;
    if (f0 < best.value) {
      best.value = f0;
      best.argmin = x0;
      best.converged = false;
      best.start_index = label;
    }
    if (!std::isfinite(f0) && label >= 0) continue;

    NmOutcome nm = nelder_mead(objective, map, map.to_internal(x0),
                               settings.tol, settings.max_evals);
    total_evals += nm.evals;
    if (std::isfinite(nm.value)) any_finite = true;
    if (nm.value < best.value) {
      best.value = nm.value;
      best.argmin = map.to_external(nm.y);
      best.converged = nm.converged;
      best.start_index = label;
    }
  }

  if (!any_finite)
    throw std::runtime_error("minimize: objective not finite at any start");

  best.argmin = domain.clamp(best.argmin);
  best.value = finite_or_inf(objective(best.argmin));
  ++total_evals;
  polish(objective, domain, best.argmin, best.value, total_evals,
         settings.polish_evals_per_dim * d);
  best.n_evals = total_evals;
  return best;
}

}  // namespace restr
