#include "restr/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace restr {

std::vector<std::pair<int, int>> comparable_pairs(const Eigen::MatrixXd& points,
                                                  const PartialOrderSpec& order) {
  if (order.dim() != points.cols())
    throw std::invalid_argument("comparable_pairs: order/point dimension mismatch");
  if (!order.has_ordered_coordinate())
    throw std::invalid_argument("comparable_pairs: no ordered coordinate");
  int n = static_cast<int>(points.rows());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (order.leq(points.row(i), points.row(j)) &&
          !order.leq(points.row(j), points.row(i)))
        pairs.emplace_back(i, j);
    }
  return pairs;
}

MceResult mce(const Eigen::VectorXd& values,
              const std::vector<std::pair<int, int>>& pairs, int max_iter) {
  if (max_iter < 1) throw std::invalid_argument("mce: max_iter must be >= 1");
  if (!values.allFinite()) throw std::invalid_argument("mce: values must be finite");
  MceResult r;
  r.values = values;
  for (int pass = 0; pass < max_iter; ++pass) {
    bool changed = false;
    for (auto [i, j] : pairs) {
      double vi = r.values[i], vj = r.values[j];
      if (vi > vj) {
        double avg = 0.5 * (vi + vj);
        r.values[i] = avg;
        r.values[j] = avg;
        changed = true;
      }
    }
    r.passes = pass + 1;
    if (!changed) {
      r.converged = true;
      return r;
    }
  }
  r.converged = false;
  return r;
}

MceResult mce(const Eigen::VectorXd& values, const Eigen::MatrixXd& points,
              const PartialOrderSpec& order, int max_iter) {
  return mce(values, comparable_pairs(points, order), max_iter);
}

Eigen::VectorXd monotone_mix(const Eigen::VectorXd& h,
                             const std::vector<std::pair<int, int>>& pairs,
                             double* mix_weight, int max_iter) {
  Eigen::VectorXd g_plus = mce(h, pairs, max_iter).values;
  Eigen::VectorXd g_minus = -mce(-h, pairs, max_iter).values;
  double e_plus = (h - g_plus).squaredNorm();
  double e_minus = (h - g_minus).squaredNorm();
  double w = (e_plus + e_minus > 0.0) ? e_minus / (e_plus + e_minus) : 0.5;
  if (mix_weight) *mix_weight = w;
  return w * g_plus - (1.0 - w) * g_minus;
}

std::vector<MonotoneSample> monotone_sampler(const KernelSpec& spec,
                                             const Eigen::MatrixXd& points,
                                             const PartialOrderSpec& order,
                                             int N, std::uint64_t seed) {
  if (N < 1) throw std::invalid_argument("monotone_sampler: N must be >= 1");
  auto pairs = comparable_pairs(points, order);
  GpSampler sampler(spec, points);
  Rng master(seed);
  std::vector<MonotoneSample> out;
  out.reserve(N);
  for (int i = 0; i < N; ++i) {
    Rng rng = master.child(i);
    Eigen::VectorXd h = sampler.draw(rng);
    MonotoneSample s;
    s.grid.points = points;
    s.grid.values = monotone_mix(h, pairs, &s.mix_weight);
    s.grid.order = order;
    s.order = order;
    out.push_back(std::move(s));
  }
  return out;
}

std::int64_t RectGrid::size() const {
  std::int64_t n = 1;
  for (auto& a : axes) n *= a.size();
  return n;
}

std::int64_t RectGrid::flat_index(const std::vector<int>& idx) const {
  std::int64_t f = 0;
  for (int k = 0; k < dim(); ++k) f = f * axes[k].size() + idx[k];
  return f;
}

InterpResult interpolate(const RectGrid& grid, const Eigen::VectorXd& query) {
  int d = grid.dim();
  if (query.size() != d)
    throw std::invalid_argument("interpolate: query dimension mismatch");
  if (grid.values.size() != grid.size())
    throw std::invalid_argument("interpolate: values/axes size mismatch");

  InterpResult res;
  std::vector<int> lo(d);
  std::vector<double> frac(d);
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd& ax = grid.axes[k];
    int n = static_cast<int>(ax.size());
    double q = query[k];
    if (q < ax[0]) {
      q = ax[0];
      res.clamped = true;
    } else if (q > ax[n - 1]) {
      q = ax[n - 1];
      res.clamped = true;
    }
    if (n == 1) {
      lo[k] = 0;
      frac[k] = 0.0;
      continue;
    }
    const double* begin = ax.data();
    int cell = static_cast<int>(std::upper_bound(begin, begin + n, q) - begin) - 1;
    cell = std::clamp(cell, 0, n - 2);
    lo[k] = cell;
    frac[k] = (q - ax[cell]) / (ax[cell + 1] - ax[cell]);
  }

  double acc = 0.0;
  std::vector<int> idx(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      bool hi = corner & (1 << k);
      int n = static_cast<int>(grid.axes[k].size());
      idx[k] = std::min(lo[k] + (hi ? 1 : 0), n - 1);
      w *= hi ? frac[k] : 1.0 - frac[k];
    }
    if (w != 0.0) acc += w * grid.values[grid.flat_index(idx)];
  }
  res.value = acc;
  return res;
}

Eigen::VectorXd monotone_decreasing_in_price(const Eigen::VectorXd& latent,
                                             const Eigen::VectorXd& prices,
                                             const std::vector<int>& categories) {
  int n = static_cast<int>(prices.size());
  if (latent.size() != n || static_cast<int>(categories.size()) != n)
    throw std::invalid_argument("monotone_decreasing_in_price: size mismatch");
  Eigen::VectorXd f(n);
  std::vector<int> cats(categories.begin(), categories.end());
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  for (int c : cats) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (categories[i] == c) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return prices[a] < prices[b]; });
    double acc = 0.0;
    f[idx[0]] = 0.0;
    for (size_t k = 1; k < idx.size(); ++k) {
      double h = latent[idx[k]];
      double softplus = h > 30.0 ? h : std::log1p(std::exp(h));
      acc -= softplus * (prices[idx[k]] - prices[idx[k - 1]]);
      f[idx[k]] = acc;
    }
  }
  f.array() -= f.mean();
  return f;
}

bool is_monotone(const Eigen::VectorXd& values,
                 const std::vector<std::pair<int, int>>& pairs, double tol) {
  for (auto [i, j] : pairs)
    if (values[i] > values[j] + tol) return false;
  return true;
}

}  // namespace restr
