#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "restr/kernels.hpp"
#include "restr/types.hpp"

namespace restr {

struct MonotoneSample {
  GridSample grid;
  PartialOrderSpec order;
  double mix_weight = 0.5;  // w₊
};

// Ordered pairs (i,j) with points[i] ⪯ points[j], i ≠ j, in lexicographic
// sweep order.  Precompute once per grid; mce runs per draw.
std::vector<std::pair<int, int>> comparable_pairs(const Eigen::MatrixXd& points,
                                                  const PartialOrderSpec& order);

struct MceResult {
  Eigen::VectorXd values;
  bool converged = true;
  int passes = 0;
};

MceResult mce(const Eigen::VectorXd& values,
              const std::vector<std::pair<int, int>>& pairs, int max_iter = 500);

MceResult mce(const Eigen::VectorXd& values, const Eigen::MatrixXd& points,
              const PartialOrderSpec& order, int max_iter = 500);

// Mixture-of-projections sampler: h ~ GP, g₊ = mce(h), g₋ = −mce(−h),
// weights from the squared correction sizes.  Every draw satisfies the
// order spec.
std::vector<MonotoneSample> monotone_sampler(const KernelSpec& spec,
                                             const Eigen::MatrixXd& points,
                                             const PartialOrderSpec& order,
                                             int N, std::uint64_t seed);

// applies the two-projection mixture to one latent draw
Eigen::VectorXd monotone_mix(const Eigen::VectorXd& h,
                             const std::vector<std::pair<int, int>>& pairs,
                             double* mix_weight = nullptr, int max_iter = 500);

inline double logistic(double g) { return 1.0 / (1.0 + std::exp(-g)); }

inline double range_transform(double g, double lo, double hi) {
  return lo + (hi - lo) * logistic(g);
}

// Rectangular grid for multilinear interpolation.  Values indexed
// row-major: index = ((i0·n1 + i1)·n2 + i2)…
struct RectGrid {
  std::vector<Eigen::VectorXd> axes;  // ascending per dimension
  Eigen::VectorXd values;

  int dim() const { return static_cast<int>(axes.size()); }
  std::int64_t size() const;
  std::int64_t flat_index(const std::vector<int>& idx) const;
};

struct InterpResult {
  double value = 0.0;
  bool clamped = false;
};

InterpResult interpolate(const RectGrid& grid, const Eigen::VectorXd& query);

// Derivative-based construction for share models: within each category,
// products sorted by price accumulate −softplus(h)·Δprice; the result is
// centered to zero mean across all products.
Eigen::VectorXd monotone_decreasing_in_price(const Eigen::VectorXd& latent,
                                             const Eigen::VectorXd& prices,
                                             const std::vector<int>& categories);

// exhaustive comparable-pair order check
bool is_monotone(const Eigen::VectorXd& values,
                 const std::vector<std::pair<int, int>>& pairs,
                 double tol = 1e-9);

}  // namespace restr
