#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

namespace restr {

enum class Transform { linear, log_scale, logit };

// Box with optional ±inf bounds and per-coordinate search transforms.
// An empty hint vector picks logit for doubly-bounded coordinates,
// log for half-bounded ones, linear otherwise.
struct BoxDomain {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<Transform> hints;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  Transform effective_hint(int k) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;

  static BoxDomain empty() { return BoxDomain{}; }
  static BoxDomain bounded(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static BoxDomain unbounded(int d);
};

struct OptimSettings {
  int n_starts = 8;
  double tol = 1e-8;
  int max_evals = 2000;          // per start
  int polish_evals_per_dim = 60; // deterministic box-projected refinement
  std::uint64_t seed = 0;
};

struct OptimResult {
  Eigen::VectorXd argmin;
  double value = 0.0;
  long n_evals = 0;
  bool converged = false;
  int start_index = -1;  // -1 marks an extra (warm) start
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Nelder–Mead in transformed coordinates from Latin-hypercube starts.
// extra_starts are evaluated directly and seeded as additional NM runs,
// so the returned value never exceeds the objective at any of them.
OptimResult minimize(const Objective& objective, const BoxDomain& domain,
                     const OptimSettings& settings,
                     const std::vector<Eigen::VectorXd>& extra_starts = {});

}  // namespace restr
