#pragma once

#include <Eigen/Core>
#include <vector>

namespace restr {

enum class Direction { increasing, decreasing, unordered };

// Componentwise partial order on input vectors.  Coordinates marked
// unordered must match exactly for two points to be comparable.
struct PartialOrderSpec {
  std::vector<Direction> dir;

  int dim() const { return static_cast<int>(dir.size()); }

  bool has_ordered_coordinate() const {
    for (Direction d : dir)
      if (d != Direction::unordered) return true;
    return false;
  }

  // true iff x ⪯ y (f(x) ≤ f(y) is required of a monotone f)
  bool leq(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
    for (int k = 0; k < dim(); ++k) {
      switch (dir[k]) {
        case Direction::increasing:
          if (x[k] > y[k]) return false;
          break;
        case Direction::decreasing:
          if (x[k] < y[k]) return false;
          break;
        case Direction::unordered:
          if (x[k] != y[k]) return false;
          break;
      }
    }
    return true;
  }
};

}  // namespace restr
