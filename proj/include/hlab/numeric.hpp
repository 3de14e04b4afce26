#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace hlab {

/// Neumaier compensated accumulator.  Cumulant expansions are alternating
/// sums, so plain summation would lose the cancellation digits the exactness
/// tests rely on.
class Accumulator {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Odometer over {0,...,base-1}^digits, in row-major order.
class Odometer {
 public:
  Odometer(int digits, int base) : idx_(static_cast<std::size_t>(digits), 0), base_(base) {}

  const std::vector<int>& index() const { return idx_; }

  bool advance() {
    for (int i = static_cast<int>(idx_.size()) - 1; i >= 0; --i) {
      if (++idx_[static_cast<std::size_t>(i)] < base_) return true;
      idx_[static_cast<std::size_t>(i)] = 0;
    }
    return false;
  }

 private:
  std::vector<int> idx_;
  int base_;
};

}  // namespace hlab
