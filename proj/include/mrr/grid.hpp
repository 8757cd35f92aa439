#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace mrr {

// Equal-length partition of the essential covariate range [b_0, b_m] into m
// intervals B_j = [b_{j-1}, b_j), j = 1..m, with midpoint representative
// points b_j*. Interval indices are 1-based throughout, matching the state
// numbering of the augmented chain (states 1..m alive, m+1 recent dead,
// m+2 long dead).
class CovariateGrid {
 public:
  CovariateGrid(double lower, double upper, int m);

  // Essential range from observed covariate values: b_0 = 0.8 * min,
  // b_m = 1.2 * max.
  static CovariateGrid from_data_range(std::span<const double> observed, int m);

  int size() const { return m_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return width_; }

  // Interval boundary b_j, j = 0..m.
  double boundary(int j) const { return lower_ + j * width_; }
  // Interval midpoint b_j*, j = 1..m.
  double midpoint(int j) const { return lower_ + (j - 0.5) * width_; }

  bool contains(double y) const { return y >= lower_ && y <= upper_; }

  // Index j with y in B_j. The boundary point b_m is assigned to B_m (the
  // half-open convention leaves it unassigned otherwise).
  int index_of(double y) const;

 private:
  double lower_, upper_, width_;
  int m_;
};

}  // namespace mrr
