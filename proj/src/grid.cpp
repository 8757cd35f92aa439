#include "mrr/grid.hpp"

#include <algorithm>
#include <cmath>

namespace mrr {

CovariateGrid::CovariateGrid(double lower, double upper, int m)
    : lower_(lower), upper_(upper), m_(m) {
  if (!(lower < upper)) throw std::invalid_argument("grid: lower bound must be below upper");
  if (m < 2) throw std::invalid_argument("grid: need at least 2 intervals");
  width_ = (upper - lower) / m;
}

CovariateGrid CovariateGrid::from_data_range(std::span<const double> observed, int m) {
  if (observed.empty()) throw std::invalid_argument("grid: no observed covariate values");
  auto [lo, hi] = std::minmax_element(observed.begin(), observed.end());
  return CovariateGrid(0.8 * *lo, 1.2 * *hi, m);
}

int CovariateGrid::index_of(double y) const {
  if (!contains(y)) throw std::out_of_range("grid: covariate value outside essential range");
  if (y == upper_) return m_;
  int j = 1 + static_cast<int>(std::floor((y - lower_) / width_));
  // Guard against floating rounding at interval boundaries.
  j = std::clamp(j, 1, m_);
  if (y < boundary(j - 1)) --j;
  if (y >= boundary(j) && j < m_) ++j;
  return j;
}

}  // namespace mrr
