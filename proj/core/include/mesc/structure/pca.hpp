#pragma once

#include <cstddef>
#include <vector>

namespace mesc::structure {

// Mean-centered principal-component projection to r dimensions. Components are
// ordered by descending eigenvalue; each column's sign is fixed so its
// largest-magnitude entry is positive.
struct ReductionModel {
  size_t input_dim = 0;
  size_t r = 0;
  std::vector<float> mean;        // [input_dim]
  std::vector<float> components;  // [input_dim x r], row-major

  std::vector<float> reduce(const float* x) const;
  std::vector<float> reduce_all(const std::vector<float>& data, size_t n) const;
};

// data: n x dim row-major. If the sample covariance has rank < r, r is reduced
// (with a warning on stderr), never below 1.
ReductionModel fit_reduction(const std::vector<float>& data, size_t n, size_t dim,
                             size_t r);

}  // namespace mesc::structure
