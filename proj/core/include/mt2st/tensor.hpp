#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mt2st {

// Dense row-major matrix of doubles. The only tensor rank the MLP family
// needs; kept a plain value type so copies and comparisons are trivial.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols entries, row-major

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor2(std::size_t r, std::size_t c, std::initializer_list<double> values);

  static Tensor2 zeros(std::size_t r, std::size_t c) { return Tensor2(r, c); }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& other) const {
    return rows == other.rows && cols == other.cols;
  }
  bool all_finite() const;
};

bool bitwise_equal(const Tensor2& a, const Tensor2& b);

}  // namespace mt2st
