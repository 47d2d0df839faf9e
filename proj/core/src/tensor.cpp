#include "mt2st/tensor.hpp"

#include <cmath>
#include <cstring>

#include "mt2st/errors.hpp"

namespace mt2st {

Tensor2::Tensor2(std::size_t r, std::size_t c,
                 std::initializer_list<double> values)
    : rows(r), cols(c), data(values) {
  if (data.size() != rows * cols) {
    throw ShapeError("Tensor2 initializer has " + std::to_string(data.size()) +
                     " entries, expected " + std::to_string(rows * cols));
  }
}

bool Tensor2::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool bitwise_equal(const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) return false;
  if (a.data.empty()) return true;
  return std::memcmp(a.data.data(), b.data.data(),
                     a.data.size() * sizeof(double)) == 0;
}

}  // namespace mt2st
