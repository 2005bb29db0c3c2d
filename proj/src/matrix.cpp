#include "locml/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace locml {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) t(c, r) = a(r, c);
  return t;
}

Matrix gemm_blocked(const Matrix& a, const Matrix& b, std::size_t tile) {
  if (a.cols != b.rows) throw std::invalid_argument("gemm: inner dimensions do not match");
  if (tile < 1) throw std::invalid_argument("gemm: tile must be >= 1");

  Matrix c(a.rows, b.cols);
  for (std::size_t i0 = 0; i0 < a.rows; i0 += tile) {
    const std::size_t i1 = std::min(i0 + tile, a.rows);
    for (std::size_t k0 = 0; k0 < a.cols; k0 += tile) {
      const std::size_t k1 = std::min(k0 + tile, a.cols);
      for (std::size_t j0 = 0; j0 < b.cols; j0 += tile) {
        const std::size_t j1 = std::min(j0 + tile, b.cols);
        for (std::size_t i = i0; i < i1; ++i) {
          for (std::size_t k = k0; k < k1; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = j0; j < j1; ++j) c(i, j) += aik * b(k, j);
          }
        }
      }
    }
  }
  return c;
}

}  // namespace locml
