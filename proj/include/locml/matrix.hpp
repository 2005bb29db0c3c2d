#pragma once

#include <cstddef>
#include <vector>

namespace locml {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows(rows), cols(cols), data(rows * cols, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  static Matrix identity(std::size_t n);
};

Matrix transpose(const Matrix& a);

/// C = A * B with square tiling of the (i, k, j) iteration space. Per
/// output cell the k-contributions are accumulated in ascending order for
/// every tile size, so results agree with the plain triple loop to within
/// rounding. tile >= all dimensions degenerates to a single tile.
Matrix gemm_blocked(const Matrix& a, const Matrix& b, std::size_t tile);

}  // namespace locml
