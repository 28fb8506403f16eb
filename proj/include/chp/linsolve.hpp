#pragma once

#include <cstddef>
#include <vector>

#include "chp/rational.hpp"

namespace chp {

// Solves A X = B exactly by Gaussian elimination over rationals, where
// A is n x n and B is n x k (k right-hand sides). On success the
// solution replaces B and the function returns true; returns false if A
// is singular (A and B are left in an unspecified state).
inline bool solve_linear(std::vector<std::vector<Rat>>& A, std::vector<std::vector<Rat>>& B) {
  const std::size_t n = A.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && A[pivot][col] == 0) ++pivot;
    if (pivot == n) return false;
    std::swap(A[pivot], A[col]);
    std::swap(B[pivot], B[col]);
    const Rat inv = 1 / A[col][col];
    for (std::size_t j = col; j < n; ++j) A[col][j] *= inv;
    for (std::size_t j = 0; j < B[col].size(); ++j) B[col][j] *= inv;
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || A[row][col] == 0) continue;
      const Rat f = A[row][col];
      for (std::size_t j = col; j < n; ++j) A[row][j] -= f * A[col][j];
      for (std::size_t j = 0; j < B[row].size(); ++j) B[row][j] -= f * B[col][j];
    }
  }
  return true;
}

}  // namespace chp
