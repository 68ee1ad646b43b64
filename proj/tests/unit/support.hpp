#pragma once

#include "postpi/numerics.hpp"

#include <random>

namespace testing_support {

inline postpi::RealMatrix random_matrix(std::mt19937_64& gen, Eigen::Index rows,
                                        Eigen::Index cols) {
  std::normal_distribution<double> dist;
  postpi::RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(gen);
  return m;
}

inline postpi::RealVector random_vector(std::mt19937_64& gen, Eigen::Index n) {
  return random_matrix(gen, n, 1).col(0);
}

/// Random design with a leading column of ones.
inline postpi::RealMatrix random_design(std::mt19937_64& gen, Eigen::Index rows,
                                        Eigen::Index slopes) {
  postpi::RealMatrix x(rows, slopes + 1);
  x.col(0).setOnes();
  x.rightCols(slopes) = random_matrix(gen, rows, slopes);
  return x;
}

inline double max_abs_diff(const postpi::RealMatrix& a, const postpi::RealMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_support
