#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace kdiffnet {

using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultCondLimit = 1e12;

/// n x p block of observations from one condition (rows are samples).
class SampleBlock {
 public:
  /// Throws InputError when n < 2, p < 1 or any entry is non-finite.
  explicit SampleBlock(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  Eigen::Index n() const noexcept { return data_.rows(); }
  Eigen::Index p() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

/// Symmetric p x p matrix with a non-negative diagonal.
class CovarianceMatrix {
 public:
  /// Throws InputError if the matrix is not square, not symmetric to 1e-12
  /// relative, has a negative diagonal entry, or holds non-finite values.
  explicit CovarianceMatrix(Matrix values);

  const Matrix& values() const noexcept { return values_; }
  Eigen::Index p() const noexcept { return values_.rows(); }

 private:
  Matrix values_;
};

/// Result of the proxy backward mapping [T_v(S_d)]^-1 - [T_v(S_c)]^-1.
struct BackwardMap {
  Matrix values;
  double v_used = 0.0;

  Eigen::Index p() const noexcept { return values.rows(); }
};

/// Empirical covariance (1/n) X^T X, optionally after column centering.
CovarianceMatrix sample_covariance(const SampleBlock& block, bool centered = true);

/// T_v: adds v to the diagonal and soft-thresholds the off-diagonal at v.
CovarianceMatrix soft_threshold_matrix(const CovarianceMatrix& a, double v);

/// Reciprocal condition estimate (1-norm) of a symmetric matrix; 0 when singular.
double reciprocal_condition(const Matrix& a);

/// Inverts a symmetric matrix, failing with InvertibilityError when the
/// estimated condition number exceeds cond_limit or the residual
/// ||A A^-1 - I||_inf exceeds 1e-8 * p.  The result is symmetrized.
Matrix invert_checked(const CovarianceMatrix& a, double cond_limit = kDefaultCondLimit);

BackwardMap proxy_backward_mapping(const CovarianceMatrix& sigma_c,
                                   const CovarianceMatrix& sigma_d, double v,
                                   double cond_limit = kDefaultCondLimit);

/// {0.001 i : i = 1..1000}
std::vector<double> default_v_grid();

/// Smallest grid value for which both T_v(sigma_c) and T_v(sigma_d) pass the
/// invertibility check.  Throws SelectionError if none does.
double select_v(const CovarianceMatrix& sigma_c, const CovarianceMatrix& sigma_d,
                std::span<const double> grid, double cond_limit = kDefaultCondLimit);

}  // namespace kdiffnet
