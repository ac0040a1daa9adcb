#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace mpj::linalg {

using Complex = std::complex<double>;

/// Thin SVD truncated at a relative tolerance.
struct TruncatedSvd {
  Eigen::MatrixXd u;   // J x rank, orthonormal columns
  Eigen::VectorXd s;   // rank, descending, all > 0
  Eigen::MatrixXd vt;  // rank x K
  std::size_t rank = 0;
};

/// Keeps singular values while s[n]/s[0] > tol; the first index with
/// s[n]/s[0] <= tol and everything after it is dropped.
/// Throws ValidationError on non-finite input and std::invalid_argument on an
/// empty matrix, a tolerance outside (0,1) or an all-zero matrix.
TruncatedSvd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& a, double tol);

struct EigenPairs {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  // column m pairs with values[m]
};

/// Real input keeps conjugate eigenvalues paired with conjugate vectors.
EigenPairs eig_dense(const Eigen::Ref<const Eigen::MatrixXd>& a);
EigenPairs eig_dense(const Eigen::Ref<const Eigen::MatrixXcd>& a);

/// Minimum-norm least-squares solution of a*x = b via the SVD pseudo-inverse.
Eigen::MatrixXd lstsq(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b);
Eigen::MatrixXcd lstsq(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Ref<const Eigen::MatrixXcd>& b);

struct RmsNormalized {
  Eigen::VectorXcd vector;
  double scale = 0.0;  // input = scale * vector
};

RmsNormalized rms_normalize(const Eigen::Ref<const Eigen::VectorXcd>& u);

/// sqrt(mean |u_i|^2)
double rms(const Eigen::Ref<const Eigen::VectorXcd>& u);

}  // namespace mpj::linalg
