#include "mpj/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mpj/errors.hpp"

namespace mpj::linalg {

namespace {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
}

// Relative cutoff below which singular values count as zero in the
// pseudo-inverse (same rule as numpy.linalg.pinv's default rcond).
double pinv_cutoff(const Eigen::VectorXd& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.size() == 0) return 0.0;
  return s(0) * static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

template <typename MatrixT>
MatrixT lstsq_impl(const Eigen::Ref<const MatrixT>& a, const Eigen::Ref<const MatrixT>& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("lstsq: row count of a and b differ");
  require_finite(a, "lstsq");
  require_finite(b, "lstsq");
  if (a.size() == 0) return MatrixT::Zero(a.cols(), b.cols());

  Eigen::BDCSVD<MatrixT> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = pinv_cutoff(s, a.rows(), a.cols());
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;

  const auto ur = svd.matrixU().leftCols(r);
  const auto vr = svd.matrixV().leftCols(r);
  MatrixT coeff = ur.adjoint() * b;
  for (Eigen::Index i = 0; i < r; ++i) coeff.row(i) /= s(i);
  return vr * coeff;
}

}  // namespace

TruncatedSvd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& a, double tol) {
  if (a.size() == 0) throw std::invalid_argument("truncated_svd: empty matrix");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("truncated_svd: tolerance must lie in (0,1)");
  require_finite(a, "truncated_svd");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s(0) > 0.0)) throw std::invalid_argument("truncated_svd: matrix is identically zero");

  Eigen::Index rank = 1;
  while (rank < s.size() && s(rank) / s(0) > tol) ++rank;

  TruncatedSvd out;
  out.rank = static_cast<std::size_t>(rank);
  out.u = svd.matrixU().leftCols(rank);
  out.s = s.head(rank);
  out.vt = svd.matrixV().leftCols(rank).transpose();
  return out;
}

EigenPairs eig_dense(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eig_dense: matrix is not square");
  require_finite(a, "eig_dense");
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, true);
  if (solver.info() != Eigen::Success) throw NumericOverflowError("eig_dense: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

EigenPairs eig_dense(const Eigen::Ref<const Eigen::MatrixXcd>& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("eig_dense: matrix is not square");
  require_finite(a, "eig_dense");
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a, true);
  if (solver.info() != Eigen::Success) throw NumericOverflowError("eig_dense: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd lstsq(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  return lstsq_impl<Eigen::MatrixXd>(a, b);
}

Eigen::MatrixXcd lstsq(const Eigen::Ref<const Eigen::MatrixXcd>& a, const Eigen::Ref<const Eigen::MatrixXcd>& b) {
  return lstsq_impl<Eigen::MatrixXcd>(a, b);
}

double rms(const Eigen::Ref<const Eigen::VectorXcd>& u) {
  if (u.size() == 0) return 0.0;
  return std::sqrt(u.squaredNorm() / static_cast<double>(u.size()));
}

RmsNormalized rms_normalize(const Eigen::Ref<const Eigen::VectorXcd>& u) {
  const double scale = rms(u);
  if (!(scale > 0.0)) throw std::invalid_argument("rms_normalize: zero vector");
  return {u / scale, scale};
}

}  // namespace mpj::linalg
