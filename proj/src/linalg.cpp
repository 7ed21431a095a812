#include "ddc/linalg.hpp"

#include <stdexcept>

namespace ddc {

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Matrix pinv(const Matrix& m, double rel_cutoff) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Vector inv = Vector::Zero(s.size());
  if (s.size() > 0) {
    const double cut = rel_cutoff * s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > cut) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

Matrix right_solve_spd(const Matrix& Y, const Matrix& P) {
  Eigen::LLT<Matrix> llt(symmetrize(P));
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("right_solve_spd: matrix is not positive definite");
  return llt.solve(Y.transpose()).transpose();
}

Matrix state_part(const Matrix& Z, int nx) { return Z.topRows(nx).transpose(); }

Matrix input_part(const Matrix& Z, int nx) {
  return Z.bottomRows(Z.rows() - nx).transpose();
}

Matrix stack_system(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows())
    throw std::invalid_argument("stack_system: A and B row counts differ");
  Matrix Z(A.cols() + B.cols(), A.rows());
  Z << A.transpose(), B.transpose();
  return Z;
}

}  // namespace ddc
