#pragma once

#include <Eigen/Dense>

namespace ddc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

double spectral_norm(const Matrix& m);
double spectral_radius(const Matrix& m);

// Extreme eigenvalues of the symmetric part of m.
double min_eig(const Matrix& m);
double max_eig(const Matrix& m);

Matrix symmetrize(const Matrix& m);

// Moore-Penrose pseudo-inverse by SVD. Singular values at or below
// rel_cutoff * sigma_max are treated as zero.
Matrix pinv(const Matrix& m, double rel_cutoff = 1e-10);

// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix& m, double rel_tol = 1e-8);

// Y * P^{-1} for symmetric positive definite P, via Cholesky.
Matrix right_solve_spd(const Matrix& Y, const Matrix& P);

// Split Z = [A B]' into its state and input parts.
Matrix state_part(const Matrix& Z, int nx);
Matrix input_part(const Matrix& Z, int nx);
Matrix stack_system(const Matrix& A, const Matrix& B);

}  // namespace ddc
