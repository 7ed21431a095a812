#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddc/linalg.hpp"
#include "ddc/sdp.hpp"

namespace ddc {

// QMI set {Z : Z'AZ + Z'B + B'Z + C <= 0} over stacked systems Z = [A B]'.
struct MatrixEllipsoid {
  Matrix A;  // (nx+nu) x (nx+nu), symmetric PSD
  Matrix B;  // (nx+nu) x nx
  Matrix C;  // nx x nx, symmetric
  bool bounded = false;

  int stacked_dim() const { return static_cast<int>(A.rows()); }
  int nx() const { return static_cast<int>(B.cols()); }

  Matrix qmi(const Matrix& Z) const;
  double residual(const Matrix& Z) const;  // lambda_max of qmi(Z)
  bool contains(const Matrix& Z, double tol = 1e-7) const { return residual(Z) <= tol; }

  // -A^{-1} B and B'A^{-1}B - C; require A > 0.
  Matrix center() const;
  Matrix radius_matrix() const;

  MatrixEllipsoid scaled(double c) const;  // same set for c > 0
};

MatrixEllipsoid ball_from_offline(const Matrix& Z_tr, double delta);

MatrixEllipsoid one_step_set(const Vector& x_prev, const Vector& u_prev, const Vector& x_next,
                             std::optional<double> noise_bound = std::nullopt);

struct IntersectionSettings {
  // Relative slab half-width applied after normalizing the one-step data; see README.
  double noise_floor = 1e-3;
  double definiteness_margin = 1e-7;
  sdp::SolverSettings solver;
};

struct IntersectionResult {
  MatrixEllipsoid set;
  double tau_ball = 0.0;
  double tau_step = 0.0;
  double log_det = 0.0;
  sdp::Status status = sdp::Status::NumericalFailure;
  sdp::SolverStats stats;
  double solve_seconds = 0.0;
};

// Minimum-volume bounded ellipsoid containing one_step ∩ ball (S-procedure).
// Throws IntersectionFailed unless the solver reports optimal.
IntersectionResult intersect_min_volume(const MatrixEllipsoid& ball, const MatrixEllipsoid& one_step,
                                        const IntersectionSettings& settings = {});

// The SDP itself, for dumps and external cross-checks. It is posed in
// coordinates Z - Z_ball, so its "Bbar" is Bbar + Abar Z_ball.
sdp::Problem intersection_problem(const MatrixEllipsoid& ball, const MatrixEllipsoid& one_step,
                                  const IntersectionSettings& settings = {});

// Uniform samples of {Z : Z'w = x_next} ∩ {||Z - Z_c|| <= delta} (spectral norm),
// drawn on the affine slice and filtered by the ball. Audit helper.
std::vector<Matrix> sample_slice_in_ball(const Matrix& Z_c, double delta, const Vector& w,
                                         const Vector& x_next, int count, std::mt19937_64& rng,
                                         int max_draws = 200000);

// Uniform samples of the Frobenius ball around Z_c, radius delta.
std::vector<Matrix> sample_frobenius_ball(const Matrix& Z_c, double delta, int count, std::mt19937_64& rng);

// A.csv, B.csv, C.csv and meta.json (bounded flag, step index) under dir/prefix*.
void write_ellipsoid(const std::string& dir, const std::string& prefix, const MatrixEllipsoid& e, int step);
MatrixEllipsoid read_ellipsoid(const std::string& dir, const std::string& prefix, int* step = nullptr);

}  // namespace ddc
