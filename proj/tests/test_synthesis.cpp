#include <doctest.h>

#include <cmath>
#include <random>

#include "ddc/errors.hpp"
#include "ddc/synthesis.hpp"
#include "oracles.hpp"

using namespace ddc;

namespace {

Matrix scalar_stack(double a, double b) {
  Matrix Z(2, 1);
  Z << a, b;
  return Z;
}

Matrix power_generator_stack() {
  Matrix Z(4, 2);
  Z << 0, -1, 1, -1, 0, 1, 0, 1;
  return Z;
}

// Closed-loop matrix A + B K for Z = [A B]'.
Matrix closed_loop(const Matrix& Z, const Matrix& K) {
  const auto nx = Z.cols();
  const Matrix A = Z.topRows(nx).transpose();
  const Matrix B = Z.bottomRows(Z.rows() - nx).transpose();
  return A + B * K;
}

// Systems of a bounded region: center + A^{-1/2} U R^{1/2} with ||U|| <= 1.
std::vector<Matrix> region_samples(const MatrixEllipsoid& e, int count, std::mt19937_64& rng) {
  Eigen::SelfAdjointEigenSolver<Matrix> ea(e.A), er(e.radius_matrix());
  const Matrix Ainv_half = ea.eigenvectors() * ea.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                           ea.eigenvectors().transpose();
  const Matrix R_half = er.eigenvectors() * er.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                        er.eigenvectors().transpose();
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Matrix> out;
  for (int i = 0; i < count; ++i) {
    Matrix U = Matrix::NullaryExpr(e.A.rows(), e.nx(), [&]() { return n(rng); });
    U *= u(rng) / oracle::spectral_norm(U);
    out.push_back(e.center() + Ainv_half * U * R_half);
  }
  return out;
}

}  // namespace

TEST_CASE("synthesize: zero-radius region at a stable scalar system") {
  const MatrixEllipsoid region = ball_from_offline(scalar_stack(0.5, 1.0), 0.0);
  const ControllerSolution s = synthesize(region, {0.9, 1.0});
  REQUIRE(s.status == sdp::Status::Optimal);
  CHECK(std::abs(0.5 + s.K(0, 0)) < 1.0);
  CHECK(check_solution(s, 1.0).empty());
  CHECK(robust_lmi_residual(region, 0.9, s.P, s.Y) <= 1e-7);
}

TEST_CASE("synthesize: solution invariants hold") {
  const MatrixEllipsoid region = ball_from_offline(power_generator_stack(), 0.05);
  const ControllerSolution s = synthesize(region, {0.9, 1.0});
  REQUIRE(s.status == sdp::Status::Optimal);
  CHECK((s.K - right_solve_spd(s.Y, s.P)).norm() <= 1e-9);
  CHECK((s.K * s.P - s.Y).norm() <= 1e-9 * std::max(1.0, s.Y.norm()));
  CHECK(s.P.trace() + s.L.trace() + 1.0 * oracle::spectral_norm(s.Q) <= s.gamma + 1e-7);
  Matrix LY(s.L.rows() + s.P.rows(), s.L.cols() + s.P.cols());
  LY << s.L, s.Y, s.Y.transpose(), s.P;
  CHECK(oracle::lambda_min(LY) >= -1e-7);
  Matrix QI(4, 4);
  QI << s.Q, Matrix::Identity(2, 2), Matrix::Identity(2, 2), s.P;
  CHECK(oracle::lambda_min(QI) >= -1e-7);
  CHECK(check_solution(s, 1.0).empty());
}

TEST_CASE("synthesize: gain stabilizes sampled systems of the region") {
  const MatrixEllipsoid region = ball_from_offline(power_generator_stack(), 0.05);
  const ControllerSolution s = synthesize(region, {0.9, 1.0});
  REQUIRE(s.status == sdp::Status::Optimal);
  std::mt19937_64 rng(31);
  int unstable = 0, lyap_failures = 0;
  for (const Matrix& Z : region_samples(region, 100, rng)) {
    REQUIRE(region.contains(Z, 1e-9));
    if (oracle::spectral_radius(closed_loop(Z, s.K)) >= 1.0) ++unstable;
    if (!verify_lyapunov(Z, s.K, s.P, 0.9)) ++lyap_failures;
  }
  CHECK(unstable == 0);
  CHECK(lyap_failures == 0);
}

TEST_CASE("synthesize: positive scaling of the region keeps the feasible set") {
  // The robust LMI is homogeneous: (P, Y) works for the region scaled by c exactly
  // when (P / c, Y / c) works for the original. The objective is not scale
  // invariant (the ||Q|| term scales the other way), so the optimal K may move.
  const MatrixEllipsoid region = ball_from_offline(power_generator_stack(), 0.05);
  const SynthesisParams params{0.9, 1.0};
  const ControllerSolution base = synthesize(region, params);
  REQUIRE(base.status == sdp::Status::Optimal);
  for (double c : {0.25, 4.0}) {
    const MatrixEllipsoid scaled = region.scaled(c);
    const ControllerSolution s = synthesize(scaled, params);
    REQUIRE(s.status == sdp::Status::Optimal);
    CHECK(robust_lmi_residual(scaled, 0.9, s.P, s.Y) <= 1e-7 * std::max(1.0, s.P.norm()));
    CHECK(robust_lmi_residual(region, 0.9, s.P / c, s.Y / c) <= 1e-7 * std::max(1.0, s.P.norm()));
    CHECK(robust_lmi_residual(scaled, 0.9, c * base.P, c * base.Y) <= 1e-7 * std::max(1.0, c * base.P.norm()));
    CHECK((right_solve_spd(s.Y / c, s.P / c) - s.K).norm() <= 1e-9);
  }
}

TEST_CASE("synthesize: a region containing an unstabilizable system is infeasible") {
  // B = 0 direction: the ball around (2, 0) contains systems with no input authority.
  const MatrixEllipsoid region = ball_from_offline(scalar_stack(2.0, 0.0), 0.1);
  CHECK_THROWS_AS(synthesize(region, {0.9, 1.0}), SynthesisInfeasible);
}

TEST_CASE("synthesize: parameter ranges") {
  const MatrixEllipsoid region = ball_from_offline(scalar_stack(0.5, 1.0), 0.0);
  CHECK_THROWS_AS(synthesize(region, {1.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(synthesize(region, {0.0, 1.0}), InvalidInput);
  CHECK_THROWS_AS(synthesize(region, {0.5, 0.0}), InvalidInput);
}

TEST_CASE("lqr diagnostic: zero state map") {
  const LqrDiagnostic d = lqr_diagnostic(scalar_stack(0.0, 1.0), 1);
  CHECK(std::abs(0.0 + d.K(0, 0)) < 1.0);
  CHECK(d.P(0, 0) >= 1.0 - 1e-7);
}

TEST_CASE("lqr diagnostic: unstable scalar system") {
  const LqrDiagnostic d = lqr_diagnostic(scalar_stack(2.0, 1.0), 1);
  CHECK(std::abs(2.0 + d.K(0, 0)) < 1.0);
  CHECK(d.P(0, 0) >= 1.0 - 1e-7);
}

TEST_CASE("lqr diagnostic: power generator") {
  const Matrix Z = power_generator_stack();
  const LqrDiagnostic d = lqr_diagnostic(Z, 2);
  CHECK(oracle::spectral_radius(closed_loop(Z, d.K)) < 1.0);
  CHECK(oracle::lambda_min(d.P) >= 1.0 - 1e-7);
}

TEST_CASE("verify_lyapunov: dead-beat closed loop passes") {
  const Matrix Z = scalar_stack(0.5, 1.0);
  const Matrix K = Matrix::Constant(1, 1, -0.5);
  CHECK(verify_lyapunov(Z, K, Matrix::Constant(1, 1, 3.0), 0.5));
  Matrix Z2(4, 2);
  Z2 << 0.2, 0.1, -0.3, 0.4, 1, 0, 0, 1;
  const Matrix K2 = -Z2.topRows(2).transpose();
  Matrix P(2, 2);
  P << 2, 0.5, 0.5, 1;
  CHECK(verify_lyapunov(Z2, K2, P, 0.5));
}

TEST_CASE("verify_lyapunov: identity closed loop fails") {
  const Matrix Z = scalar_stack(1.0, 1.0);
  CHECK_FALSE(verify_lyapunov(Z, Matrix::Zero(1, 1), Matrix::Identity(1, 1), 0.9));
  CHECK(std::abs(lyapunov_residual(Z, Matrix::Zero(1, 1), Matrix::Identity(1, 1), 0.9) - 0.1) <= 1e-12);
}

TEST_CASE("gain bound audit") {
  CHECK(gain_bound_audit({Matrix::Zero(2, 2)}) == 0.0);
  Matrix K(2, 2);
  K << 3, 4, 0, 0;
  CHECK(std::abs(gain_bound_audit({K}) - 5.0) <= 1e-12);
  CHECK(std::abs(gain_bound_audit({Matrix::Zero(2, 2), K, 0.5 * K}) - 5.0) <= 1e-12);
}
