#pragma once

#include <string>
#include <vector>

#include "ddc/consistency_sets.hpp"
#include "ddc/linalg.hpp"
#include "ddc/sdp.hpp"

namespace ddc {

struct SynthesisParams {
  double eps1 = 0.9;  // Lyapunov contraction, in (0, 1)
  double eps2 = 1.0;  // weight on ||Q||, > 0
  void validate() const;
};

struct ControllerSolution {
  double gamma = 0.0;
  Matrix P, Y, L, Q, K;
  double q = 0.0;  // spectral-norm bound on Q
  sdp::Status status = sdp::Status::NumericalFailure;
  sdp::SolverStats stats;
  double solve_seconds = 0.0;
};

struct SynthesisSettings {
  double definiteness_margin = 1e-7;
  sdp::SolverSettings solver;
};

// Robust gain for every system of a bounded region. Throws SynthesisInfeasible
// (carrying the solver status) when the SDP has no optimal solution.
ControllerSolution synthesize(const MatrixEllipsoid& region, const SynthesisParams& params,
                              const SynthesisSettings& settings = {});

sdp::Problem synthesis_problem(const MatrixEllipsoid& region, const SynthesisParams& params,
                               const SynthesisSettings& settings, sdp::AffineMatrix* objective);

// Largest eigenvalue of the first synthesis LMI at (P, Y): <= 0 means the
// robust Lyapunov condition holds for the whole region.
double robust_lmi_residual(const MatrixEllipsoid& region, double eps1, const Matrix& P, const Matrix& Y);

// Violations of the ControllerSolution invariants; empty when all hold.
std::vector<std::string> check_solution(const ControllerSolution& s, double eps2, double tol = 1e-7);

struct LqrDiagnostic {
  double gamma = 0.0;
  Matrix P, Y, L, K;
};

// Data-driven LQR SDP for a single known system Z = [A B]'.
LqrDiagnostic lqr_diagnostic(const Matrix& Z, int nx, const sdp::SolverSettings& settings = {});

// lambda_max((A+BK)P(A+BK)' - P - (eps1-1)P).
double lyapunov_residual(const Matrix& Z, const Matrix& K, const Matrix& P, double eps1);
bool verify_lyapunov(const Matrix& Z, const Matrix& K, const Matrix& P, double eps1, double tol = 1e-7);

double gain_bound_audit(const std::vector<Matrix>& gains);

// P/Y/L/Q/K CSVs plus meta.json (gamma, status, timings).
void write_controller(const std::string& dir, const ControllerSolution& s);

}  // namespace ddc
