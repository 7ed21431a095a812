#include "ddc/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"

namespace ddc {

void SynthesisParams::validate() const {
  if (!(eps1 > 0.0 && eps1 < 1.0)) throw InvalidInput("eps1 must lie in (0, 1)");
  if (!(eps2 > 0.0)) throw InvalidInput("eps2 must be positive");
}

sdp::Problem synthesis_problem(const MatrixEllipsoid& region, const SynthesisParams& params,
                               const SynthesisSettings& settings, sdp::AffineMatrix* objective) {
  using namespace sdp;
  params.validate();
  const int nz = region.stacked_dim(), nx = region.nx(), nu = nz - nx;
  if (nu <= 0) throw InvalidInput("synthesize: region has no input part");
  if (!region.bounded || !(min_eig(region.A) > 0.0))
    throw InvalidInput("synthesize: region must be bounded (A > 0)");

  Problem p;
  const AffineMatrix P = p.symmetric("P", nx);
  const AffineMatrix Y = p.matrix("Y", nu, nx);
  const AffineMatrix L = p.symmetric("L", nu);
  const AffineMatrix Q = p.symmetric("Q", nx);
  const AffineMatrix gamma = p.scalar("gamma");
  const AffineMatrix q = p.scalar("q");
  const Matrix Inx = Matrix::Identity(nx, nx);

  // The robust Lyapunov LMI
  //   [[-eps1 P - C, 0, B'], [*, -P, [P Y']], [*, *, -A]] <= 0
  // is posed after the congruence that moves the region to its center Zc and
  // shape factor A = F F': with W = [P; Y] and R = B'A^{-1}B - C it reads
  //   [[R - eps1 P, -Zc'W, 0], [*, -P, W'F^{-T}], [*, *, -I]] <= 0.
  // Same feasible set; the original form cancels large entries when the
  // region is thin in some direction.
  const Matrix Zc = region.center();
  const Matrix R = region.radius_matrix();
  Eigen::LLT<Matrix> chol(symmetrize(region.A));
  const Matrix Finv = chol.matrixL().solve(Matrix::Identity(nz, nz));  // F^{-1}
  const AffineMatrix W = vcat({P, Y});
  p.add(nsd({{AffineMatrix(R) - params.eps1 * P, -(Matrix(Zc.transpose()) * W), AffineMatrix::zero(nx, nz)},
             {std::nullopt, -P, W.transpose() * Matrix(Finv.transpose())},
             {std::nullopt, std::nullopt, AffineMatrix(Matrix(-Matrix::Identity(nz, nz)))}},
            0.0, "robust_lyapunov"));
  p.add(psd({{P}}, settings.definiteness_margin, "P_pd"));
  p.add(psd({{L, Y}, {std::nullopt, P}}, 0.0, "L_bound"));
  p.add(psd({{Q, AffineMatrix(Inx)}, {std::nullopt, P}}, 0.0, "Q_bound"));
  p.add(psd({{scalar_times(q, Inx), Q}, {std::nullopt, scalar_times(q, Inx)}}, 0.0, "Q_norm"));
  p.add(psd({{gamma - trace(P) - trace(L) - params.eps2 * q}}, 0.0, "cost"));
  if (objective) *objective = gamma;
  return p;
}

ControllerSolution synthesize(const MatrixEllipsoid& region, const SynthesisParams& params,
                              const SynthesisSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  sdp::AffineMatrix obj;
  const sdp::Problem p = synthesis_problem(region, params, settings, &obj);
  const sdp::SdpSolution sol = sdp::solve_linear_sdp(p, obj, settings.solver);
  ControllerSolution s;
  s.status = sol.status;
  s.stats = sol.stats;
  s.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sol.status != sdp::Status::Optimal)
    throw SynthesisInfeasible(std::string("controller SDP: ") + sdp::to_string(sol.status) +
                                  (sol.stats.message.empty() ? "" : " (" + sol.stats.message + ")"),
                              sol.status);
  s.gamma = sol.at("gamma")(0, 0);
  s.q = sol.at("q")(0, 0);
  s.P = sol.at("P");
  s.Y = sol.at("Y");
  s.L = sol.at("L");
  s.Q = sol.at("Q");
  s.K = right_solve_spd(s.Y, s.P);
  return s;
}

double robust_lmi_residual(const MatrixEllipsoid& region, double eps1, const Matrix& P, const Matrix& Y) {
  const int nz = region.stacked_dim(), nx = region.nx();
  const int n = nx + nx + nz;
  Matrix M = Matrix::Zero(n, n);
  Matrix PY(nx, nz);
  PY << P, Y.transpose();
  M.block(0, 0, nx, nx) = -eps1 * P - region.C;
  M.block(0, 2 * nx, nx, nz) = region.B.transpose();
  M.block(nx, nx, nx, nx) = -P;
  M.block(nx, 2 * nx, nx, nz) = PY;
  M.block(2 * nx, 2 * nx, nz, nz) = -region.A;
  M.block(2 * nx, 0, nz, nx) = region.B;
  M.block(2 * nx, nx, nz, nx) = PY.transpose();
  return max_eig(M);
}

std::vector<std::string> check_solution(const ControllerSolution& s, double eps2, double tol) {
  std::vector<std::string> bad;
  const Matrix K = right_solve_spd(s.Y, s.P);
  if ((K - s.K).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, K.cwiseAbs().maxCoeff()))
    bad.push_back("K != Y P^-1");
  if (s.P.trace() + s.L.trace() + eps2 * spectral_norm(s.Q) > s.gamma + tol) bad.push_back("cost bound");
  const auto nx = s.P.rows(), nu = s.L.rows();
  Matrix LY(nu + nx, nu + nx);
  LY << s.L, s.Y, s.Y.transpose(), s.P;
  if (min_eig(LY) < -tol) bad.push_back("[[L,Y],[Y',P]] not PSD");
  Matrix QI(2 * nx, 2 * nx);
  QI << s.Q, Matrix::Identity(nx, nx), Matrix::Identity(nx, nx), s.P;
  if (min_eig(QI) < -tol) bad.push_back("[[Q,I],[I,P]] not PSD");
  if ((s.P - s.P.transpose()).cwiseAbs().maxCoeff() > 1e-9) bad.push_back("P not symmetric");
  return bad;
}

LqrDiagnostic lqr_diagnostic(const Matrix& Z, int nx, const sdp::SolverSettings& settings) {
  using namespace sdp;
  const int nu = static_cast<int>(Z.rows()) - nx;
  if (nx <= 0 || nu <= 0 || Z.cols() != nx) throw InvalidInput("lqr_diagnostic: Z has wrong shape");
  const Matrix A = state_part(Z, nx), B = input_part(Z, nx);
  Problem p;
  const AffineMatrix P = p.symmetric("P", nx);
  const AffineMatrix Y = p.matrix("Y", nu, nx);
  const AffineMatrix L = p.symmetric("L", nu);
  const AffineMatrix gamma = p.scalar("gamma");
  const Matrix Inx = Matrix::Identity(nx, nx);
  // (AP + BY) P^{-1} (AP + BY)' <= P - I  <=>  [[P - I, AP + BY], [*, P]] >= 0
  p.add(psd({{P - AffineMatrix(Inx), A * P + B * Y}, {std::nullopt, P}}, 0.0, "lqr_lyapunov"));
  p.add(psd({{P - AffineMatrix(Inx)}}, 0.0, "P_ge_I"));
  p.add(psd({{L, Y}, {std::nullopt, P}}, 0.0, "L_bound"));
  p.add(psd({{gamma - trace(P) - trace(L)}}, 0.0, "cost"));
  const SdpSolution sol = solve_linear_sdp(p, gamma, settings);
  if (sol.status != Status::Optimal)
    throw SynthesisInfeasible(std::string("LQR diagnostic SDP: ") + to_string(sol.status) +
                                  " (uncontrollable or numerical trouble)",
                              sol.status);
  LqrDiagnostic d;
  d.gamma = sol.at("gamma")(0, 0);
  d.P = sol.at("P");
  d.Y = sol.at("Y");
  d.L = sol.at("L");
  d.K = right_solve_spd(d.Y, d.P);
  return d;
}

double lyapunov_residual(const Matrix& Z, const Matrix& K, const Matrix& P, double eps1) {
  const int nx = static_cast<int>(P.rows());
  const Matrix Acl = state_part(Z, nx) + input_part(Z, nx) * K;
  return max_eig(Acl * P * Acl.transpose() - P - (eps1 - 1.0) * P);
}

bool verify_lyapunov(const Matrix& Z, const Matrix& K, const Matrix& P, double eps1, double tol) {
  if (!(min_eig(P) > 0.0)) throw InvalidInput("verify_lyapunov: P must be positive definite");
  return lyapunov_residual(Z, K, P, eps1) <= tol;
}

double gain_bound_audit(const std::vector<Matrix>& gains) {
  double m = 0.0;
  for (const auto& K : gains) m = std::max(m, spectral_norm(K));
  return m;
}

void write_controller(const std::string& dir, const ControllerSolution& s) {
  write_matrix_csv(dir + "/P.csv", s.P);
  write_matrix_csv(dir + "/Y.csv", s.Y);
  write_matrix_csv(dir + "/L.csv", s.L);
  write_matrix_csv(dir + "/Q.csv", s.Q);
  write_matrix_csv(dir + "/K.csv", s.K);
  nlohmann::json meta = {{"gamma", s.gamma},
                         {"q", s.q},
                         {"status", sdp::to_string(s.status)},
                         {"solve_seconds", s.solve_seconds},
                         {"newton_steps", s.stats.newton_steps},
                         {"duality_gap", s.stats.duality_gap}};
  std::ofstream(dir + "/controller_meta.json") << meta.dump(2) << "\n";
}

}  // namespace ddc
