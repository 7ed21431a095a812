#include "ddc/consistency_sets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"
#include "ddc/system_data.hpp"

namespace ddc {

Matrix MatrixEllipsoid::qmi(const Matrix& Z) const {
  if (Z.rows() != A.rows() || Z.cols() != B.cols()) throw InvalidInput("MatrixEllipsoid: Z has wrong shape");
  const Matrix ZB = Z.transpose() * B;
  return symmetrize(Z.transpose() * A * Z + ZB + ZB.transpose() + C);
}

double MatrixEllipsoid::residual(const Matrix& Z) const { return max_eig(qmi(Z)); }

Matrix MatrixEllipsoid::center() const {
  Eigen::LLT<Matrix> llt(symmetrize(A));
  if (llt.info() != Eigen::Success) throw InvalidInput("MatrixEllipsoid::center: A is not positive definite");
  return -llt.solve(B);
}

Matrix MatrixEllipsoid::radius_matrix() const {
  Eigen::LLT<Matrix> llt(symmetrize(A));
  if (llt.info() != Eigen::Success) throw InvalidInput("MatrixEllipsoid::radius_matrix: A is not positive definite");
  return symmetrize(B.transpose() * llt.solve(B) - C);
}

MatrixEllipsoid MatrixEllipsoid::scaled(double c) const {
  if (!(c > 0.0)) throw InvalidInput("MatrixEllipsoid::scaled: factor must be positive");
  return {c * A, c * B, c * C, bounded};
}

MatrixEllipsoid ball_from_offline(const Matrix& Z_tr, double delta) {
  if (!(delta >= 0.0)) throw InvalidInput("ball_from_offline: delta must be nonnegative");
  const auto nz = Z_tr.rows(), nx = Z_tr.cols();
  return {Matrix::Identity(nz, nz), -Z_tr,
          symmetrize(Z_tr.transpose() * Z_tr) - delta * delta * Matrix::Identity(nx, nx), true};
}

MatrixEllipsoid one_step_set(const Vector& x_prev, const Vector& u_prev, const Vector& x_next,
                             std::optional<double> noise_bound) {
  if (x_next.size() != x_prev.size()) throw InvalidInput("one_step_set: state dimensions differ");
  if (noise_bound && *noise_bound < 0.0) throw InvalidInput("one_step_set: negative noise bound");
  Vector w(x_prev.size() + u_prev.size());
  w << x_prev, u_prev;
  MatrixEllipsoid e;
  e.A = w * w.transpose();
  e.B = -w * x_next.transpose();
  e.C = x_next * x_next.transpose();
  if (noise_bound) e.C -= (*noise_bound) * (*noise_bound) * Matrix::Identity(x_next.size(), x_next.size());
  e.bounded = false;
  return e;
}

namespace {

MatrixEllipsoid normalized_step(const MatrixEllipsoid& s, double floor) {
  const double scale = std::max({spectral_norm(s.A), spectral_norm(s.B), spectral_norm(s.C)});
  MatrixEllipsoid n = scale > 0.0 ? s.scaled(1.0 / scale) : s;
  n.C -= floor * floor * Matrix::Identity(s.nx(), s.nx());
  return n;
}

// Same set in coordinates Z - Z0.
MatrixEllipsoid shifted(const MatrixEllipsoid& s, const Matrix& Z0) {
  MatrixEllipsoid r = s;
  r.B = s.B + s.A * Z0;
  r.C = symmetrize(s.C + Z0.transpose() * s.B + s.B.transpose() * Z0 + Z0.transpose() * s.A * Z0);
  return r;
}

}  // namespace

sdp::Problem intersection_problem(const MatrixEllipsoid& ball, const MatrixEllipsoid& one_step,
                                  const IntersectionSettings& settings) {
  using namespace sdp;
  if (ball.A.rows() != one_step.A.rows() || ball.nx() != one_step.nx())
    throw InvalidInput("intersect_min_volume: ball and one-step set have different shapes");
  if (!ball.bounded) throw InvalidInput("intersect_min_volume: ball must be bounded");
  const int nz = ball.stacked_dim(), nx = ball.nx();
  // Posed around the ball center so the center offset stays O(delta).
  const Matrix Z0 = ball.center();
  const MatrixEllipsoid bl = shifted(ball, Z0);
  const MatrixEllipsoid st = normalized_step(shifted(one_step, Z0), settings.noise_floor);

  Problem p;
  const AffineMatrix Ab = p.symmetric("Abar", nz);
  const AffineMatrix Bb = p.matrix("Bbar", nz, nx);
  const AffineMatrix t1 = p.scalar("tau_ball");
  const AffineMatrix t2 = p.scalar("tau_step");
  const Matrix Inx = Matrix::Identity(nx, nx);

  const AffineMatrix b00 = AffineMatrix(-Inx) - scalar_times(t1, bl.C) - scalar_times(t2, st.C);
  const AffineMatrix b01 =
      Bb.transpose() - scalar_times(t1, bl.B.transpose()) - scalar_times(t2, st.B.transpose());
  const AffineMatrix b11 = Ab - scalar_times(t1, bl.A) - scalar_times(t2, st.A);
  p.add(nsd({{b00, b01, Bb.transpose()},
             {std::nullopt, b11, AffineMatrix::zero(nz, nz)},
             {std::nullopt, std::nullopt, -Ab}},
            0.0, "containment"));
  p.add(psd({{Ab}}, settings.definiteness_margin, "Abar_pd"));
  p.add(psd({{t1}}, 0.0, "tau_ball_nonneg"));
  p.add(psd({{t2}}, 0.0, "tau_step_nonneg"));
  return p;
}

IntersectionResult intersect_min_volume(const MatrixEllipsoid& ball, const MatrixEllipsoid& one_step,
                                        const IntersectionSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const sdp::Problem p = intersection_problem(ball, one_step, settings);
  const sdp::SdpSolution sol = sdp::solve_logdet_sdp(p, "Abar", settings.solver);
  IntersectionResult r;
  r.status = sol.status;
  r.stats = sol.stats;
  r.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (sol.status != sdp::Status::Optimal)
    throw IntersectionFailed(std::string("intersection SDP: ") + sdp::to_string(sol.status) +
                                 (sol.stats.message.empty() ? "" : " (" + sol.stats.message + ")"),
                             sol.status);
  const Matrix& Ab = sol.at("Abar");
  const Matrix Bb = sol.at("Bbar") - Ab * ball.center();
  Eigen::LLT<Matrix> llt(Ab);
  r.set.A = Ab;
  r.set.B = Bb;
  r.set.C = symmetrize(Bb.transpose() * llt.solve(Bb)) - Matrix::Identity(ball.nx(), ball.nx());
  r.set.bounded = true;
  r.tau_ball = sol.at("tau_ball")(0, 0);
  r.tau_step = sol.at("tau_step")(0, 0);
  r.log_det = sol.objective;
  return r;
}

std::vector<Matrix> sample_frobenius_ball(const Matrix& Z_c, double delta, int count, std::mt19937_64& rng) {
  std::vector<Matrix> out;
  const auto nz = Z_c.rows(), nx = Z_c.cols();
  for (int i = 0; i < count; ++i) {
    const Vector v = sample_ball(static_cast<int>(nz * nx), delta, rng);
    out.push_back(Z_c + Eigen::Map<const Matrix>(v.data(), nz, nx));
  }
  return out;
}

std::vector<Matrix> sample_slice_in_ball(const Matrix& Z_c, double delta, const Vector& w,
                                         const Vector& x_next, int count, std::mt19937_64& rng,
                                         int max_draws) {
  std::vector<Matrix> out;
  const auto nz = Z_c.rows(), nx = Z_c.cols();
  const double wn = w.norm();
  if (wn == 0.0) {
    if (x_next.norm() > 0.0) return out;
    for (int d = 0; d < max_draws && static_cast<int>(out.size()) < count; ++d) {
      Matrix Z = sample_frobenius_ball(Z_c, delta * std::sqrt(static_cast<double>(nx)), 1, rng)[0];
      if (spectral_norm(Z - Z_c) <= delta) out.push_back(Z);
    }
    return out;
  }
  const Vector r = x_next - Z_c.transpose() * w;
  const Matrix Z0 = Z_c + w * r.transpose() / (wn * wn);
  if (r.norm() / wn > delta) return out;
  // Orthonormal basis of the complement of w.
  Eigen::HouseholderQR<Matrix> qr{Matrix(w)};
  const Matrix Q = qr.householderQ();
  const Matrix U = Q.rightCols(nz - 1);
  const auto k = nz - 1;
  if (k == 0) {
    out.assign(static_cast<std::size_t>(count), Z0);
    return out;
  }
  const double radius = delta * std::sqrt(static_cast<double>(std::min<Eigen::Index>(k, nx)));
  for (int d = 0; d < max_draws && static_cast<int>(out.size()) < count; ++d) {
    const Vector v = sample_ball(static_cast<int>(k * nx), radius, rng);
    const Matrix Z = Z0 + U * Eigen::Map<const Matrix>(v.data(), k, nx);
    if (spectral_norm(Z - Z_c) <= delta) out.push_back(Z);
  }
  return out;
}

void write_ellipsoid(const std::string& dir, const std::string& prefix, const MatrixEllipsoid& e, int step) {
  write_matrix_csv(dir + "/" + prefix + "A.csv", e.A);
  write_matrix_csv(dir + "/" + prefix + "B.csv", e.B);
  write_matrix_csv(dir + "/" + prefix + "C.csv", e.C);
  nlohmann::json meta = {{"bounded", e.bounded}, {"step", step}};
  std::ofstream(dir + "/" + prefix + "meta.json") << meta.dump(2) << "\n";
}

MatrixEllipsoid read_ellipsoid(const std::string& dir, const std::string& prefix, int* step) {
  MatrixEllipsoid e;
  e.A = read_matrix_csv(dir + "/" + prefix + "A.csv");
  e.B = read_matrix_csv(dir + "/" + prefix + "B.csv");
  e.C = read_matrix_csv(dir + "/" + prefix + "C.csv");
  std::ifstream is(dir + "/" + prefix + "meta.json");
  const auto meta = nlohmann::json::parse(is);
  e.bounded = meta.at("bounded").get<bool>();
  if (step) *step = meta.at("step").get<int>();
  return e;
}

}  // namespace ddc
