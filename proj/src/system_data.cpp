#include "ddc/system_data.hpp"

#include <cmath>

#include "ddc/csv_io.hpp"
#include "ddc/errors.hpp"

namespace ddc {

SystemModel::SystemModel(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
  if (A.rows() == 0 || A.rows() != A.cols()) throw InvalidInput("SystemModel: A must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() == 0) throw InvalidInput("SystemModel: B must have n_x rows and n_u >= 1 columns");
}

bool is_controllable(const SystemModel& sys, double rel_tol) {
  const int n = sys.nx();
  Matrix ctrb(n, n * sys.nu());
  Matrix blk = sys.B;
  for (int i = 0; i < n; ++i) {
    ctrb.middleCols(i * sys.nu(), sys.nu()) = blk;
    blk = sys.A * blk;
  }
  return numerical_rank(ctrb, rel_tol) == n;
}

Matrix SignalWindow::as_matrix() const {
  Matrix m(dim(), length());
  for (int k = 0; k < length(); ++k) m.col(k) = values[static_cast<std::size_t>(k)];
  return m;
}

SignalWindow SignalWindow::from_matrix(const Matrix& columns, int t0) {
  SignalWindow s;
  s.t0 = t0;
  for (Eigen::Index k = 0; k < columns.cols(); ++k) s.values.push_back(columns.col(k));
  return s;
}

SignalWindow uniform_signal(int dim, int length, double lo, double hi, std::mt19937_64& rng) {
  if (dim <= 0 || length <= 0 || !(lo <= hi)) throw InvalidInput("uniform_signal: bad arguments");
  std::uniform_real_distribution<double> u(lo, hi);
  SignalWindow s;
  for (int k = 0; k < length; ++k) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = u(rng);
    s.values.push_back(v);
  }
  return s;
}

Vector sample_ball(int dim, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) v(i) = n(rng);
    norm = v.norm();
  } while (norm == 0.0);
  return v * (radius * std::pow(u(rng), 1.0 / dim) / norm);
}

SignalWindow simulate_open_loop(const SystemModel& sys, const Vector& x0, const SignalWindow& inputs,
                                std::optional<double> noise_bound, std::uint64_t noise_seed) {
  if (x0.size() != sys.nx()) throw InvalidInput("simulate_open_loop: x0 dimension mismatch");
  for (const auto& u : inputs.values)
    if (u.size() != sys.nu()) throw InvalidInput("simulate_open_loop: input dimension mismatch");
  if (noise_bound && *noise_bound < 0.0) throw InvalidInput("simulate_open_loop: negative noise bound");
  std::mt19937_64 rng(noise_seed);
  SignalWindow x;
  x.t0 = inputs.t0;
  x.values.push_back(x0);
  for (const auto& u : inputs.values) {
    Vector next = sys.A * x.values.back() + sys.B * u;
    if (noise_bound && *noise_bound > 0.0) next += sample_ball(sys.nx(), *noise_bound, rng);
    x.values.push_back(next);
  }
  return x;
}

Matrix hankel(const SignalWindow& signal, int L) {
  const int T = signal.length();
  if (L <= 0 || L > T) throw InvalidInput("hankel: need 1 <= L <= T");
  const int n = signal.dim();
  Matrix H(n * L, T - L + 1);
  for (int i = 0; i < L; ++i)
    for (int k = 0; k <= T - L; ++k) H.block(i * n, k, n, 1) = signal.values[static_cast<std::size_t>(k + i)];
  return H;
}

PeCheck check_persistent_excitation(const SignalWindow& signal, int L, double rank_tol) {
  PeCheck r;
  if (signal.length() == 0 || L <= 0) {
    r.reason = "empty";
    return r;
  }
  const int n = signal.dim();
  r.required_rank = n * L;
  if (signal.length() < (n + 1) * L - 1) {
    r.reason = "too_short";
    return r;
  }
  r.rank = numerical_rank(hankel(signal, L), rank_tol);
  r.exciting = r.rank == r.required_rank;
  r.reason = r.exciting ? "ok" : "rank_deficient";
  return r;
}

bool is_persistently_exciting(const SignalWindow& signal, int L, double rank_tol) {
  return check_persistent_excitation(signal, L, rank_tol).exciting;
}

DataBatch build_data_batch(const SignalWindow& inputs, const SignalWindow& states, double rank_tol) {
  if (inputs.length() == 0 || states.length() != inputs.length() + 1)
    throw InvalidInput("build_data_batch: need states.length == inputs.length + 1");
  DataBatch b;
  b.T = inputs.length();
  const Matrix X = states.as_matrix();
  b.U0 = inputs.as_matrix();
  b.X0 = X.leftCols(b.T);
  b.X1 = X.rightCols(b.T);
  b.W0.resize(b.X0.rows() + b.U0.rows(), b.T);
  b.W0 << b.X0, b.U0;
  b.pe_certified = is_persistently_exciting(inputs, b.nx() + 1, rank_tol);
  return b;
}

Matrix recover_system(const DataBatch& batch, double rank_tol) {
  const int need = batch.nx() + batch.nu();
  if (numerical_rank(batch.W0, rank_tol) < need)
    throw NotIdentifiable("recover_system: rank(W0) < n_x + n_u");
  return (batch.X1 * pinv(batch.W0, 1e-10)).transpose();
}

void write_data_batch(const std::string& dir, const DataBatch& batch) {
  write_matrix_csv(dir + "/U0.csv", batch.U0);
  write_matrix_csv(dir + "/X0.csv", batch.X0);
  write_matrix_csv(dir + "/X1.csv", batch.X1);
  write_matrix_csv(dir + "/W0.csv", batch.W0);
}

DataBatch read_data_batch(const std::string& dir, double rank_tol) {
  DataBatch b;
  b.U0 = read_matrix_csv(dir + "/U0.csv");
  b.X0 = read_matrix_csv(dir + "/X0.csv");
  b.X1 = read_matrix_csv(dir + "/X1.csv");
  b.W0 = read_matrix_csv(dir + "/W0.csv");
  b.T = static_cast<int>(b.U0.cols());
  if (b.X0.cols() != b.T || b.X1.cols() != b.T || b.W0.cols() != b.T || b.X1.rows() != b.X0.rows() ||
      b.W0.rows() != b.X0.rows() + b.U0.rows())
    throw InvalidInput("read_data_batch: inconsistent matrix shapes");
  Matrix stacked(b.W0.rows(), b.T);
  stacked << b.X0, b.U0;
  if (stacked != b.W0) throw InvalidInput("read_data_batch: W0 is not [X0; U0]");
  b.pe_certified = is_persistently_exciting(SignalWindow::from_matrix(b.U0), b.nx() + 1, rank_tol);
  return b;
}

}  // namespace ddc
