#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddc/linalg.hpp"

namespace ddc {

struct SystemModel {
  Matrix A;
  Matrix B;

  SystemModel() = default;
  SystemModel(Matrix a, Matrix b);  // throws InvalidInput on inconsistent shapes
  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }
  Matrix stacked() const { return stack_system(A, B); }  // Z = [A B]'
};

bool is_controllable(const SystemModel& sys, double rel_tol = 1e-10);

struct SignalWindow {
  std::vector<Vector> values;
  int t0 = 0;

  int length() const { return static_cast<int>(values.size()); }
  int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
  // dim x length matrix, one column per sample.
  Matrix as_matrix() const;
  static SignalWindow from_matrix(const Matrix& columns, int t0 = 0);
};

// Uniform samples in [lo, hi] per entry.
SignalWindow uniform_signal(int dim, int length, double lo, double hi, std::mt19937_64& rng);

// Point uniformly distributed in the Euclidean ball of the given radius.
Vector sample_ball(int dim, double radius, std::mt19937_64& rng);

// States x(0..T) with x(t+1) = A x(t) + B u(t) (+ w(t), ||w(t)|| <= noise_bound).
SignalWindow simulate_open_loop(const SystemModel& sys, const Vector& x0, const SignalWindow& inputs,
                                std::optional<double> noise_bound = std::nullopt,
                                std::uint64_t noise_seed = 0);

// Block Hankel matrix with L block rows; column k is [x(k); ...; x(k+L-1)].
Matrix hankel(const SignalWindow& signal, int L);

struct PeCheck {
  bool exciting = false;
  std::string reason;  // "ok", "too_short", "rank_deficient", "empty"
  int rank = 0;
  int required_rank = 0;
};

PeCheck check_persistent_excitation(const SignalWindow& signal, int L, double rank_tol = 1e-8);
bool is_persistently_exciting(const SignalWindow& signal, int L, double rank_tol = 1e-8);

struct DataBatch {
  Matrix U0, X0, X1, W0;
  int T = 0;
  bool pe_certified = false;
  int nx() const { return static_cast<int>(X0.rows()); }
  int nu() const { return static_cast<int>(U0.rows()); }
};

DataBatch build_data_batch(const SignalWindow& inputs, const SignalWindow& states, double rank_tol = 1e-8);

// Z_tr = (X1 W0^+)', W0^+ by SVD. Throws NotIdentifiable if rank(W0) < nx + nu.
Matrix recover_system(const DataBatch& batch, double rank_tol = 1e-8);

// One CSV per matrix (U0.csv, X0.csv, X1.csv, W0.csv) in an existing directory.
void write_data_batch(const std::string& dir, const DataBatch& batch);
DataBatch read_data_batch(const std::string& dir, double rank_tol = 1e-8);

}  // namespace ddc
