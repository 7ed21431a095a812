#include <doctest.h>

#include <filesystem>
#include <random>

#include "ddc/errors.hpp"
#include "ddc/system_data.hpp"
#include "oracles.hpp"

using namespace ddc;

namespace {

SignalWindow scalar_signal(const std::vector<double>& v) {
  SignalWindow s;
  for (double x : v) s.values.push_back(Vector::Constant(1, x));
  return s;
}

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) m(i, j++) = x;
    ++i;
  }
  return m;
}

SystemModel random_system(int nx, int nu, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    Matrix A = Matrix::NullaryExpr(nx, nx, [&]() { return u(rng); });
    Matrix B = Matrix::NullaryExpr(nx, nu, [&]() { return u(rng); });
    SystemModel s(A, B);
    if (is_controllable(s)) return s;
  }
}

}  // namespace

TEST_CASE("simulate_open_loop: identity map with zero input map holds the state") {
  SystemModel s(Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  std::mt19937_64 rng(3);
  const SignalWindow u = uniform_signal(1, 3, -1, 1, rng);
  const SignalWindow x = simulate_open_loop(s, Vector::Ones(2), u);
  REQUIRE(x.length() == 4);
  for (const auto& v : x.values) CHECK(v == Vector::Ones(2));
}

TEST_CASE("simulate_open_loop: zero state map feeds the input through") {
  SystemModel s(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  SignalWindow u;
  Vector u0(2);
  u0 << 2, 3;
  u.values.push_back(u0);
  const SignalWindow x = simulate_open_loop(s, Vector::Zero(2), u);
  CHECK(x.values[1] == u0);
}

TEST_CASE("simulate_open_loop: dimension mismatches are rejected") {
  SystemModel s(Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  CHECK_THROWS_AS(simulate_open_loop(s, Vector::Zero(3), SignalWindow{}), InvalidInput);
  SignalWindow wide;
  wide.values.push_back(Vector::Zero(2));
  CHECK_THROWS_AS(simulate_open_loop(s, Vector::Zero(2), wide), InvalidInput);
  CHECK_THROWS_AS(SystemModel(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), InvalidInput);
}

TEST_CASE("simulate_open_loop: noise stays inside the bound") {
  std::mt19937_64 rng(11);
  SystemModel s = random_system(3, 2, rng);
  s.A *= 0.5 / std::max(1.0, oracle::spectral_norm(s.A));
  const SignalWindow u = uniform_signal(2, 200, -1, 1, rng);
  const double wbar = 0.05;
  const SignalWindow x = simulate_open_loop(s, Vector::Ones(3), u, wbar, 5);
  for (int t = 0; t < u.length(); ++t) {
    const Vector r = x.values[t + 1] - s.A * x.values[t] - s.B * u.values[t];
    CHECK(r.norm() <= wbar + 1e-12);
  }
}

TEST_CASE("hankel: scalar definition unrolled") {
  const Matrix H = hankel(scalar_signal({1, 2, 3, 4}), 2);
  CHECK(H == mat({{1, 2, 3}, {2, 3, 4}}));
}

TEST_CASE("hankel: constant signal has equal columns") {
  const Matrix H = hankel(scalar_signal({2.5, 2.5, 2.5, 2.5, 2.5}), 3);
  for (Eigen::Index k = 1; k < H.cols(); ++k) CHECK(H.col(k) == H.col(0));
}

TEST_CASE("hankel: periodic impulse has rank 3") {
  const Matrix H = hankel(scalar_signal({1, 0, 0, 1, 0, 0, 1}), 3);
  REQUIRE(H.rows() == 3);
  REQUIRE(H.cols() == 5);
  CHECK(oracle::lu_rank(H) == 3);
  CHECK(numerical_rank(H) == 3);
}

TEST_CASE("hankel: L larger than the window is rejected") {
  CHECK_THROWS_AS(hankel(scalar_signal({1, 2}), 3), InvalidInput);
}

TEST_CASE("hankel: block row i is the depth-one Hankel shifted by i columns") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 3, T = 12 + trial, L = 1 + trial % 5;
    const SignalWindow s = uniform_signal(n, T, -1, 1, rng);
    const Matrix H = hankel(s, L);
    const Matrix H1 = hankel(s, 1);
    for (int i = 0; i < L; ++i) CHECK(H.block(i * n, 0, n, H.cols()) == H1.middleCols(i, H.cols()));
  }
}

TEST_CASE("persistent excitation: constant scalar is not exciting of order 2") {
  const PeCheck c = check_persistent_excitation(scalar_signal({1, 1, 1, 1, 1, 1}), 2);
  CHECK_FALSE(c.exciting);
  CHECK(c.reason == "rank_deficient");
  CHECK(c.rank == 1);
}

TEST_CASE("persistent excitation: impulses against the rank oracle") {
  // A unit impulse at t = 0 leaves the second Hankel row identically zero, so it
  // is not exciting of order 2; one step later it is.
  const SignalWindow at0 = scalar_signal({1, 0, 0, 0, 0, 0});
  const SignalWindow at1 = scalar_signal({0, 1, 0, 0, 0, 0});
  CHECK(is_persistently_exciting(at0, 2) == (oracle::lu_rank(hankel(at0, 2)) == 2));
  CHECK_FALSE(is_persistently_exciting(at0, 2));
  CHECK(is_persistently_exciting(at1, 2) == (oracle::lu_rank(hankel(at1, 2)) == 2));
  CHECK(is_persistently_exciting(at1, 2));
}

TEST_CASE("persistent excitation: short windows report a reason") {
  const PeCheck c = check_persistent_excitation(scalar_signal({1, 0}), 2);
  CHECK_FALSE(c.exciting);
  CHECK(c.reason == "too_short");
  CHECK(check_persistent_excitation(SignalWindow{}, 2).reason == "empty");
}

TEST_CASE("persistent excitation: seeded two-channel input, T = 15, order 3") {
  std::mt19937_64 rng(1);
  const SignalWindow u = uniform_signal(2, 15, -0.3, 0.3, rng);
  CHECK(is_persistently_exciting(u, 3));
  CHECK(oracle::lu_rank(hankel(u, 3)) == 6);
}

TEST_CASE("persistent excitation: monotone in the order") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const int T = 4 + trial % 17;
    SignalWindow s = uniform_signal(n, T, -1, 1, rng);
    if (trial % 4 == 0) s.values[s.values.size() / 2].setZero();
    for (int L = 2; L <= T; ++L)
      if (is_persistently_exciting(s, L))
        for (int Lp = 1; Lp < L; ++Lp) CHECK(is_persistently_exciting(s, Lp));
  }
}

TEST_CASE("build_data_batch: single column") {
  SignalWindow u = scalar_signal({0.5});
  SignalWindow x = scalar_signal({1.0, 2.0});
  const DataBatch b = build_data_batch(u, x);
  CHECK(b.T == 1);
  CHECK(b.X0(0, 0) == 1.0);
  CHECK(b.X1(0, 0) == 2.0);
  CHECK(b.U0(0, 0) == 0.5);
  CHECK_THROWS_AS(build_data_batch(u, scalar_signal({1.0})), InvalidInput);
}

TEST_CASE("build_data_batch: W0 stacks X0 over U0 and X1 lags X0") {
  std::mt19937_64 rng(2);
  const SystemModel s = random_system(3, 2, rng);
  const SignalWindow u = uniform_signal(2, 12, -1, 1, rng);
  const SignalWindow x = simulate_open_loop(s, Vector::Ones(3), u);
  const DataBatch b = build_data_batch(u, x);
  CHECK(b.W0.topRows(3) == b.X0);
  CHECK(b.W0.bottomRows(2) == b.U0);
  CHECK(b.X1.leftCols(11) == b.X0.rightCols(11));
}

TEST_CASE("recover_system: scalar integrator with unit input gain") {
  SystemModel s(Matrix::Identity(1, 1), Matrix::Ones(1, 1));
  std::mt19937_64 rng(4);
  const SignalWindow u = uniform_signal(1, 6, -1, 1, rng);
  const DataBatch b = build_data_batch(u, simulate_open_loop(s, Vector::Zero(1), u));
  REQUIRE(b.pe_certified);
  const Matrix Z = recover_system(b);
  CHECK(std::abs(Z(0, 0) - 1.0) <= 1e-12);
  CHECK(std::abs(Z(1, 0) - 1.0) <= 1e-12);
}

TEST_CASE("recover_system: rank-deficient data is not identifiable") {
  SystemModel s(Matrix::Identity(2, 2), Matrix::Zero(2, 1));
  const SignalWindow u = scalar_signal({1, 1, 1, 1, 1});
  const DataBatch b = build_data_batch(u, simulate_open_loop(s, Vector::Zero(2), u));
  CHECK_FALSE(b.pe_certified);
  CHECK_THROWS_AS(recover_system(b), NotIdentifiable);
}

TEST_CASE("recover_system: round trip on random controllable systems") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const int nx = 1 + trial % 4, nu = 1 + trial % 2;
    const SystemModel s = random_system(nx, nu, rng);
    const SignalWindow u = uniform_signal(nu, (nu + 1) * (nx + 1) + 4, -1, 1, rng);
    const DataBatch b = build_data_batch(u, simulate_open_loop(s, Vector::Zero(nx), u));
    if (!b.pe_certified) continue;
    const Matrix Z = recover_system(b);
    CHECK((Z - s.stacked()).norm() <= 1e-8);
    CHECK((Z - oracle::least_squares_stack(b.W0, b.X1)).norm() <= 1e-8);
  }
}

TEST_CASE("recover_system: power-generator and engine models, seeded inputs") {
  struct Case {
    Matrix A, B;
    int T;
  };
  const std::vector<Case> cases = {
      {mat({{0, 1}, {-1, -1}}), mat({{0, 0}, {1, 1}}), 15},
      {mat({{0.867, 0, 0.202}, {0.015, 0.961, -0.032}, {0.026, 0, 0.803}}),
       mat({{0.011, 0}, {0.014, -0.039}, {0.009, 0}}), 21}};
  for (const auto& c : cases) {
    const SystemModel s(c.A, c.B);
    std::mt19937_64 rng(1);
    const SignalWindow u = uniform_signal(s.nu(), c.T, -0.3, 0.3, rng);
    const DataBatch b = build_data_batch(u, simulate_open_loop(s, Vector::Zero(s.nx()), u));
    CHECK(b.pe_certified);
    CHECK(oracle::lu_rank(b.W0) == s.nx() + s.nu());
    CHECK((recover_system(b) - s.stacked()).norm() <= 1e-8);
  }
}

TEST_CASE("data batch CSV round trip is exact") {
  std::mt19937_64 rng(9);
  const SystemModel s = random_system(2, 1, rng);
  const SignalWindow u = uniform_signal(1, 8, -1, 1, rng);
  const DataBatch b = build_data_batch(u, simulate_open_loop(s, Vector::Ones(2), u));
  const auto dir = std::filesystem::temp_directory_path() / "ddc_batch_roundtrip";
  std::filesystem::create_directories(dir);
  write_data_batch(dir.string(), b);
  const DataBatch r = read_data_batch(dir.string());
  CHECK(r.U0 == b.U0);
  CHECK(r.X0 == b.X0);
  CHECK(r.X1 == b.X1);
  CHECK(r.W0 == b.W0);
  CHECK(r.pe_certified == b.pe_certified);
  std::filesystem::remove_all(dir);
}
