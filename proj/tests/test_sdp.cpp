#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ddc/sdp.hpp"
#include "oracles.hpp"

using namespace ddc;
using namespace ddc::sdp;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Rebuilds sum_k x_k F_k - F_0 per block from an SDPA dump.
std::vector<Matrix> sdpa_blocks_at(const std::string& text, const Vector& x) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '*') body.push_back(line);
  const int nblocks = std::stoi(body.at(1));
  std::istringstream sizes(body.at(2));
  std::vector<Matrix> out;
  for (int b = 0; b < nblocks; ++b) {
    int s = 0;
    sizes >> s;
    out.push_back(Matrix::Zero(s, s));
  }
  for (std::size_t i = 4; i < body.size(); ++i) {
    std::istringstream e(body[i]);
    int k = 0, b = 0, r = 0, c = 0;
    double v = 0.0;
    e >> k >> b >> r >> c >> v;
    const double w = k == 0 ? -1.0 : x(k - 1);
    Matrix& M = out[static_cast<std::size_t>(b - 1)];
    M(r - 1, c - 1) += w * v;
    if (r != c) M(c - 1, r - 1) += w * v;
  }
  return out;
}

}  // namespace

TEST_CASE("linear SDP: min tr P subject to P >= I") {
  Problem p;
  const AffineMatrix P = p.symmetric("P", 2);
  p.add(psd({{P - AffineMatrix::identity(2)}}));
  const SdpSolution s = solve_linear_sdp(p, trace(P));
  REQUIRE(s.status == Status::Optimal);
  CHECK(std::abs(s.objective - 2.0) <= 1e-6);
  CHECK((s.at("P") - Matrix::Identity(2, 2)).norm() <= 1e-6);
}

TEST_CASE("linear SDP: min g subject to [[g,1],[1,g]] >= 0") {
  Problem p;
  const AffineMatrix g = p.scalar("g");
  p.add(psd({{g, AffineMatrix::scalar(1.0)}, {std::nullopt, g}}));
  const SdpSolution s = solve_linear_sdp(p, g);
  REQUIRE(s.status == Status::Optimal);
  CHECK(std::abs(s.at("g")(0, 0) - 1.0) <= 1e-6);
}

TEST_CASE("linear SDP: scalar discrete Lyapunov inequality for a = 0.5") {
  // 0.25 p - p <= -1 gives p >= 4/3.
  Problem p;
  const AffineMatrix v = p.scalar("p");
  p.add(nsd({{0.25 * v - v + AffineMatrix::scalar(1.0)}}));
  p.add(psd({{v}}, 1e-7));
  const SdpSolution s = solve_linear_sdp(p, v);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.at("p")(0, 0) >= 4.0 / 3.0 - 1e-7);
  CHECK(std::abs(s.at("p")(0, 0) - 4.0 / 3.0) <= 1e-6);
}

TEST_CASE("linear SDP: contradictory constraints are infeasible") {
  Problem p;
  const AffineMatrix x = p.scalar("x");
  p.add(psd({{x - AffineMatrix::scalar(1.0)}}));
  p.add(nsd({{x}}));
  CHECK(solve_linear_sdp(p, x).status == Status::Infeasible);
}

TEST_CASE("linear SDP: objective decreasing without limit is unbounded") {
  Problem p;
  const AffineMatrix x = p.scalar("x");
  p.add(nsd({{x}}));
  CHECK(solve_linear_sdp(p, x).status == Status::Unbounded);
}

TEST_CASE("log-det SDP: A <= I gives A = I") {
  Problem p;
  const AffineMatrix A = p.symmetric("A", 2);
  p.add(nsd({{A - AffineMatrix::identity(2)}}));
  p.add(psd({{A}}, 1e-7));
  const SdpSolution s = solve_logdet_sdp(p, "A");
  REQUIRE(s.status == Status::Optimal);
  CHECK((s.at("A") - Matrix::Identity(2, 2)).norm() <= 1e-6);
  CHECK(std::abs(s.objective) <= 1e-6);
}

TEST_CASE("log-det SDP: A <= diag(4, 9) gives log det ln 36") {
  Problem p;
  const AffineMatrix A = p.symmetric("A", 2);
  p.add(nsd({{A - AffineMatrix(diag2(4, 9))}}));
  p.add(psd({{A}}, 1e-7));
  const SdpSolution s = solve_logdet_sdp(p, "A");
  REQUIRE(s.status == Status::Optimal);
  CHECK((s.at("A") - diag2(4, 9)).norm() <= 1e-5);
  CHECK(std::abs(s.objective - std::log(36.0)) <= 1e-6);
  CHECK(std::abs(s.objective - std::log(s.at("A").determinant())) <= 1e-9);
}

TEST_CASE("solutions: symmetric variables come back exactly symmetric and pass the audit") {
  Problem p;
  const AffineMatrix P = p.symmetric("P", 3);
  Matrix M(3, 3);
  M << 2, 0.5, 0.1, 0.5, 1, 0.2, 0.1, 0.2, 3;
  p.add(psd({{P - AffineMatrix(M)}}));
  p.add(psd({{AffineMatrix(Matrix(10 * Matrix::Identity(3, 3))) - P}}));
  const SdpSolution s = solve_linear_sdp(p, trace(P));
  REQUIRE(s.status == Status::Optimal);
  CHECK((s.at("P") - s.at("P").transpose()).norm() <= 1e-9);
  const AuditReport a = audit(p, s.values, 1e-7);
  CHECK(a.ok);
  CHECK(a.worst >= -1e-7);
  // Oracle: the audit agrees with an eigenvalue check done here.
  CHECK(oracle::lambda_min(s.at("P") - M) >= -1e-7);
}

TEST_CASE("audit: flags a point that violates a constraint") {
  Problem p;
  const AffineMatrix P = p.symmetric("P", 2);
  p.add(psd({{P - AffineMatrix::identity(2)}}, 0.0, "P_ge_I"));
  std::map<std::string, Matrix> bad = {{"P", diag2(1.0, 0.5)}};
  const AuditReport a = audit(p, bad, 1e-7);
  CHECK_FALSE(a.ok);
  CHECK(a.worst_label == "P_ge_I");
  CHECK(std::abs(a.worst + 0.5) <= 1e-12);
  std::map<std::string, Matrix> good = {{"P", diag2(1.0, 1.0)}};
  CHECK(audit(p, good, 1e-7).ok);
}

TEST_CASE("audit: strictness margin is enforced") {
  Problem p;
  const AffineMatrix x = p.scalar("x");
  p.add(psd({{x}}, 1e-3));
  std::map<std::string, Matrix> at_zero = {{"x", Matrix::Zero(1, 1)}};
  CHECK_FALSE(audit(p, at_zero, 1e-7).ok);
}

TEST_CASE("assembled LMIs agree with direct block evaluation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Problem p;
  const AffineMatrix P = p.symmetric("P", 2);
  const AffineMatrix Y = p.matrix("Y", 1, 2);
  const AffineMatrix g = p.scalar("g");
  Matrix F(2, 2);
  F << 1, 2, 3, 4;
  p.add(psd({{P, Y.transpose(), Matrix(F) * P}, {std::nullopt, g, Y}, {std::nullopt, std::nullopt, P + P}}));
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(p.num_coordinates());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
    const auto vals = p.unpack(x);
    const auto a = p.assemble(p.constraints()[0]);
    Matrix G = a.F0;
    for (const auto& [k, Fk] : a.F) G += x(k) * Fk;
    CHECK((G - p.evaluate(p.constraints()[0], vals)).norm() <= 1e-12);
    CHECK((p.pack(vals) - x).norm() <= 1e-14);
  }
}

TEST_CASE("solves are deterministic") {
  auto build = [](Problem& p) {
    const AffineMatrix A = p.symmetric("A", 2);
    const AffineMatrix b = p.matrix("b", 2, 1);
    Matrix M(2, 2);
    M << 3, 1, 1, 2;
    p.add(nsd({{A - AffineMatrix(M), b}, {std::nullopt, AffineMatrix::scalar(-1.0)}}));
    p.add(psd({{A}}, 1e-7));
    return A;
  };
  Problem p1, p2;
  build(p1);
  build(p2);
  const SdpSolution s1 = solve_logdet_sdp(p1, "A");
  const SdpSolution s2 = solve_logdet_sdp(p2, "A");
  REQUIRE(s1.status == Status::Optimal);
  CHECK(s1.status == s2.status);
  CHECK(std::abs(s1.objective - s2.objective) <= 1e-7);
  CHECK(s1.at("A") == s2.at("A"));
}

TEST_CASE("SDPA dump reproduces the constraints at the solution") {
  Problem p;
  const AffineMatrix P = p.symmetric("P", 2);
  const AffineMatrix g = p.scalar("g");
  Matrix M(2, 2);
  M << 2, 1, 1, 2;
  p.add(psd({{P - AffineMatrix(M)}}, 0.0, "lower"));
  p.add(nsd({{P - scalar_times(g, Matrix::Identity(2, 2))}}, 1e-7, "upper"));
  const AffineMatrix obj = g + trace(P);
  const SdpSolution s = solve_linear_sdp(p, obj);
  REQUIRE(s.status == Status::Optimal);
  std::ostringstream os;
  write_sdpa(p, &obj, os);
  std::vector<Matrix> vals;
  for (const auto& v : p.variables()) vals.push_back(s.at(v.name));
  const Vector x = p.pack(vals);
  const auto blocks = sdpa_blocks_at(os.str(), x);
  REQUIRE(blocks.size() == 2);
  for (const auto& B : blocks) CHECK(oracle::lambda_min(B) >= -1e-7);
  // The c vector reproduces the objective value.
  std::istringstream in(os.str());
  std::string line;
  std::vector<std::string> body;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '*') body.push_back(line);
  std::istringstream cs(body.at(3));
  double value = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    double c = 0.0;
    cs >> c;
    value += c * x(k);
  }
  CHECK(std::abs(value - s.objective) <= 1e-9 * std::max(1.0, std::abs(value)));
}
