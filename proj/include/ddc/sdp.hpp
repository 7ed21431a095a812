#pragma once

// Small semidefinite programming layer: affine matrix expressions over named
// decision variables, symmetric block LMIs, and an interior-point solver for
// linear objectives and log-det maximization.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddc/linalg.hpp"

namespace ddc::sdp {

// Sum of terms left * V * right (or left * V' * right) plus a constant.
class AffineMatrix {
 public:
  struct Term {
    int var = -1;
    bool transposed = false;
    Matrix left;
    Matrix right;
  };

  AffineMatrix() = default;
  explicit AffineMatrix(Matrix constant) : constant_(std::move(constant)) {}

  static AffineMatrix zero(int rows, int cols) { return AffineMatrix(Matrix::Zero(rows, cols)); }
  static AffineMatrix identity(int n) { return AffineMatrix(Matrix::Identity(n, n)); }
  static AffineMatrix scalar(double v) { return AffineMatrix(Matrix::Constant(1, 1, v)); }

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Matrix& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  AffineMatrix transpose() const;

  // Value at the given variable matrices (indexed like Problem::variables()).
  Matrix evaluate(const std::vector<Matrix>& values) const;

  AffineMatrix& operator+=(const AffineMatrix& o);
  AffineMatrix& operator-=(const AffineMatrix& o);

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) { return a += b; }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) { return a -= b; }
  friend AffineMatrix operator-(const AffineMatrix& a) { return -1.0 * a; }
  friend AffineMatrix operator*(double s, const AffineMatrix& a);
  friend AffineMatrix operator*(const Matrix& m, const AffineMatrix& a);
  friend AffineMatrix operator*(const AffineMatrix& a, const Matrix& m);

 private:
  friend class Problem;
  Matrix constant_;
  std::vector<Term> terms_;
};

// Horizontal / vertical concatenation of expressions.
AffineMatrix hcat(const std::vector<AffineMatrix>& parts);
AffineMatrix vcat(const std::vector<AffineMatrix>& parts);
// Trace of a square expression, as a 1x1 expression.
AffineMatrix trace(const AffineMatrix& a);
// s * M for a 1x1 expression s and a constant matrix M.
AffineMatrix scalar_times(const AffineMatrix& s, const Matrix& M);

enum class Sense { PositiveSemidefinite, NegativeSemidefinite };

// Grid of blocks. Only the diagonal and upper triangle are read; entries below
// the diagonal may be left empty and are mirrored from above.
using Block = std::optional<AffineMatrix>;

struct SymBlockLmi {
  std::vector<std::vector<Block>> blocks;
  Sense sense = Sense::PositiveSemidefinite;
  double strictness_margin = 0.0;
  std::string label;
};

SymBlockLmi psd(std::vector<std::vector<Block>> blocks, double margin = 0.0, std::string label = "");
SymBlockLmi nsd(std::vector<std::vector<Block>> blocks, double margin = 0.0, std::string label = "");

struct Variable {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int offset = 0;  // first scalar coordinate
  int size() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
};

class Problem {
 public:
  AffineMatrix symmetric(const std::string& name, int n);
  AffineMatrix matrix(const std::string& name, int rows, int cols);
  AffineMatrix scalar(const std::string& name) { return matrix(name, 1, 1); }

  void add(SymBlockLmi lmi);

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<SymBlockLmi>& constraints() const { return lmis_; }
  int num_coordinates() const { return ncoord_; }
  int index_of(const std::string& name) const;

  // Coordinate vector <-> variable matrices (scaled symmetric vectorization:
  // off-diagonal coordinate k of a symmetric variable equals sqrt(2) * V_ij).
  std::vector<Matrix> unpack(const Vector& x) const;
  Vector pack(const std::vector<Matrix>& values) const;

  // Coefficient matrices of an expression: value(x) = c0 + sum_k x_k C_k.
  // Only nonzero coefficients are returned.
  std::map<int, Matrix> coefficients(const AffineMatrix& e) const;

  // Dense assembled LMI matrix F(x) = F0 + sum_k x_k F_k (no sign or margin).
  struct Assembled {
    Matrix F0;
    std::map<int, Matrix> F;
  };
  Assembled assemble(const SymBlockLmi& lmi) const;

  // Independent evaluation of an LMI at variable matrices: the block matrix
  // built directly from the expressions, without the coordinate expansion.
  Matrix evaluate(const SymBlockLmi& lmi, const std::vector<Matrix>& values) const;

 private:
  std::vector<Variable> vars_;
  std::vector<SymBlockLmi> lmis_;
  int ncoord_ = 0;
};

enum class Status { Optimal, Infeasible, NumericalFailure, Unbounded };
const char* to_string(Status s);

struct SolverSettings {
  double feasibility_tol = 1e-7;
  double gap_tol = 1e-8;
  double box_radius = 1e9;
  double mu = 20.0;
  int max_newton_steps = 4000;
  double centering_tol = 1e-7;
};

struct SolverStats {
  int outer_iterations = 0;
  int newton_steps = 0;
  int phase1_newton_steps = 0;
  double duality_gap = 0.0;
  double newton_decrement = 0.0;
  double worst_constraint_eig = 0.0;  // from the audit, after margin
  std::string message;
};

struct SdpSolution {
  Status status = Status::NumericalFailure;
  std::map<std::string, Matrix> values;
  double objective = 0.0;
  SolverStats stats;
  const Matrix& at(const std::string& name) const { return values.at(name); }
};

struct AuditReport {
  bool ok = true;
  double worst = 0.0;        // smallest signed eigenvalue minus margin
  std::string worst_label;
  std::vector<double> per_constraint;
};

// Re-evaluates every constraint at the given variable matrices and checks
// lambda_min(sign * F) - margin >= -tol.
AuditReport audit(const Problem& p, const std::vector<Matrix>& values, double tol);
AuditReport audit(const Problem& p, const std::map<std::string, Matrix>& values, double tol);

SdpSolution solve_linear_sdp(const Problem& p, const AffineMatrix& objective,
                             const SolverSettings& settings = {});
SdpSolution solve_logdet_sdp(const Problem& p, const std::string& maximize_logdet_of,
                             const SolverSettings& settings = {});

// SDPA sparse format: minimize c'x s.t. sum_k x_k F_k - F_0 >= 0, one block per
// constraint with sign and margin folded in.
void write_sdpa(const Problem& p, const AffineMatrix* objective, std::ostream& os,
                const std::string& logdet_var = "");

}  // namespace ddc::sdp
