#include "ddc/sdp.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ddc::sdp {

namespace {

const double kSqrt2 = std::sqrt(2.0);

void require_same_shape(const AffineMatrix& a, const AffineMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

struct BlockLayout {
  std::vector<int> sizes;
  std::vector<int> offsets;
  int total = 0;
};

BlockLayout layout_of(const SymBlockLmi& lmi) {
  const auto nb = lmi.blocks.size();
  if (nb == 0) throw std::invalid_argument("LMI '" + lmi.label + "' has no blocks");
  BlockLayout lay;
  for (std::size_t i = 0; i < nb; ++i) {
    if (lmi.blocks[i].size() != nb)
      throw std::invalid_argument("LMI '" + lmi.label + "' block grid is not square");
    const Block& d = lmi.blocks[i][i];
    if (!d || d->rows() != d->cols())
      throw std::invalid_argument("LMI '" + lmi.label + "' diagonal block missing or not square");
    lay.offsets.push_back(lay.total);
    lay.sizes.push_back(d->rows());
    lay.total += d->rows();
  }
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = i + 1; j < nb; ++j) {
      const Block& b = lmi.blocks[i][j];
      if (b && (b->rows() != lay.sizes[i] || b->cols() != lay.sizes[j]))
        throw std::invalid_argument("LMI '" + lmi.label + "' off-diagonal block has wrong shape");
    }
  return lay;
}

void place(Matrix& F, const BlockLayout& lay, std::size_t i, std::size_t j, const Matrix& m) {
  if (i == j) {
    F.block(lay.offsets[i], lay.offsets[i], lay.sizes[i], lay.sizes[i]) += 0.5 * (m + m.transpose());
  } else {
    F.block(lay.offsets[i], lay.offsets[j], lay.sizes[i], lay.sizes[j]) += m;
    F.block(lay.offsets[j], lay.offsets[i], lay.sizes[j], lay.sizes[i]) += m.transpose();
  }
}

}  // namespace

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix r(constant_.transpose());
  r.terms_.reserve(terms_.size());
  for (const auto& t : terms_)
    r.terms_.push_back({t.var, !t.transposed, t.right.transpose(), t.left.transpose()});
  return r;
}

Matrix AffineMatrix::evaluate(const std::vector<Matrix>& values) const {
  Matrix out = constant_;
  for (const auto& t : terms_) {
    const Matrix& v = values.at(static_cast<std::size_t>(t.var));
    if (t.transposed)
      out.noalias() += t.left * v.transpose() * t.right;
    else
      out.noalias() += t.left * v * t.right;
  }
  return out;
}

AffineMatrix& AffineMatrix::operator+=(const AffineMatrix& o) {
  require_same_shape(*this, o, "AffineMatrix +");
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

AffineMatrix& AffineMatrix::operator-=(const AffineMatrix& o) { return *this += -1.0 * o; }

AffineMatrix operator*(double s, const AffineMatrix& a) {
  AffineMatrix r = a;
  r.constant_ *= s;
  for (auto& t : r.terms_) t.left *= s;
  return r;
}

AffineMatrix operator*(const Matrix& m, const AffineMatrix& a) {
  if (m.cols() != a.rows()) throw std::invalid_argument("Matrix * AffineMatrix: shape mismatch");
  AffineMatrix r(m * a.constant_);
  r.terms_ = a.terms_;
  for (auto& t : r.terms_) t.left = m * t.left;
  return r;
}

AffineMatrix operator*(const AffineMatrix& a, const Matrix& m) {
  if (a.cols() != m.rows()) throw std::invalid_argument("AffineMatrix * Matrix: shape mismatch");
  AffineMatrix r(a.constant_ * m);
  r.terms_ = a.terms_;
  for (auto& t : r.terms_) t.right = t.right * m;
  return r;
}

AffineMatrix hcat(const std::vector<AffineMatrix>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat: no parts");
  int cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows()) throw std::invalid_argument("hcat: row mismatch");
    cols += p.cols();
  }
  AffineMatrix out = AffineMatrix::zero(parts[0].rows(), cols);
  int off = 0;
  for (const auto& p : parts) {
    Matrix sel = Matrix::Zero(p.cols(), cols);
    sel.block(0, off, p.cols(), p.cols()).setIdentity();
    out += p * sel;
    off += p.cols();
  }
  return out;
}

AffineMatrix vcat(const std::vector<AffineMatrix>& parts) {
  std::vector<AffineMatrix> t;
  t.reserve(parts.size());
  for (const auto& p : parts) t.push_back(p.transpose());
  return hcat(t).transpose();
}

AffineMatrix trace(const AffineMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace: expression is not square");
  const int n = a.rows();
  AffineMatrix out = AffineMatrix::zero(1, 1);
  for (int i = 0; i < n; ++i) {
    const Matrix e = Matrix::Identity(n, n).col(i);
    out += Matrix(e.transpose()) * a * e;
  }
  return out;
}

AffineMatrix scalar_times(const AffineMatrix& s, const Matrix& M) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("scalar_times: expression is not 1x1");
  AffineMatrix out = AffineMatrix::zero(static_cast<int>(M.rows()), static_cast<int>(M.cols()));
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    if (M.col(j).cwiseAbs().maxCoeff() == 0.0) continue;
    const Matrix ej = Matrix::Identity(M.cols(), M.cols()).row(j);
    out += Matrix(M.col(j)) * s * ej;
  }
  return out;
}

SymBlockLmi psd(std::vector<std::vector<Block>> blocks, double margin, std::string label) {
  return {std::move(blocks), Sense::PositiveSemidefinite, margin, std::move(label)};
}

SymBlockLmi nsd(std::vector<std::vector<Block>> blocks, double margin, std::string label) {
  return {std::move(blocks), Sense::NegativeSemidefinite, margin, std::move(label)};
}

AffineMatrix Problem::symmetric(const std::string& name, int n) {
  if (n <= 0) throw std::invalid_argument("variable '" + name + "' must have positive size");
  for (const auto& v : vars_)
    if (v.name == name) throw std::invalid_argument("variable '" + name + "' declared twice");
  Variable v{name, n, n, true, ncoord_};
  ncoord_ += v.size();
  vars_.push_back(v);
  AffineMatrix e = AffineMatrix::zero(n, n);
  e.terms_.push_back({static_cast<int>(vars_.size()) - 1, false, Matrix::Identity(n, n),
                      Matrix::Identity(n, n)});
  return e;
}

AffineMatrix Problem::matrix(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0)
    throw std::invalid_argument("variable '" + name + "' must have positive size");
  for (const auto& v : vars_)
    if (v.name == name) throw std::invalid_argument("variable '" + name + "' declared twice");
  Variable v{name, rows, cols, false, ncoord_};
  ncoord_ += v.size();
  vars_.push_back(v);
  AffineMatrix e = AffineMatrix::zero(rows, cols);
  e.terms_.push_back({static_cast<int>(vars_.size()) - 1, false, Matrix::Identity(rows, rows),
                      Matrix::Identity(cols, cols)});
  return e;
}

void Problem::add(SymBlockLmi lmi) {
  layout_of(lmi);
  for (const auto& row : lmi.blocks)
    for (const auto& b : row) {
      if (!b) continue;
      for (const auto& t : b->terms())
        if (t.var < 0 || t.var >= static_cast<int>(vars_.size()))
          throw std::invalid_argument("LMI '" + lmi.label + "' references an undeclared variable");
    }
  if (lmi.strictness_margin < 0.0)
    throw std::invalid_argument("LMI '" + lmi.label + "' has a negative strictness margin");
  lmis_.push_back(std::move(lmi));
}

int Problem::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown variable '" + name + "'");
}

std::vector<Matrix> Problem::unpack(const Vector& x) const {
  std::vector<Matrix> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) {
    Matrix m(v.rows, v.cols);
    int k = v.offset;
    if (v.symmetric) {
      for (int i = 0; i < v.rows; ++i)
        for (int j = i; j < v.rows; ++j, ++k) {
          if (i == j) {
            m(i, i) = x(k);
          } else {
            m(i, j) = x(k) / kSqrt2;
            m(j, i) = m(i, j);
          }
        }
    } else {
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j, ++k) m(i, j) = x(k);
    }
    out.push_back(std::move(m));
  }
  return out;
}

Vector Problem::pack(const std::vector<Matrix>& values) const {
  Vector x(ncoord_);
  for (std::size_t vi = 0; vi < vars_.size(); ++vi) {
    const auto& v = vars_[vi];
    const Matrix& m = values.at(vi);
    int k = v.offset;
    if (v.symmetric) {
      for (int i = 0; i < v.rows; ++i)
        for (int j = i; j < v.rows; ++j, ++k)
          x(k) = (i == j) ? m(i, i) : 0.5 * (m(i, j) + m(j, i)) * kSqrt2;
    } else {
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j, ++k) x(k) = m(i, j);
    }
  }
  return x;
}

std::map<int, Matrix> Problem::coefficients(const AffineMatrix& e) const {
  std::map<int, Matrix> out;
  auto acc = [&](int k, const Matrix& m) {
    auto it = out.find(k);
    if (it == out.end())
      out.emplace(k, m);
    else
      it->second += m;
  };
  for (const auto& t : e.terms()) {
    const Variable& v = vars_.at(static_cast<std::size_t>(t.var));
    int k = v.offset;
    if (v.symmetric) {
      for (int i = 0; i < v.rows; ++i)
        for (int j = i; j < v.rows; ++j, ++k) {
          if (i == j)
            acc(k, t.left.col(i) * t.right.row(i));
          else
            acc(k, (t.left.col(i) * t.right.row(j) + t.left.col(j) * t.right.row(i)) / kSqrt2);
        }
    } else {
      for (int i = 0; i < v.rows; ++i)
        for (int j = 0; j < v.cols; ++j, ++k) {
          if (t.transposed)
            acc(k, t.left.col(j) * t.right.row(i));
          else
            acc(k, t.left.col(i) * t.right.row(j));
        }
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    if (it->second.cwiseAbs().maxCoeff() == 0.0)
      it = out.erase(it);
    else
      ++it;
  }
  return out;
}

Problem::Assembled Problem::assemble(const SymBlockLmi& lmi) const {
  const BlockLayout lay = layout_of(lmi);
  Assembled a;
  a.F0 = Matrix::Zero(lay.total, lay.total);
  const auto nb = lmi.blocks.size();
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = i; j < nb; ++j) {
      const Block& b = lmi.blocks[i][j];
      if (!b) continue;
      place(a.F0, lay, i, j, b->constant());
      for (const auto& [k, C] : coefficients(*b)) {
        auto it = a.F.find(k);
        if (it == a.F.end()) it = a.F.emplace(k, Matrix::Zero(lay.total, lay.total)).first;
        place(it->second, lay, i, j, C);
      }
    }
  return a;
}

Matrix Problem::evaluate(const SymBlockLmi& lmi, const std::vector<Matrix>& values) const {
  const BlockLayout lay = layout_of(lmi);
  Matrix F = Matrix::Zero(lay.total, lay.total);
  const auto nb = lmi.blocks.size();
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = i; j < nb; ++j)
      if (const Block& b = lmi.blocks[i][j]) place(F, lay, i, j, b->evaluate(values));
  return F;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::NumericalFailure: return "numerical_failure";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

AuditReport audit(const Problem& p, const std::vector<Matrix>& values, double tol) {
  AuditReport r;
  r.worst = std::numeric_limits<double>::infinity();
  for (const auto& lmi : p.constraints()) {
    Matrix F = p.evaluate(lmi, values);
    if (lmi.sense == Sense::NegativeSemidefinite) F = -F;
    const double e = min_eig(F) - lmi.strictness_margin;
    r.per_constraint.push_back(e);
    if (e < r.worst) {
      r.worst = e;
      r.worst_label = lmi.label;
    }
    if (!(e >= -tol)) r.ok = false;
  }
  if (p.constraints().empty()) r.worst = 0.0;
  return r;
}

AuditReport audit(const Problem& p, const std::map<std::string, Matrix>& values, double tol) {
  std::vector<Matrix> v;
  for (const auto& var : p.variables()) v.push_back(values.at(var.name));
  return audit(p, v, tol);
}

void write_sdpa(const Problem& p, const AffineMatrix* objective, std::ostream& os,
                const std::string& logdet_var) {
  const int n = p.num_coordinates();
  os << "* sparse SDPA: minimize c'x s.t. sum_k x_k F_k - F_0 >= 0\n";
  for (const auto& v : p.variables())
    os << "* variable " << v.name << " " << v.rows << "x" << v.cols
       << (v.symmetric ? " symmetric" : " full") << " coordinates " << v.offset + 1 << ".."
       << v.offset + v.size() << "\n";
  if (!logdet_var.empty()) os << "* objective: maximize log det " << logdet_var << "\n";
  os << n << "\n" << p.constraints().size() << "\n";
  for (const auto& lmi : p.constraints()) os << layout_of(lmi).total << " ";
  os << "\n";
  Vector c = Vector::Zero(n);
  if (objective)
    for (const auto& [k, C] : p.coefficients(*objective)) c(k) = C(0, 0);
  os << std::setprecision(17);
  for (int k = 0; k < n; ++k) os << c(k) << (k + 1 < n ? " " : "\n");
  int blk = 1;
  for (const auto& lmi : p.constraints()) {
    const double s = lmi.sense == Sense::PositiveSemidefinite ? 1.0 : -1.0;
    const auto a = p.assemble(lmi);
    Matrix G0 = s * a.F0 - lmi.strictness_margin * Matrix::Identity(a.F0.rows(), a.F0.cols());
    auto emit = [&](int mat, const Matrix& M) {
      for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = i; j < M.cols(); ++j)
          if (M(i, j) != 0.0) os << mat << " " << blk << " " << i + 1 << " " << j + 1 << " " << M(i, j) << "\n";
    };
    emit(0, -G0);
    for (const auto& [k, F] : a.F) emit(k + 1, s * F);
    ++blk;
  }
}

}  // namespace ddc::sdp
