// Primal log-barrier interior-point method for
//   minimize c'x - w log det V(x)   s.t.  G_k(x) = G_k0 + sum_i x_i G_ki >= 0,  |x_i| <= R
// with a Phase I search for a strictly feasible start.

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>

#include "ddc/sdp.hpp"

namespace ddc::sdp {

namespace {

struct BarrierBlock {
  Matrix G0;
  std::vector<int> idx;
  std::vector<Matrix> Gk;
  int dim() const { return static_cast<int>(G0.rows()); }
};

struct Model {
  int n = 0;
  Vector c;
  double c0 = 0.0;
  std::vector<BarrierBlock> blocks;
  bool has_logdet = false;
  BarrierBlock logdet;
  double logdet_weight = 1.0;
  double R = 1e9;

  double theta() const {
    double th = 2.0 * n;
    for (const auto& b : blocks) th += b.dim();
    return th;
  }
};

Matrix value_of(const BarrierBlock& b, const Vector& x) {
  Matrix G = b.G0;
  for (std::size_t q = 0; q < b.idx.size(); ++q) G += x(b.idx[q]) * b.Gk[q];
  return G;
}

// log det of G(x) if positive definite.
bool logdet_at(const BarrierBlock& b, const Vector& x, double& ld) {
  Eigen::LLT<Matrix> llt(value_of(b, x));
  if (llt.info() != Eigen::Success) return false;
  const auto d = llt.matrixLLT().diagonal();
  ld = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0) || !std::isfinite(d(i))) return false;
    ld += 2.0 * std::log(d(i));
  }
  return true;
}

bool inside_box(const Model& m, const Vector& x) {
  for (int i = 0; i < m.n; ++i)
    if (!(std::abs(x(i)) < m.R)) return false;
  return true;
}

// Barrier-augmented objective t*f0(x) + phi(x); false outside the domain.
bool barrier_value(const Model& m, const Vector& x, double t, double& f) {
  if (!inside_box(m, x)) return false;
  f = t * (m.c.dot(x) + m.c0);
  double ld = 0.0;
  for (const auto& b : m.blocks) {
    if (!logdet_at(b, x, ld)) return false;
    f -= ld;
  }
  if (m.has_logdet) {
    if (!logdet_at(m.logdet, x, ld)) return false;
    f -= t * m.logdet_weight * ld;
  }
  for (int i = 0; i < m.n; ++i) f -= std::log(m.R - x(i)) + std::log(m.R + x(i));
  return true;
}

// Adds weight * (gradient, Hessian) of -log det G(x).
void accumulate(const BarrierBlock& b, const Vector& x, double weight, Vector& g, Matrix& H) {
  Eigen::LLT<Matrix> llt(value_of(b, x));
  const auto L = llt.matrixL();
  std::vector<Matrix> W(b.idx.size());
  for (std::size_t q = 0; q < b.idx.size(); ++q) {
    Matrix X = L.solve(b.Gk[q]);
    W[q] = L.solve(X.transpose());
    g(b.idx[q]) -= weight * W[q].trace();
  }
  for (std::size_t q = 0; q < b.idx.size(); ++q)
    for (std::size_t r = q; r < b.idx.size(); ++r) {
      const double v = weight * W[q].cwiseProduct(W[r]).sum();
      H(b.idx[q], b.idx[r]) += v;
      if (r != q) H(b.idx[r], b.idx[q]) += v;
    }
}

// Gradient of the objective f0 alone, and of the barrier phi alone.
void split_gradients(const Model& m, const Vector& x, Vector& gf0, Vector& gphi, Matrix& Hphi) {
  gf0 = m.c;
  gphi = Vector::Zero(m.n);
  Hphi = Matrix::Zero(m.n, m.n);
  if (m.has_logdet) {
    Matrix Hd = Matrix::Zero(m.n, m.n);
    accumulate(m.logdet, x, m.logdet_weight, gf0, Hd);
  }
  for (const auto& b : m.blocks) accumulate(b, x, 1.0, gphi, Hphi);
  for (int i = 0; i < m.n; ++i) {
    const double a = m.R - x(i), c = m.R + x(i);
    gphi(i) += 1.0 / a - 1.0 / c;
    Hphi(i, i) += 1.0 / (a * a) + 1.0 / (c * c);
  }
}

bool strictly_inside(const Model& m, const Vector& x) {
  double f;
  return barrier_value(m, x, 1.0, f);
}

Vector newton_direction(const Matrix& H, const Vector& g) {
  // Symmetric diagonal scaling keeps badly scaled coordinates from spoiling
  // the factorization.
  const Vector d = H.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix Hs = d.asDiagonal() * H * d.asDiagonal();
  Eigen::LLT<Matrix> llt(Hs);
  if (llt.info() == Eigen::Success) {
    const Vector dx = d.asDiagonal() * llt.solve(-(d.asDiagonal() * g));
    if (dx.allFinite() && g.dot(dx) < 0.0) return dx;
  }
  Eigen::LDLT<Matrix> ldlt(H);
  Vector dx;
  if (ldlt.info() == Eigen::Success) {
    dx = ldlt.solve(-g);
    if (dx.allFinite() && g.dot(dx) < 0.0) return dx;
  }
  const double ridge = 1e-12 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  Matrix Hr = H;
  Hr.diagonal().array() += ridge;
  return Hr.ldlt().solve(-g);
}

enum class CenterResult { Centered, EarlyStop, Stalled, Budget };

struct PathState {
  Vector x;
  double t = 1.0;
  int newton_steps = 0;
  int outer = 0;
  double decrement = 0.0;
};

// Damped Newton centering. Far from the center the step comes from an Armijo
// backtracking search on the barrier value; close to it (Newton decrement below
// 0.2, where the self-concordant theory guarantees a feasible full step) the
// function value is no longer compared, since at large t it carries too few
// significant digits.
CenterResult center(const Model& m, PathState& st, int budget, double tol,
                    const std::function<bool(const Vector&)>& early_stop) {
  int local = 0, stagnant = 0;
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    if (st.newton_steps >= budget) return CenterResult::Budget;
    Vector gf0, gphi;
    Matrix H;
    split_gradients(m, st.x, gf0, gphi, H);
    if (m.has_logdet) {
      Matrix Hd = Matrix::Zero(m.n, m.n);
      Vector tmp = Vector::Zero(m.n);
      accumulate(m.logdet, st.x, st.t * m.logdet_weight, tmp, Hd);
      H += Hd;
    }
    const Vector g = st.t * gf0 + gphi;
    const Vector dx = newton_direction(H, g);
    const double lam2 = -g.dot(dx);
    st.decrement = lam2;
    if (!(lam2 >= 0.0) || !std::isfinite(lam2)) return CenterResult::Stalled;
    if (0.5 * lam2 <= tol) return CenterResult::Centered;
    if (local >= 15 && lam2 < 1e-5) return CenterResult::Centered;
    // At large t the decrement bottoms out at rounding noise; once it stops
    // halving and is small, its suboptimality (about lam2 / t) is negligible.
    if (lam2 < 0.5 * best) {
      best = lam2;
      stagnant = 0;
    } else if (++stagnant >= 10 && lam2 < 1e-2) {
      return CenterResult::Centered;
    }
    const double lam = std::sqrt(lam2);

    double alpha = 1.0;
    if (lam < 0.2) {
      if (!strictly_inside(m, st.x + dx)) alpha = 1.0 / (1.0 + lam);
    } else {
      double f0, f1 = 0.0;
      if (!barrier_value(m, st.x, st.t, f0)) return CenterResult::Stalled;
      while (!barrier_value(m, st.x + alpha * dx, st.t, f1)) {
        alpha *= 0.5;
        if (alpha < 1e-20) return CenterResult::Stalled;
      }
      while (f1 > f0 - 0.25 * alpha * lam2) {
        alpha *= 0.5;
        if (alpha < 1.0 / (1.0 + lam)) {
          alpha = 1.0 / (1.0 + lam);
          break;
        }
        if (!barrier_value(m, st.x + alpha * dx, st.t, f1)) f1 = std::numeric_limits<double>::infinity();
      }
    }
    if (!strictly_inside(m, st.x + alpha * dx)) return CenterResult::Stalled;
    st.x += alpha * dx;
    ++st.newton_steps;
    ++local;
    if (early_stop && early_stop(st.x)) return CenterResult::EarlyStop;
  }
}

Model build_model(const Problem& p) {
  Model m;
  m.n = p.num_coordinates();
  m.c = Vector::Zero(m.n);
  for (const auto& lmi : p.constraints()) {
    const double s = lmi.sense == Sense::PositiveSemidefinite ? 1.0 : -1.0;
    auto a = p.assemble(lmi);
    BarrierBlock b;
    b.G0 = s * a.F0 - lmi.strictness_margin * Matrix::Identity(a.F0.rows(), a.F0.cols());
    for (auto& [k, F] : a.F) {
      b.idx.push_back(k);
      b.Gk.push_back(s * F);
    }
    m.blocks.push_back(std::move(b));
  }
  return m;
}

bool strictly_feasible(const Model& m, const Vector& x) {
  if (!inside_box(m, x)) return false;
  double ld;
  for (const auto& b : m.blocks)
    if (!logdet_at(b, x, ld)) return false;
  if (m.has_logdet && !logdet_at(m.logdet, x, ld)) return false;
  return true;
}

// Phase I: minimize s s.t. G_k(x) + s I >= 0 (and V(x) + s I >= 0).
// Returns Optimal with a strictly feasible x, Infeasible, or NumericalFailure.
Status phase_one(const Model& m, const SolverSettings& set, Vector& x, int& steps, std::string& msg) {
  Model p1;
  p1.n = m.n + 1;
  p1.R = m.R;
  p1.c = Vector::Zero(p1.n);
  p1.c(m.n) = 1.0;
  auto lift = [&](const BarrierBlock& b) {
    BarrierBlock l = b;
    l.idx.push_back(m.n);
    l.Gk.push_back(Matrix::Identity(b.dim(), b.dim()));
    return l;
  };
  for (const auto& b : m.blocks) p1.blocks.push_back(lift(b));
  if (m.has_logdet) p1.blocks.push_back(lift(m.logdet));

  double worst = 0.0;
  for (const auto& b : p1.blocks) worst = std::max(worst, -min_eig(value_of(b, Vector::Zero(p1.n))));
  PathState st;
  st.x = Vector::Zero(p1.n);
  st.x(m.n) = worst + 1.0;
  if (!(st.x(m.n) < p1.R)) {
    msg = "phase I start outside box";
    return Status::NumericalFailure;
  }
  const double theta = p1.theta();
  auto stop = [&](const Vector& v) { return v(m.n) < 0.0; };
  for (;;) {
    const auto r = center(p1, st, set.max_newton_steps, set.centering_tol, stop);
    steps = st.newton_steps;
    if (r == CenterResult::EarlyStop || st.x(m.n) < 0.0) {
      x = st.x.head(m.n);
      if (strictly_feasible(m, x)) return Status::Optimal;
      msg = "phase I point failed feasibility recheck";
      return Status::NumericalFailure;
    }
    if (r == CenterResult::Budget) {
      msg = "phase I iteration budget exhausted";
      return Status::NumericalFailure;
    }
    const double gap = theta / st.t;
    const double s = st.x(m.n);
    if (s - gap > 0.0) {
      msg = "phase I certificate: minimal shift is positive";
      return Status::Infeasible;
    }
    if (r == CenterResult::Stalled || gap < 1e-12 * std::max(1.0, std::abs(s))) {
      msg = "phase I converged to a nonnegative shift (no strictly feasible point)";
      return Status::Infeasible;
    }
    st.t *= set.mu;
    ++st.outer;
  }
}

SdpSolution run(const Problem& p, Model m, const SolverSettings& set,
                const std::function<double(const std::vector<Matrix>&)>& objective_value) {
  SdpSolution sol;
  m.R = set.box_radius;
  Vector x = Vector::Zero(m.n);
  if (!strictly_feasible(m, x)) {
    int steps = 0;
    std::string msg;
    const Status s1 = phase_one(m, set, x, steps, msg);
    sol.stats.phase1_newton_steps = steps;
    if (s1 != Status::Optimal) {
      sol.status = s1;
      sol.stats.message = msg;
      return sol;
    }
  }

  PathState st;
  st.x = x;
  {
    Vector gf0, gphi;
    Matrix H;
    split_gradients(m, x, gf0, gphi, H);
    Eigen::LDLT<Matrix> ldlt(H);
    const Vector a = ldlt.solve(gf0), b = ldlt.solve(gphi);
    const double den = gf0.dot(a);
    double t0 = den > 0.0 ? -gf0.dot(b) / den : 1.0;
    if (!std::isfinite(t0) || t0 <= 0.0) t0 = 1.0;
    st.t = std::clamp(t0, 1e-6, 1e6);
  }
  const double theta = m.theta();
  bool stalled = false;
  for (;;) {
    const int budget = set.max_newton_steps - sol.stats.phase1_newton_steps;
    const auto r = center(m, st, budget, set.centering_tol, nullptr);
    if (r == CenterResult::Budget) {
      sol.status = Status::NumericalFailure;
      sol.stats.message = "newton step budget exhausted";
      break;
    }
    double f0 = m.c.dot(st.x) + m.c0;
    if (m.has_logdet) {
      double ld = 0.0;
      logdet_at(m.logdet, st.x, ld);
      f0 -= m.logdet_weight * ld;
    }
    const double gap = theta / st.t;
    sol.stats.duality_gap = gap;
    if (r == CenterResult::Stalled) {
      stalled = true;
      sol.status = gap <= std::sqrt(set.gap_tol) * std::max(1.0, std::abs(f0))
                       ? Status::Optimal
                       : Status::NumericalFailure;
      sol.stats.message = "line search stalled";
      break;
    }
    if (gap <= set.gap_tol * std::max(1.0, std::abs(f0))) {
      sol.status = Status::Optimal;
      break;
    }
    st.t *= set.mu;
    ++st.outer;
  }
  sol.stats.outer_iterations = st.outer;
  sol.stats.newton_steps = st.newton_steps + sol.stats.phase1_newton_steps;
  sol.stats.newton_decrement = st.decrement;

  // A coordinate pushed against the box while still improving the objective
  // means the true problem has no finite optimum.
  {
    Vector gf0, gphi;
    Matrix H;
    split_gradients(m, st.x, gf0, gphi, H);
    for (int i = 0; i < m.n; ++i) {
      const double sgn = st.x(i) > 0.0 ? 1.0 : -1.0;
      if (std::abs(st.x(i)) > 0.5 * m.R && gf0(i) * sgn < 0.0) {
        sol.status = Status::Unbounded;
        sol.stats.message = "objective decreases along an unbounded direction";
      }
    }
  }

  const auto mats = p.unpack(st.x);
  for (std::size_t i = 0; i < mats.size(); ++i) sol.values[p.variables()[i].name] = mats[i];
  sol.objective = objective_value(mats);
  const auto rep = audit(p, mats, set.feasibility_tol);
  sol.stats.worst_constraint_eig = rep.worst;
  if (sol.status == Status::Optimal && !rep.ok) {
    sol.status = Status::NumericalFailure;
    sol.stats.message = "feasibility audit failed on constraint '" + rep.worst_label + "'";
  }
  if (stalled && sol.status == Status::Optimal) sol.stats.message += " (accepted at relaxed gap)";
  return sol;
}

}  // namespace

SdpSolution solve_linear_sdp(const Problem& p, const AffineMatrix& objective, const SolverSettings& settings) {
  if (objective.rows() != 1 || objective.cols() != 1)
    throw std::invalid_argument("solve_linear_sdp: objective must be a 1x1 expression");
  Model m = build_model(p);
  m.c0 = objective.constant()(0, 0);
  for (const auto& [k, C] : p.coefficients(objective)) m.c(k) = C(0, 0);
  return run(p, std::move(m), settings,
             [&](const std::vector<Matrix>& v) { return objective.evaluate(v)(0, 0); });
}

SdpSolution solve_logdet_sdp(const Problem& p, const std::string& var, const SolverSettings& settings) {
  const int vi = p.index_of(var);
  const Variable& v = p.variables()[static_cast<std::size_t>(vi)];
  if (!v.symmetric) throw std::invalid_argument("solve_logdet_sdp: '" + var + "' is not symmetric");
  Model m = build_model(p);
  m.has_logdet = true;
  m.logdet.G0 = Matrix::Zero(v.rows, v.rows);
  for (int i = 0; i < v.size(); ++i) {
    Vector x = Vector::Zero(p.num_coordinates());
    x(v.offset + i) = 1.0;
    m.logdet.idx.push_back(v.offset + i);
    m.logdet.Gk.push_back(p.unpack(x)[static_cast<std::size_t>(vi)]);
  }
  return run(p, std::move(m), settings, [vi](const std::vector<Matrix>& vals) {
    Eigen::LLT<Matrix> llt(vals[static_cast<std::size_t>(vi)]);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  });
}

}  // namespace ddc::sdp
