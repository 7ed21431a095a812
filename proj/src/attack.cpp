#include "ddc/attack.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "ddc/errors.hpp"

namespace ddc {

AttackMode AttackMode::fdi(Matrix D, Matrix Ka) {
  AttackMode m;
  m.kind = Kind::Fdi;
  m.D = std::move(D);
  m.Ka = std::move(Ka);
  return m;
}

AttackMode AttackMode::raw(Matrix additive) {
  AttackMode m;
  m.kind = Kind::RawAdditive;
  m.additive = std::move(additive);
  return m;
}

Vector AttackMode::injection(const Vector& x) const {
  if (kind == Kind::Fdi) return D * (Ka * x);
  return Vector();
}

Matrix AttackMode::perturbation(const Matrix& B_tr) const {
  if (kind == Kind::Fdi) return B_tr * D * Ka;
  return additive;
}

void AttackProfile::validate(const SystemModel& sys) const {
  if (modes.empty()) throw InvalidInput("attack profile: at least one mode is required");
  if (phi && *phi < 0.0) throw InvalidInput("attack profile: phi must be nonnegative");
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const AttackMode& m = modes[k];
    const std::string tag = "attack mode " + std::to_string(k + 1) + ": ";
    if (m.kind == AttackMode::Kind::RawAdditive) {
      if (m.additive.rows() != sys.nx() || m.additive.cols() != sys.nx())
        throw InvalidInput(tag + "additive matrix must be n_x x n_x");
      continue;
    }
    if (m.D.rows() != sys.nu() || m.D.cols() != sys.nu()) throw InvalidInput(tag + "D must be n_u x n_u");
    if (m.Ka.rows() != sys.nu() || m.Ka.cols() != sys.nx()) throw InvalidInput(tag + "Ka must be n_u x n_x");
    bool any = false;
    for (int i = 0; i < sys.nu(); ++i)
      for (int j = 0; j < sys.nu(); ++j) {
        const double v = m.D(i, j);
        if (i != j && v != 0.0) throw InvalidInput(tag + "D must be diagonal");
        if (i == j && v != 0.0 && v != 1.0) throw InvalidInput(tag + "D entries must be 0 or 1");
        any = any || (i == j && v == 1.0);
      }
    if (!any) throw InvalidInput(tag + "D selects no channel");
    if (phi && spectral_norm(m.D * m.Ka) > *phi) throw InvalidInput(tag + "||D Ka|| exceeds phi");
  }
}

std::vector<Matrix> enumerate_channel_selectors(int nu) {
  if (nu < 1) throw InvalidInput("enumerate_channel_selectors: n_u must be positive");
  if (nu > 20) throw InvalidInput("enumerate_channel_selectors: n_u too large");
  std::vector<std::vector<int>> subsets;
  for (int size = 1; size <= nu; ++size) {
    // Lexicographic combinations of {0..nu-1} of the given size.
    std::vector<int> c(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) c[static_cast<std::size_t>(i)] = i;
    while (true) {
      subsets.push_back(c);
      int i = size - 1;
      while (i >= 0 && c[static_cast<std::size_t>(i)] == nu - size + i) --i;
      if (i < 0) break;
      ++c[static_cast<std::size_t>(i)];
      for (int k = i + 1; k < size; ++k) c[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k - 1)] + 1;
    }
  }
  std::vector<Matrix> out;
  for (const auto& s : subsets) {
    Matrix D = Matrix::Zero(nu, nu);
    for (int i : s) D(i, i) = 1.0;
    out.push_back(D);
  }
  return out;
}

SystemModel effective_mode_matrix(const SystemModel& sys, const AttackProfile& profile, int j) {
  if (j < 1 || j > profile.num_modes()) throw InvalidInput("effective_mode_matrix: unknown mode " + std::to_string(j));
  const AttackMode& m = profile.modes[static_cast<std::size_t>(j - 1)];
  const Matrix pert = m.perturbation(sys.B);
  if (pert.rows() != sys.nx() || pert.cols() != sys.nx())
    throw InvalidInput("effective_mode_matrix: mode " + std::to_string(j) + " has the wrong shape");
  return SystemModel(sys.A + pert, sys.B);
}

PowerAudit attack_power_audit(const AttackProfile& profile, const Matrix& B_tr) {
  PowerAudit a;
  for (const auto& m : profile.modes) {
    if (m.kind == AttackMode::Kind::Fdi) a.phi_realized = std::max(a.phi_realized, spectral_norm(m.D * m.Ka));
    a.delta_realized = std::max(a.delta_realized, spectral_norm(m.perturbation(B_tr)));
  }
  return a;
}

int SwitchSignal::mode_at(int t) const {
  if (breakpoints.empty()) throw InvalidSchedule("switch signal has no breakpoints");
  int mode = breakpoints.front().mode;
  for (const auto& b : breakpoints) {
    if (b.t > t) break;
    mode = b.mode;
  }
  return mode;
}

int SwitchSignal::switches_in(int t1, int t2) const {
  int n = 0;
  for (std::size_t s = 1; s < breakpoints.size(); ++s)
    if (breakpoints[s].t >= t1 && breakpoints[s].t < t2) ++n;
  return n;
}

DwellAudit audit_dwell(const SwitchSignal& s) {
  const int H = s.horizon;
  // before[t] = number of switch instants < t
  std::vector<int> before(static_cast<std::size_t>(H + 1), 0);
  for (std::size_t k = 1; k < s.breakpoints.size(); ++k) {
    const int ts = s.breakpoints[k].t;
    for (int t = std::max(ts + 1, 0); t <= H; ++t) ++before[static_cast<std::size_t>(t)];
  }
  DwellAudit a;
  a.worst_slack = std::numeric_limits<double>::infinity();
  for (int t1 = 0; t1 <= H; ++t1)
    for (int t2 = t1; t2 <= H; ++t2) {
      const int n = before[static_cast<std::size_t>(t2)] - before[static_cast<std::size_t>(t1)];
      const double bound = s.upsilon + (t2 - t1) / s.tau;
      if (bound - n < a.worst_slack) {
        a.worst_slack = bound - n;
        a.t1 = t1;
        a.t2 = t2;
        a.count = n;
        a.bound = bound;
      }
    }
  a.ok = a.worst_slack >= 0.0;
  return a;
}

namespace {

void check_dwell_parameters(int horizon, double tau, double upsilon) {
  if (horizon < 1) throw InvalidSchedule("switch signal: horizon must be positive");
  if (!(tau >= 2.0)) throw InvalidSchedule("switch signal: tau must be >= 2");
  if (!(upsilon >= 0.0)) throw InvalidSchedule("switch signal: upsilon must be >= 0");
}

}  // namespace

SwitchSignal make_switch_signal(int horizon, double tau, double upsilon, std::vector<Breakpoint> breakpoints) {
  check_dwell_parameters(horizon, tau, upsilon);
  if (breakpoints.empty() || breakpoints.front().t != 0)
    throw InvalidSchedule("switch signal: the first breakpoint must be at t = 0");
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    const Breakpoint& b = breakpoints[k];
    if (b.mode < 1) throw InvalidSchedule("switch signal: modes are numbered from 1");
    if (b.t >= horizon) throw InvalidSchedule("switch signal: breakpoint at or after the horizon");
    if (k > 0 && b.t <= breakpoints[k - 1].t) throw InvalidSchedule("switch signal: breakpoints must increase");
    if (k > 0 && b.mode == breakpoints[k - 1].mode)
      throw InvalidSchedule("switch signal: consecutive breakpoints must change mode");
  }
  SwitchSignal s{std::move(breakpoints), horizon, tau, upsilon};
  const DwellAudit a = audit_dwell(s);
  if (!a.ok)
    throw InvalidSchedule("switch signal: " + std::to_string(a.count) + " switches in [" + std::to_string(a.t1) +
                          ", " + std::to_string(a.t2) + ") exceed the dwell bound");
  return s;
}

SwitchSignal make_switch_signal(int horizon, double tau, double upsilon, int num_modes, std::uint64_t seed,
                                double mean_gap) {
  check_dwell_parameters(horizon, tau, upsilon);
  if (num_modes < 1) throw InvalidSchedule("switch signal: need at least one mode");
  if (!(mean_gap >= 1.0)) throw InvalidSchedule("switch signal: mean gap must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> first(1, num_modes);
  std::geometric_distribution<int> gap(1.0 / mean_gap);
  SwitchSignal s{{{0, first(rng)}}, horizon, tau, upsilon};
  if (num_modes == 1) return s;
  // fits(c): adding a switch at c keeps every window ending at c + 1 within bound;
  // windows ending later are checked when later switches are added.
  auto fits = [&](int c) {
    for (int t1 = 0; t1 <= c; ++t1)
      if (s.switches_in(t1, c + 1) + 1 > upsilon + (c + 1 - t1) / tau) return false;
    return true;
  };
  int t = 0;
  while (true) {
    int c = t + 1 + gap(rng);
    while (c < horizon && !fits(c)) ++c;
    if (c >= horizon) break;
    std::uniform_int_distribution<int> other(1, num_modes - 1);
    int m = other(rng);
    if (m >= s.breakpoints.back().mode) ++m;
    s.breakpoints.push_back({c, m});
    t = c;
  }
  return s;
}

}  // namespace ddc
