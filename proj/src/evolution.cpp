#include "sktmorse/evolution.hpp"

#include <algorithm>
#include <cmath>

#include "sktmorse/errors.hpp"
#include "sktmorse/linalg.hpp"

namespace skt {

namespace {

double probe_distance(const SteadyState& s, const SteadyState& ref) {
  double d = 0.0;
  for (size_t i = 0; i < s.u.size(); ++i) {
    d += (s.u[i] - ref.u[i]) * (s.u[i] - ref.u[i]);
    d += (s.v[i] - ref.v[i]) * (s.v[i] - ref.v[i]);
  }
  return std::sqrt(d);
}

}  // namespace

Trajectory evolve(const ModelParams& params, const Grid& grid,
                  const SteadyState& initial, double T, double dt,
                  const std::optional<SteadyState>& reference) {
  params.validate();
  if (!(dt > 0.0) || !(T > 0.0)) throw input_error("evolve: need T, dt > 0");
  if (initial.n() != grid.n) throw input_error("evolve: state/grid mismatch");
  for (int i = 0; i < grid.n; ++i)
    if (initial.u[i] < 0.0 || initial.v[i] < 0.0)
      throw input_error("evolve: initial data must be nonnegative");

  const int n = grid.n;
  const double ih2 = 1.0 / (grid.h * grid.h);
  const long steps = static_cast<long>(std::ceil(T / dt - 1e-12));
  const long snap_every = std::max<long>(1, static_cast<long>(T / (200.0 * dt)));

  Trajectory traj;
  SteadyState s = initial;
  std::vector<double> sub(n - 1), diag(n), sup(n - 1), rhs(n), coeff(n);

  // Implicit solve of (I/dt - D2 * diag(c)) w = rhs for frozen coefficients c.
  auto implicit_step = [&](const std::vector<double>& c,
                           const std::vector<double>& w,
                           const std::vector<double>& reaction,
                           std::vector<double>& out) {
    for (int i = 0; i < n; ++i) {
      diag[i] = 1.0 / dt + 2.0 * c[i] * ih2;
      rhs[i] = w[i] / dt + reaction[i];
    }
    for (int i = 0; i + 1 < n; ++i) {
      sub[i] = -c[i] * ih2;      // A(i+1, i), coefficient at the column node
      sup[i] = -c[i + 1] * ih2;  // A(i, i+1)
    }
    tridiagonal_solve(sub, diag, sup, rhs);
    out = rhs;
  };

  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    if (reference) traj.probe.push_back(probe_distance(s, *reference));
  };

  std::vector<double> fu(n), fv(n), un(n), vn(n);
  double t = 0.0;
  record(t);
  for (long k = 0; k < steps; ++k) {
    for (int i = 0; i < n; ++i) {
      fu[i] = s.u[i] * (params.lambda - params.b1 * s.u[i] - params.c1 * s.v[i]);
      fv[i] = s.v[i] * (params.lambda - params.b2 * s.u[i] - params.c2 * s.v[i]);
    }
    for (int i = 0; i < n; ++i) coeff[i] = 1.0 + params.alpha * s.v[i];
    implicit_step(coeff, s.u, fu, un);
    for (int i = 0; i < n; ++i) coeff[i] = 1.0 + params.alpha * s.u[i];
    implicit_step(coeff, s.v, fv, vn);

    bool clamped = false;
    for (int i = 0; i < n; ++i) {
      if (un[i] < 0.0) {
        if (un[i] < -1e-8) clamped = true;
        un[i] = std::max(un[i], 0.0);
      }
      if (vn[i] < 0.0) {
        if (vn[i] < -1e-8) clamped = true;
        vn[i] = std::max(vn[i], 0.0);
      }
    }
    if (clamped) ++traj.clamped_steps;
    s.u = un;
    s.v = vn;
    t += dt;
    if ((k + 1) % snap_every == 0 || k + 1 == steps) record(t);

    if (max_norm(s.u) > 1e6 || max_norm(s.v) > 1e6)
      throw blowup_error("evolve: solution norm exceeded 1e6", std::move(traj));
  }
  return traj;
}

double growth_rate(const Trajectory& trajectory, const GrowthWindow& window) {
  if (trajectory.probe.empty())
    throw estimation_error("growth_rate: trajectory has no probe series");
  std::vector<double> ts, ys;
  for (size_t i = 0; i < trajectory.probe.size(); ++i) {
    const double p = trajectory.probe[i];
    if (p > window.probe_lo && p < window.probe_hi) {
      ts.push_back(trajectory.times[i]);
      ys.push_back(std::log(p));
    }
  }
  if (ts.size() < 10)
    throw estimation_error("growth_rate: fewer than 10 samples in window");
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  const double m = static_cast<double>(ts.size());
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
    stt += ts[i] * ts[i];
    sty += ts[i] * ys[i];
  }
  const double denom = m * stt - st * st;
  if (denom == 0.0) throw estimation_error("growth_rate: degenerate time window");
  return (m * sty - st * sy) / denom;
}

}  // namespace skt
