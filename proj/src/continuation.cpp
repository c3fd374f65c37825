#include "sktmorse/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sktmorse/errors.hpp"
#include "sktmorse/limiting.hpp"

namespace skt {

namespace {

std::vector<double> flatten(const SteadyState& s) {
  std::vector<double> x(2 * s.n());
  std::copy(s.u.begin(), s.u.end(), x.begin());
  std::copy(s.v.begin(), s.v.end(), x.begin() + s.n());
  return x;
}

SteadyState unflatten(const std::vector<double>& x, BranchTag tag) {
  const int n = static_cast<int>(x.size()) / 2;
  SteadyState s;
  s.u.assign(x.begin(), x.begin() + n);
  s.v.assign(x.begin() + n, x.end());
  s.tag = tag;
  return s;
}

int plain_negative_count(const std::vector<std::complex<double>>& ev) {
  int c = 0;
  for (const auto& mu : ev)
    if (mu.real() < 0.0) ++c;
  return c;
}

struct Annotated {
  std::vector<std::complex<double>> all;  // full spectrum, ascending real part
  double inf_norm = 0.0;
};

Annotated annotate(const ModelParams& params, const Grid& grid,
                   const SteadyState& state) {
  LinearizedSystem lin = assemble_linearization(params, grid, state);
  Annotated a;
  a.all = eigenvalues_sorted(lin);
  a.inf_norm = lin.inf_norm;
  return a;
}

BranchPoint annotate_point(const ModelParams& params, const Grid& grid,
                           const SteadyState& state, double arclength, int m) {
  Annotated a = annotate(params, grid, state);
  BranchPoint p;
  p.lambda = params.lambda;
  p.state = state;
  p.arclength = arclength;
  const int keep = std::min<int>(m, static_cast<int>(a.all.size()));
  p.spectrum_summary.assign(a.all.begin(), a.all.begin() + keep);
  const double tol_zero = kZeroTolScale * a.inf_norm;
  p.morse_index = count_negative(a.all, tol_zero);
  p.critical_flag = count_critical(a.all, tol_zero) > 0;
  return p;
}

// Tangent (t_x, t_lambda) solving J t_x + F_lambda t_lambda = 0, normalized and
// oriented along the previous tangent. J = -L, so J y = -F_lambda reads
// L y = F_lambda.
struct Tangent {
  std::vector<double> x;
  double lambda = 0.0;
};

Tangent compute_tangent(const ModelParams& params, const Grid& grid,
                        const SteadyState& state, const Tangent& previous) {
  LinearizedSystem lin = assemble_linearization(params, grid, state);
  BandedSolver lu(lin.matrix, grid.n);
  std::vector<double> y = lu.solve(residual_lambda_derivative(state));
  Tangent t;
  t.x = std::move(y);
  t.lambda = 1.0;
  double nrm = std::sqrt(two_norm(t.x) * two_norm(t.x) + 1.0);
  for (auto& xi : t.x) xi /= nrm;
  t.lambda /= nrm;
  double dot = t.lambda * previous.lambda;
  for (size_t i = 0; i < t.x.size(); ++i) dot += t.x[i] * previous.x[i];
  if (dot < 0.0) {
    for (auto& xi : t.x) xi = -xi;
    t.lambda = -t.lambda;
  }
  return t;
}

// One Keller corrector: Newton on residual(x, lambda) = 0 plus the arclength
// constraint t.(x-x0, lambda-lambda0) = ds, solved by block elimination with
// two banded solves per iteration.
bool keller_correct(const ModelParams& params, const Grid& grid,
                    const Tangent& tangent, const std::vector<double>& x0,
                    double lambda0, double ds, const StepControls& controls,
                    SteadyState& state, double& lambda) {
  for (int iter = 0; iter < controls.corrector_max_iters; ++iter) {
    ModelParams p = params.with_lambda(lambda);
    std::vector<double> r = assemble_residual(p, grid, state);
    double g = -ds;
    {
      std::vector<double> x = flatten(state);
      for (size_t i = 0; i < x.size(); ++i) g += tangent.x[i] * (x[i] - x0[i]);
      g += tangent.lambda * (lambda - lambda0);
    }
    if (max_norm(r) <= controls.newton.tol_residual &&
        std::abs(g) <= 1e-10 * std::max(1.0, std::abs(ds)))
      return true;

    LinearizedSystem lin = assemble_linearization(p, grid, state);
    BandedSolver lu(lin.matrix, grid.n);
    // J y1 = -r  =>  L y1 = r ;  J y2 = -F_lambda  =>  L y2 = F_lambda.
    std::vector<double> y1 = lu.solve(r);
    std::vector<double> y2 = lu.solve(residual_lambda_derivative(state));
    double tx_y1 = 0.0, tx_y2 = 0.0;
    for (size_t i = 0; i < y1.size(); ++i) {
      tx_y1 += tangent.x[i] * y1[i];
      tx_y2 += tangent.x[i] * y2[i];
    }
    const double denom = tangent.lambda + tx_y2;
    if (denom == 0.0) return false;
    const double dlam = (-g - tx_y1) / denom;
    const int n = grid.n;
    for (int i = 0; i < n; ++i) {
      state.u[i] += y1[i] + dlam * y2[i];
      state.v[i] += y1[n + i] + dlam * y2[n + i];
    }
    lambda += dlam;
  }
  return false;
}

}  // namespace

BranchPoint make_branch_point(const ModelParams& params, const Grid& grid,
                              const SteadyState& state, double arclength,
                              int num_eigenvalues) {
  return annotate_point(params, grid, state, arclength, num_eigenvalues);
}

Branch continue_branch(const ModelParams& params, const Grid& grid,
                       const BranchPoint& start, int direction,
                       const StepControls& controls, const StopRule& stop) {
  if (direction != 1 && direction != -1)
    throw input_error("continue_branch: direction must be +-1");
  {
    ModelParams p0 = params.with_lambda(start.lambda);
    auto r0 = assemble_residual(p0, grid, start.state);
    if (max_norm(r0) > 10.0 * controls.newton.tol_residual)
      throw input_error("continue_branch: start point violates the residual tolerance");
  }

  Branch branch;
  branch.tag = start.state.tag;
  branch.points.push_back(start);

  Tangent tangent;
  tangent.x.assign(2 * grid.n, 0.0);
  tangent.lambda = static_cast<double>(direction);
  double ds = controls.ds_init;

  while (static_cast<int>(branch.points.size()) < stop.max_points) {
    const BranchPoint& cur = branch.points.back();
    if (cur.lambda >= stop.lambda_max || cur.lambda <= stop.lambda_min) break;

    ModelParams p_cur = params.with_lambda(cur.lambda);
    try {
      tangent = compute_tangent(p_cur, grid, cur.state, tangent);
    } catch (const singular_matrix_error&) {
      // Sitting next to a bifurcation point: keep the previous tangent.
    }

    std::vector<double> x0 = flatten(cur.state);
    bool accepted = false;
    while (!accepted) {
      SteadyState trial = cur.state;
      double lambda = cur.lambda + ds * tangent.lambda;
      const int n = grid.n;
      for (int i = 0; i < n; ++i) {
        trial.u[i] += ds * tangent.x[i];
        trial.v[i] += ds * tangent.x[n + i];
      }
      bool ok = false;
      try {
        ok = keller_correct(params, grid, tangent, x0, cur.lambda, ds, controls,
                            trial, lambda);
      } catch (const singular_matrix_error&) {
        ok = false;  // handled by step halving
      }
      if (ok) {
        BranchPoint next = annotate_point(params.with_lambda(lambda), grid,
                                          trial, cur.arclength + ds,
                                          controls.num_eigenvalues);
        next.state.tag = branch.tag;
        branch.points.push_back(std::move(next));
        ds = std::min(ds * controls.growth, controls.ds_max);
        accepted = true;
      } else {
        ds *= 0.5;
        if (ds < controls.ds_min) {
          branch.stalled = true;
          throw stall_error("continue_branch: step underflow", branch);
        }
      }
    }
  }
  return branch;
}

std::vector<BifurcationEvent> detect_bifurcations(const ModelParams& params,
                                                  const Grid& grid,
                                                  const Branch& branch,
                                                  const StepControls& controls) {
  std::vector<BifurcationEvent> events;
  if (branch.points.size() < 2)
    throw input_error("detect_bifurcations: need at least 2 annotated points");

  for (size_t i = 0; i + 1 < branch.points.size(); ++i) {
    const BranchPoint& a = branch.points[i];
    const BranchPoint& b = branch.points[i + 1];
    const int ca = plain_negative_count(a.spectrum_summary);
    const int cb = plain_negative_count(b.spectrum_summary);
    if (ca == cb) continue;

    // The crossing eigenvalue is the (k+1)-th smallest real part, k = min count.
    const int k = std::min(ca, cb);
    auto mu_at = [&](double lam, const SteadyState& seed,
                     SteadyState& resolved) -> std::pair<double, double> {
      ModelParams p = params.with_lambda(lam);
      resolved = newton_solve(p, grid, seed, controls.newton);
      LinearizedSystem lin = assemble_linearization(p, grid, resolved);
      auto ev = eigenvalues_sorted(lin);
      return {ev[k].real(), lin.inf_norm};
    };

    BifurcationEvent ev;
    ev.index_before = a.lambda < b.lambda ? ca : cb;
    double l0 = a.lambda, l1 = b.lambda;
    SteadyState s0 = a.state, s1 = b.state, resolved;
    auto [g0, norm0] = mu_at(l0, s0, resolved);
    s0 = resolved;
    auto [g1, norm1] = mu_at(l1, s1, resolved);
    s1 = resolved;
    const double lo = std::min(a.lambda, b.lambda);
    const double hi = std::max(a.lambda, b.lambda);

    bool refined = false;
    for (int it = 0; it < 30; ++it) {
      if (g1 == g0) break;
      double lnew = l1 - g1 * (l1 - l0) / (g1 - g0);
      if (lnew < lo || lnew > hi) lnew = 0.5 * (l0 + l1);  // keep the bracket
      auto [gnew, nrm] = mu_at(lnew, s1, resolved);
      l0 = l1;
      g0 = g1;
      s0 = s1;
      l1 = lnew;
      g1 = gnew;
      s1 = resolved;
      norm1 = nrm;
      if (std::abs(g1) <= 1e-8 * norm1) {
        refined = true;
        break;
      }
    }
    ev.lambda_star = l1;
    ev.approximate = !refined;
    // Slope sign from the last secant pair; ties resolved by the index change.
    const double slope = (g1 - g0) / (l1 - l0 + 1e-300);
    ev.crossing_direction = slope < 0.0 ? -1 : 1;

    // Kernel vector: eigenvector of the eigenvalue closest to zero.
    {
      ModelParams p = params.with_lambda(l1);
      LinearizedSystem lin = assemble_linearization(p, grid, s1);
      DenseEigenResult full = dense_eigen(lin.matrix);
      size_t best = 0;
      double best_abs = 1e300;
      for (size_t kk = 0; kk < full.values.size(); ++kk) {
        const double m = std::abs(full.values[kk]);
        if (m < best_abs) {
          best_abs = m;
          best = kk;
        }
      }
      ev.kernel_vector.resize(2 * grid.n);
      for (int ii = 0; ii < 2 * grid.n; ++ii)
        ev.kernel_vector[ii] = full.vectors[best][ii].real();
      const double nrm = two_norm(ev.kernel_vector);
      if (nrm > 0.0)
        for (auto& q : ev.kernel_vector) q /= nrm;
      // Orient so the difference mode u-v is positive near the left boundary.
      double lead = 0.0;
      for (int ii = 0; ii < grid.n / 4; ++ii)
        lead += ev.kernel_vector[ii] - ev.kernel_vector[grid.n + ii];
      if (lead < 0.0)
        for (auto& q : ev.kernel_vector) q = -q;
    }
    events.push_back(std::move(ev));
  }
  return events;
}

BranchPoint switch_branch(const ModelParams& params, const Grid& grid,
                          const BifurcationEvent& event,
                          const BranchPoint& parent_point, double amplitude,
                          const StepControls& controls) {
  if (amplitude == 0.0) throw input_error("switch_branch: amplitude must be nonzero");
  if (event.kernel_vector.empty() ||
      static_cast<int>(event.kernel_vector.size()) != 2 * grid.n)
    throw input_error("switch_branch: event carries no kernel vector");

  const double lambda_c = event.lambda_star + controls.switch_offset;
  ModelParams p = params.with_lambda(lambda_c);
  SteadyState parent = newton_solve(p, grid, parent_point.state, controls.newton);

  SteadyState guess = parent;
  const int n = grid.n;
  for (int i = 0; i < n; ++i) {
    guess.u[i] += amplitude * event.kernel_vector[i];
    guess.v[i] += amplitude * event.kernel_vector[n + i];
  }
  SteadyState child = newton_solve(p, grid, guess, controls.newton);

  double dist = 0.0;
  for (int i = 0; i < n; ++i) {
    dist += (child.u[i] - parent.u[i]) * (child.u[i] - parent.u[i]);
    dist += (child.v[i] - parent.v[i]) * (child.v[i] - parent.v[i]);
  }
  dist = std::sqrt(dist);
  const double threshold = std::max(10.0 * std::abs(amplitude) *
                                        controls.newton.tol_residual,
                                    1e4 * controls.newton.tol_residual);
  if (dist <= threshold)
    throw no_switch_error(
        "switch_branch: corrector fell back onto the parent branch; try a "
        "larger amplitude or offset",
        dist);

  // Child class from the sign of u-v mass on the left half.
  double lead = 0.0;
  for (int i = 0; i < n / 2; ++i) lead += child.u[i] - child.v[i];
  child.tag = lead >= 0.0 ? BranchTag::segregation_plus
                          : BranchTag::segregation_minus;
  return make_branch_point(p, grid, child, 0.0, controls.num_eigenvalues);
}

BranchPoint switch_branch_auto(const ModelParams& params, const Grid& grid,
                               const BifurcationEvent& event,
                               const BranchPoint& parent_point, int sign,
                               const StepControls& controls) {
  const double norm_parent = two_norm(flatten(parent_point.state));
  double delta = controls.switch_delta_rel * std::max(norm_parent, 1e-6);
  for (int attempt = 0; attempt < 10; ++attempt) {
    try {
      return switch_branch(params, grid, event, parent_point, sign * delta,
                           controls);
    } catch (const no_switch_error&) {
      delta *= 2.0;
    }
  }
  throw no_switch_error("switch_branch_auto: amplitude ladder exhausted", 0.0);
}

double segregation_measure(const SteadyState& state, const Grid& grid) {
  if (state.n() != grid.n)
    throw input_error("segregation_measure: state does not match grid");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    if (state.u[i] < 0.0 || state.v[i] < 0.0)
      throw input_error("segregation_measure: state must be nonnegative");
    num += std::min(state.u[i], state.v[i]);
    den += std::max(state.u[i], state.v[i]);
  }
  // Trapezoid with zero boundary values reduces to h * interior sums.
  if (den * grid.h == 0.0)
    throw undefined_measure_error("segregation_measure: zero state");
  return num / den;
}

SteadyState seed_trivial(const Grid& grid) {
  return SteadyState::zero(grid, BranchTag::trivial);
}

std::optional<SteadyState> seed_semitrivial(const ModelParams& params,
                                            const Grid& grid, bool u_component) {
  const double b = u_component ? params.b1 : params.c2;
  auto theta = solve_logistic(params.lambda, b, grid);
  if (!theta) return std::nullopt;
  SteadyState s = SteadyState::zero(
      grid, u_component ? BranchTag::semitrivial_u : BranchTag::semitrivial_v);
  if (u_component)
    s.u = *theta;
  else
    s.v = *theta;
  return s;
}

std::optional<SteadyState> seed_coexistence(const ModelParams& params,
                                            const Grid& grid, double lambda,
                                            const NewtonSettings& settings) {
  const double lam1 = discrete_laplacian_eigenvalues(grid)[0];
  if (lambda <= lam1) return std::nullopt;
  ModelParams p = params.with_lambda(lambda);

  for (double factor : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    SteadyState guess = SteadyState::zero(grid, BranchTag::coexistence);
    for (int i = 0; i < grid.n; ++i) {
      const double s = factor * (0.1 / params.alpha) *
                       std::sin(std::numbers::pi * (grid.node(i) + grid.ell) /
                                (2.0 * grid.ell));
      guess.u[i] = s;
      guess.v[i] = s;
    }
    try {
      SteadyState sol = newton_solve(p, grid, guess, settings);
      if (max_norm(sol.u) > 1e-6 && max_norm(sol.v) > 1e-6) {
        bool positive = true;
        for (int i = 0; i < grid.n; ++i)
          positive = positive && sol.u[i] > 0.0 && sol.v[i] > 0.0;
        if (positive) {
          sol.tag = BranchTag::coexistence;
          return sol;
        }
      }
    } catch (const error&) {
      // try the next amplitude
    }
  }
  return std::nullopt;
}

}  // namespace skt
