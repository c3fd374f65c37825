#include "sktmorse/model.hpp"

#include <algorithm>
#include <cmath>

#include "sktmorse/errors.hpp"

namespace skt {

void ModelParams::validate() const {
  if (!(alpha > 0.0)) throw input_error("ModelParams: alpha must be > 0");
  if (!(b1 > 0.0 && b2 > 0.0 && c1 > 0.0 && c2 > 0.0))
    throw input_error("ModelParams: competition coefficients must be > 0");
  if (!(ell > 0.0)) throw input_error("ModelParams: ell must be > 0");
  if (!std::isfinite(lambda)) throw input_error("ModelParams: lambda not finite");
}

Grid Grid::uniform(int n, double ell) {
  if (n < 3) throw input_error("Grid: need at least 3 interior nodes");
  if (!(ell > 0.0)) throw input_error("Grid: ell must be > 0");
  Grid g;
  g.n = n;
  g.ell = ell;
  g.h = 2.0 * ell / (n + 1);
  return g;
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = node(i);
  return x;
}

std::string to_string(BranchTag tag) {
  switch (tag) {
    case BranchTag::trivial: return "trivial";
    case BranchTag::semitrivial_u: return "semitrivial_u";
    case BranchTag::semitrivial_v: return "semitrivial_v";
    case BranchTag::coexistence: return "coexistence";
    case BranchTag::segregation_plus: return "segregation_plus";
    case BranchTag::segregation_minus: return "segregation_minus";
  }
  return "unknown";
}

BranchTag branch_tag_from_string(const std::string& s) {
  if (s == "trivial") return BranchTag::trivial;
  if (s == "semitrivial_u") return BranchTag::semitrivial_u;
  if (s == "semitrivial_v") return BranchTag::semitrivial_v;
  if (s == "coexistence") return BranchTag::coexistence;
  if (s == "segregation_plus") return BranchTag::segregation_plus;
  if (s == "segregation_minus") return BranchTag::segregation_minus;
  throw input_error("unknown branch tag: " + s);
}

SteadyState SteadyState::zero(const Grid& grid, BranchTag tag) {
  SteadyState s;
  s.u.assign(grid.n, 0.0);
  s.v.assign(grid.n, 0.0);
  s.tag = tag;
  return s;
}

void apply_second_difference(const std::vector<double>& f, double h,
                             std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  out.resize(n);
  const double ih2 = 1.0 / (h * h);
  for (int i = 0; i < n; ++i) {
    const double fm = (i > 0) ? f[i - 1] : 0.0;
    const double fp = (i < n - 1) ? f[i + 1] : 0.0;
    out[i] = ((fm - f[i]) + (fp - f[i])) * ih2;
  }
}

std::vector<double> assemble_residual(const ModelParams& params,
                                      const Grid& grid,
                                      const SteadyState& state) {
  params.validate();
  const int n = grid.n;
  if (state.n() != n || static_cast<int>(state.v.size()) != n)
    throw input_error("assemble_residual: state does not match grid");

  std::vector<double> comp_u(n), comp_v(n);
  for (int i = 0; i < n; ++i) {
    comp_u[i] = (1.0 + params.alpha * state.v[i]) * state.u[i];
    comp_v[i] = (1.0 + params.alpha * state.u[i]) * state.v[i];
  }
  std::vector<double> lap_u, lap_v;
  apply_second_difference(comp_u, grid.h, lap_u);
  apply_second_difference(comp_v, grid.h, lap_v);

  std::vector<double> r(2 * n);
  for (int i = 0; i < n; ++i) {
    const double u = state.u[i], v = state.v[i];
    r[i] = lap_u[i] + u * (params.lambda - params.b1 * u - params.c1 * v);
    r[n + i] = lap_v[i] + v * (params.lambda - params.b2 * u - params.c2 * v);
  }
  return r;
}

LinearizedSystem assemble_linearization(const ModelParams& params,
                                        const Grid& grid,
                                        const SteadyState& state) {
  params.validate();
  const int n = grid.n;
  if (state.n() != n || static_cast<int>(state.v.size()) != n)
    throw input_error("assemble_linearization: state does not match grid");

  LinearizedSystem sys;
  sys.matrix = DenseMatrix(2 * n, 2 * n);
  sys.base_state = state;
  DenseMatrix& L = sys.matrix;
  const double ih2 = 1.0 / (grid.h * grid.h);

  // Jacobian of the residual, built per block; L = -J.
  // The diffusion part of block (f,g) is D2 * diag(coefficient at column node).
  auto add_diffusion = [&](int row_off, int col_off, auto coeff) {
    for (int i = 0; i < n; ++i) {
      if (i > 0) L(row_off + i, col_off + i - 1) -= coeff(i - 1) * ih2;
      L(row_off + i, col_off + i) -= -2.0 * coeff(i) * ih2;
      if (i < n - 1) L(row_off + i, col_off + i + 1) -= coeff(i + 1) * ih2;
    }
  };
  const auto& u = state.u;
  const auto& v = state.v;
  const double al = params.alpha;

  add_diffusion(0, 0, [&](int j) { return 1.0 + al * v[j]; });
  add_diffusion(0, n, [&](int j) { return al * u[j]; });
  add_diffusion(n, 0, [&](int j) { return al * v[j]; });
  add_diffusion(n, n, [&](int j) { return 1.0 + al * u[j]; });

  for (int i = 0; i < n; ++i) {
    L(i, i) -= params.lambda - 2.0 * params.b1 * u[i] - params.c1 * v[i];
    L(i, n + i) -= -params.c1 * u[i];
    L(n + i, i) -= -params.b2 * v[i];
    L(n + i, n + i) -= params.lambda - params.b2 * u[i] - 2.0 * params.c2 * v[i];
  }

  sys.inf_norm = L.inf_norm();
  return sys;
}

std::vector<double> residual_lambda_derivative(const SteadyState& state) {
  const int n = state.n();
  std::vector<double> d(2 * n);
  std::copy(state.u.begin(), state.u.end(), d.begin());
  std::copy(state.v.begin(), state.v.end(), d.begin() + n);
  return d;
}

double max_norm(const std::vector<double>& x) {
  double m = 0.0;
  for (double xi : x) m = std::max(m, std::abs(xi));
  return m;
}

double two_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return std::sqrt(s);
}

}  // namespace skt
