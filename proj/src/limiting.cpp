#include "sktmorse/limiting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sktmorse/errors.hpp"
#include "sktmorse/solvers.hpp"

namespace skt {

namespace {

constexpr double kScalarNewtonTol = 1e-9;
constexpr int kScalarNewtonIters = 80;

// -D2 as a symmetric tridiagonal (diag, off) pair plus a nodal potential q.
void schroedinger_tridiagonal(const std::vector<double>& q, double h,
                              std::vector<double>& diag,
                              std::vector<double>& off) {
  const int n = static_cast<int>(q.size());
  const double ih2 = 1.0 / (h * h);
  diag.resize(n);
  off.assign(n - 1, -ih2);
  for (int i = 0; i < n; ++i) diag[i] = 2.0 * ih2 + q[i];
}

// Damped Newton for a scalar nodal equation r(w) with tridiagonal Jacobian
// D2 + diag(jac_diag(w)). Returns false when out of iterations.
template <typename Residual, typename JacDiag>
bool scalar_newton(std::vector<double>& w, double h, Residual residual,
                   JacDiag jac_diag) {
  const int n = static_cast<int>(w.size());
  const double ih2 = 1.0 / (h * h);
  std::vector<double> r(n), jd(n);
  for (int iter = 0; iter < kScalarNewtonIters; ++iter) {
    residual(w, r);
    double rnorm = max_norm(r);
    if (rnorm <= kScalarNewtonTol) return true;
    jac_diag(w, jd);
    std::vector<double> sub(n - 1, ih2), sup(n - 1, ih2), diag(n), step(n);
    for (int i = 0; i < n; ++i) diag[i] = -2.0 * ih2 + jd[i];
    for (int i = 0; i < n; ++i) step[i] = -r[i];
    tridiagonal_solve(sub, diag, sup, step);
    double t = 1.0;
    std::vector<double> trial(n), rt(n);
    while (true) {
      for (int i = 0; i < n; ++i) trial[i] = w[i] + t * step[i];
      residual(trial, rt);
      if (max_norm(rt) < rnorm || t <= 1.0 / 64.0) break;
      t *= 0.5;
    }
    w = trial;
  }
  std::vector<double> rf(n);
  residual(w, rf);
  return max_norm(rf) <= kScalarNewtonTol;
}

}  // namespace

std::vector<double> discrete_laplacian_eigenvalues(const Grid& grid) {
  std::vector<double> ev(grid.n);
  const double c = 4.0 / (grid.h * grid.h);
  for (int j = 1; j <= grid.n; ++j) {
    const double s = std::sin(j * std::numbers::pi * grid.h / (4.0 * grid.ell));
    ev[j - 1] = c * s * s;
  }
  return ev;
}

std::vector<double> discrete_laplacian_eigenvector(const Grid& grid, int j) {
  if (j < 1 || j > grid.n)
    throw input_error("discrete_laplacian_eigenvector: j out of range");
  std::vector<double> phi(grid.n);
  for (int i = 0; i < grid.n; ++i)
    phi[i] = std::sin(j * std::numbers::pi * (i + 1) / (grid.n + 1));
  const double nrm = two_norm(phi);
  for (auto& p : phi) p /= nrm;
  return phi;
}

std::optional<std::vector<double>> solve_logistic(double lambda, double b,
                                                  const Grid& grid) {
  if (!(b > 0.0)) throw input_error("solve_logistic: b must be > 0");
  const double lam1 = discrete_laplacian_eigenvalues(grid)[0];
  if (lambda <= lam1) return std::nullopt;

  // Seed amplitude from the quadratic bifurcation balance
  // t = (lambda - lambda_1) * sum(Phi^2) / (b * sum(Phi^3)), Phi sup-normalized.
  const int n = grid.n;
  std::vector<double> phi(n);
  for (int i = 0; i < n; ++i)
    phi[i] = std::sin(std::numbers::pi * (i + 1) / (n + 1));
  double s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < n; ++i) {
    s2 += phi[i] * phi[i];
    s3 += phi[i] * phi[i] * phi[i];
  }
  const double t0 = (lambda - lam1) * s2 / (b * s3);
  std::vector<double> theta(n);
  for (int i = 0; i < n; ++i) theta[i] = t0 * phi[i];

  bool ok = scalar_newton(
      theta, grid.h,
      [&](const std::vector<double>& w, std::vector<double>& r) {
        apply_second_difference(w, grid.h, r);
        for (int i = 0; i < n; ++i) r[i] += w[i] * (lambda - b * w[i]);
      },
      [&](const std::vector<double>& w, std::vector<double>& jd) {
        for (int i = 0; i < n; ++i) jd[i] = lambda - 2.0 * b * w[i];
      });
  if (!ok) throw divergence_error("solve_logistic: Newton stalled", theta, {}, 0.0);
  return theta;
}

WeightedEig weighted_principal_eig(const std::vector<double>& q,
                                   const std::vector<double>& r,
                                   const Grid& grid) {
  const int n = grid.n;
  if (static_cast<int>(q.size()) != n || static_cast<int>(r.size()) != n)
    throw input_error("weighted_principal_eig: size mismatch");
  double rmax = 0.0;
  for (double ri : r) {
    if (ri < 0.0) throw input_error("weighted_principal_eig: r must be >= 0");
    rmax = std::max(rmax, ri);
  }
  if (rmax == 0.0)
    throw input_error("weighted_principal_eig: r identically zero");
  for (double ri : r) {
    if (ri < 1e-14 * rmax)
      throw input_error(
          "weighted_principal_eig: r vanishes at a node; the similarity "
          "transform needs r > 0");
  }

  // Similarity with r^{1/2}: B = D^{-1/2} (-D2 + diag(q)) D^{-1/2}, D = diag(r).
  std::vector<double> diag(n), off(n - 1);
  const double ih2 = 1.0 / (grid.h * grid.h);
  for (int i = 0; i < n; ++i) diag[i] = (2.0 * ih2 + q[i]) / r[i];
  for (int i = 0; i + 1 < n; ++i) off[i] = -ih2 / std::sqrt(r[i] * r[i + 1]);

  auto [mu1, y] = symmetric_tridiagonal_smallest(diag, off);
  WeightedEig out;
  out.mu1 = mu1;
  out.eigenvector.resize(n);
  for (int i = 0; i < n; ++i) out.eigenvector[i] = y[i] / std::sqrt(r[i]);
  double s = 0.0;
  for (double p : out.eigenvector) s += p;
  if (s < 0.0)
    for (auto& p : out.eigenvector) p = -p;
  const double nrm = two_norm(out.eigenvector);
  for (auto& p : out.eigenvector) p /= nrm;
  return out;
}

std::vector<double> weighted_eigenvalues(const std::vector<double>& q,
                                         const std::vector<double>& r,
                                         const Grid& grid) {
  const int n = grid.n;
  if (static_cast<int>(q.size()) != n || static_cast<int>(r.size()) != n)
    throw input_error("weighted_eigenvalues: size mismatch");
  std::vector<double> diag(n), off(n - 1);
  const double ih2 = 1.0 / (grid.h * grid.h);
  for (int i = 0; i < n; ++i) {
    if (!(r[i] > 0.0)) throw input_error("weighted_eigenvalues: r must be > 0");
    diag[i] = (2.0 * ih2 + q[i]) / r[i];
  }
  for (int i = 0; i + 1 < n; ++i) off[i] = -ih2 / std::sqrt(r[i] * r[i + 1]);
  return symmetric_tridiagonal_eigenvalues(diag, off);
}

namespace {

std::vector<double> u_from_z(const std::vector<double>& Z) {
  std::vector<double> U(Z.size());
  for (size_t i = 0; i < Z.size(); ++i)
    U[i] = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * Z[i]));
  return U;
}

// One Newton solve of the Z-form equation D2 Z + lambda U(Z) = 0 from a seed.
bool ls1_newton(std::vector<double>& Z, double lambda, const Grid& grid) {
  const int n = grid.n;
  return scalar_newton(
      Z, grid.h,
      [&](const std::vector<double>& z, std::vector<double>& r) {
        apply_second_difference(z, grid.h, r);
        for (int i = 0; i < n; ++i) {
          const double arg = std::max(1.0 + 4.0 * z[i], 0.0);
          r[i] += lambda * 0.5 * (-1.0 + std::sqrt(arg));
        }
      },
      [&](const std::vector<double>& z, std::vector<double>& jd) {
        for (int i = 0; i < n; ++i) {
          const double arg = std::max(1.0 + 4.0 * z[i], 1e-12);
          jd[i] = lambda / std::sqrt(arg);
        }
      });
}

}  // namespace

std::optional<LimitProfileU> solve_ls1(double lambda, const Grid& grid) {
  const double lam1 = discrete_laplacian_eigenvalues(grid)[0];
  if (lambda <= lam1) return std::nullopt;

  const int n = grid.n;
  std::vector<double> phi(n);
  for (int i = 0; i < n; ++i)
    phi[i] = std::sin(std::numbers::pi * (i + 1) / (n + 1));

  // Ramp lambda toward the target so the seed is always close; far above
  // onset a direct sine seed tends to fall back to the trivial solution.
  std::vector<double> ramp;
  double gap = lambda - lam1;
  double g = std::min(gap, 0.5);
  while (g < gap) {
    ramp.push_back(lam1 + g);
    g *= 2.2;
  }
  ramp.push_back(lambda);

  double s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < n; ++i) {
    s2 += phi[i] * phi[i];
    s3 += phi[i] * phi[i] * phi[i];
  }
  const double t0 = (ramp.front() - lam1) * s2 / (ramp.front() * s3);
  std::vector<double> Z(n);
  for (int i = 0; i < n; ++i) Z[i] = t0 * phi[i];

  for (double lam : ramp) {
    if (!ls1_newton(Z, lam, grid))
      throw divergence_error("solve_ls1: Newton stalled", u_from_z(Z), {}, 0.0);
  }
  if (max_norm(Z) < 1e-8)
    throw divergence_error("solve_ls1: collapsed to the trivial profile",
                           u_from_z(Z), {}, 0.0);
  LimitProfileU out;
  out.U = u_from_z(Z);
  out.lambda = lambda;
  return out;
}

int count_sign_changes(const std::vector<double>& w) {
  int c = 0;
  double prev = 0.0;
  for (double wi : w) {
    if (wi == 0.0) continue;
    if (prev != 0.0 && prev * wi < 0.0) ++c;
    prev = wi;
  }
  return c;
}

std::optional<LimitProfileW> solve_ls2(double lambda, int j, int orientation,
                                       double b1, double c2, const Grid& grid) {
  if (j < 2) throw input_error("solve_ls2: j must be >= 2");
  if (orientation != 1 && orientation != -1)
    throw input_error("solve_ls2: orientation must be +-1");
  const auto lam_h = discrete_laplacian_eigenvalues(grid);
  if (lambda <= lam_h[j - 1]) return std::nullopt;

  const int n = grid.n;
  std::vector<double> phi(n);
  for (int i = 0; i < n; ++i)
    phi[i] = std::sin(j * std::numbers::pi * (i + 1) / (n + 1));

  // Quadratic balance amplitude: t = (lambda-lambda_j) sum(Phi^2) /
  // sum((b1 Phi_+^2 - c2 Phi_-^2) Phi).
  double s2 = 0.0, s3 = 0.0;
  for (int i = 0; i < n; ++i) {
    s2 += phi[i] * phi[i];
    const double pp = std::max(phi[i], 0.0), pm = std::max(-phi[i], 0.0);
    s3 += (b1 * pp * pp - c2 * pm * pm) * phi[i];
  }

  auto residual = [&](const std::vector<double>& w, std::vector<double>& r) {
    apply_second_difference(w, grid.h, r);
    for (int i = 0; i < n; ++i) {
      const double wp = std::max(w[i], 0.0), wm = std::max(-w[i], 0.0);
      r[i] += lambda * w[i] - b1 * wp * wp + c2 * wm * wm;
    }
  };
  auto jac_diag = [&](const std::vector<double>& w, std::vector<double>& jd) {
    for (int i = 0; i < n; ++i) {
      const double wp = std::max(w[i], 0.0), wm = std::max(-w[i], 0.0);
      jd[i] = lambda - 2.0 * b1 * wp - 2.0 * c2 * wm;
    }
  };

  int last_count = -1;
  for (double factor : {1.0, 2.0, 0.5, 4.0}) {
    const double t = factor * (lambda - lam_h[j - 1]) * s2 / s3;
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = orientation * t * phi[i];
    if (!scalar_newton(w, grid.h, residual, jac_diag)) continue;
    if (max_norm(w) < 1e-7) {
      last_count = 0;
      continue;  // fell back to the trivial solution
    }
    const int sc = count_sign_changes(w);
    last_count = sc;
    const int orient_ok = (w.front() > 0.0) == (orientation > 0);
    if (sc == j - 1 && orient_ok) {
      LimitProfileW out;
      out.w = std::move(w);
      out.lambda = lambda;
      out.j = j;
      out.orientation = orientation;
      return out;
    }
  }
  throw wrong_class_error("solve_ls2: converged with wrong sign-change count",
                          last_count);
}

DenseMatrix assemble_limiting_operator(double lambda,
                                       const std::vector<double>& U,
                                       const Grid& grid) {
  const int n = grid.n;
  if (static_cast<int>(U.size()) != n)
    throw input_error("assemble_limiting_operator: size mismatch");
  DenseMatrix M(2 * n, 2 * n);
  const double ih2 = 1.0 / (grid.h * grid.h);
  // -D2 * diag(g) into block (row_off, col_off), minus lambda on the diagonal
  // blocks.
  auto add = [&](int row_off, int col_off, auto g) {
    for (int i = 0; i < n; ++i) {
      if (i > 0) M(row_off + i, col_off + i - 1) -= g(i - 1) * ih2;
      M(row_off + i, col_off + i) -= -2.0 * g(i) * ih2;
      if (i < n - 1) M(row_off + i, col_off + i + 1) -= g(i + 1) * ih2;
    }
  };
  add(0, 0, [&](int i) { return 1.0 + U[i]; });
  add(0, n, [&](int i) { return U[i]; });
  add(n, 0, [&](int i) { return U[i]; });
  add(n, n, [&](int i) { return 1.0 + U[i]; });
  for (int i = 0; i < 2 * n; ++i) M(i, i) -= lambda;
  return M;
}

LimitingDecomposition limiting_eigen_decomposition(double lambda,
                                                   const Grid& grid) {
  const auto lam_h = discrete_laplacian_eigenvalues(grid);
  if (lambda <= lam_h[0])
    throw input_error("limiting_eigen_decomposition: needs lambda > lambda_1");
  auto profile = solve_ls1(lambda, grid);
  const std::vector<double>& U = profile->U;
  const int n = grid.n;

  LimitingDecomposition out;
  out.set_a.resize(n);
  for (int i = 0; i < n; ++i) out.set_a[i] = lam_h[i] - lambda;

  std::vector<double> r(n), q(n);
  for (int i = 0; i < n; ++i) {
    r[i] = 1.0 / (1.0 + 2.0 * U[i]);
    q[i] = -lambda * r[i];
  }
  out.set_b = weighted_eigenvalues(q, r, grid);

  DenseMatrix M = assemble_limiting_operator(lambda, U, grid);
  auto ev = dense_eigenvalues(M);
  out.full_spectrum.resize(2 * n);
  for (int i = 0; i < 2 * n; ++i) out.full_spectrum[i] = ev[i].real();
  std::sort(out.full_spectrum.begin(), out.full_spectrum.end());

  std::vector<double> expected;
  expected.reserve(2 * n);
  expected.insert(expected.end(), out.set_a.begin(), out.set_a.end());
  expected.insert(expected.end(), out.set_b.begin(), out.set_b.end());
  std::sort(expected.begin(), expected.end());

  for (int i = 0; i < 2 * n; ++i) {
    const double denom = std::max(1.0, std::abs(expected[i]));
    const double err = std::abs(out.full_spectrum[i] - expected[i]) / denom;
    out.max_mismatch = std::max(out.max_mismatch, err);
    if (err > 1e-6)
      throw decomposition_error(
          "limiting decomposition: spectrum does not match the decoupled sets",
          expected[i]);
  }
  return out;
}

ScalarLimitMorse scalar_limit_morse(double lambda, const std::vector<double>& w,
                                    double b1, double c2, const Grid& grid) {
  const int n = grid.n;
  if (static_cast<int>(w.size()) != n)
    throw input_error("scalar_limit_morse: size mismatch");
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) {
    const double wp = std::max(w[i], 0.0), wm = std::max(-w[i], 0.0);
    q[i] = -(lambda - 2.0 * b1 * wp - 2.0 * c2 * wm);
  }
  std::vector<double> diag, off;
  schroedinger_tridiagonal(q, grid.h, diag, off);
  auto ev = symmetric_tridiagonal_eigenvalues(diag, off);
  ScalarLimitMorse out;
  out.zero_count = count_sign_changes(w);
  for (double e : ev)
    if (e < 0.0) ++out.negative_count;
  out.smallest.assign(ev.begin(), ev.begin() + std::min<size_t>(6, ev.size()));
  return out;
}

DecouplingReport decoupling_check_profile(double lambda,
                                          const std::vector<double>& U,
                                          const Grid& grid) {
  const int n = grid.n;
  DenseMatrix M = assemble_limiting_operator(lambda, U, grid);

  // T = [[I, -I], [W, W]], T^{-1} = 0.5 [[I, W^{-1}], [-I, W^{-1}]],
  // W = diag(1+2U).
  DenseMatrix T(2 * n, 2 * n), Tinv(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    const double w = 1.0 + 2.0 * U[i];
    T(i, i) = 1.0;
    T(i, n + i) = -1.0;
    T(n + i, i) = w;
    T(n + i, n + i) = w;
    Tinv(i, i) = 0.5;
    Tinv(i, n + i) = 0.5 / w;
    Tinv(n + i, i) = -0.5;
    Tinv(n + i, n + i) = 0.5 / w;
  }
  DenseMatrix conj = matmul(T, matmul(M, Tinv));

  DecouplingReport rep;
  rep.operator_scale = 0.0;
  for (double a : M.a) rep.operator_scale = std::max(rep.operator_scale, std::abs(a));

  const double ih2 = 1.0 / (grid.h * grid.h);
  for (int i = 0; i < n; ++i) {
    for (int jj = 0; jj < n; ++jj) {
      double target = 0.0;
      if (i == jj) target = 2.0 * ih2 - lambda;
      if (std::abs(i - jj) == 1) target = -ih2;
      rep.h_block_deviation =
          std::max(rep.h_block_deviation, std::abs(conj(i, jj) - target));
      rep.k_to_h_coupling =
          std::max(rep.k_to_h_coupling, std::abs(conj(i, n + jj)));
      rep.h_to_k_coupling =
          std::max(rep.h_to_k_coupling, std::abs(conj(n + i, jj)));
    }
  }
  return rep;
}

DecouplingReport decoupling_check(double lambda, const Grid& grid) {
  const double lam1 = discrete_laplacian_eigenvalues(grid)[0];
  if (lambda <= lam1) {
    std::vector<double> U(grid.n, 0.0);
    return decoupling_check_profile(lambda, U, grid);
  }
  auto profile = solve_ls1(lambda, grid);
  return decoupling_check_profile(lambda, profile->U, grid);
}

}  // namespace skt
