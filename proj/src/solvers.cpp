#include "sktmorse/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "sktmorse/errors.hpp"

namespace skt {

namespace {

void apply_update(SteadyState& s, const std::vector<double>& step, double t) {
  const int n = s.n();
  for (int i = 0; i < n; ++i) {
    s.u[i] += t * step[i];
    s.v[i] += t * step[n + i];
  }
}

std::vector<std::complex<double>> sort_by_real(
    std::vector<std::complex<double>> ev) {
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

}  // namespace

SteadyState newton_solve(const ModelParams& params, const Grid& grid,
                         const SteadyState& guess,
                         const NewtonSettings& settings) {
  if (guess.n() != grid.n)
    throw input_error("newton_solve: guess does not match grid");
  SteadyState x = guess;
  std::vector<double> r = assemble_residual(params, grid, x);
  double rnorm = max_norm(r);

  for (int iter = 0; iter < settings.max_iters; ++iter) {
    if (rnorm <= settings.tol_residual) return x;

    LinearizedSystem lin = assemble_linearization(params, grid, x);
    // Newton direction: J d = -r with J = -L, i.e. L d = r.
    BandedSolver lu(lin.matrix, grid.n);
    std::vector<double> d = lu.solve(r);

    double t = 1.0;
    SteadyState trial = x;
    apply_update(trial, d, t);
    std::vector<double> r_trial = assemble_residual(params, grid, trial);
    double tnorm = max_norm(r_trial);
    while (tnorm >= rnorm && t > settings.damping_min) {
      t *= 0.5;
      trial = x;
      apply_update(trial, d, t);
      r_trial = assemble_residual(params, grid, trial);
      tnorm = max_norm(r_trial);
    }
    x = trial;
    r = std::move(r_trial);
    rnorm = tnorm;
  }
  if (rnorm <= settings.tol_residual) return x;
  throw divergence_error("newton_solve: no convergence after max_iters", x.u,
                         x.v, rnorm);
}

std::vector<double> linear_solve(const DenseMatrix& matrix,
                                 const std::vector<double>& rhs) {
  if (matrix.rows != matrix.cols || matrix.rows % 2 != 0)
    throw input_error("linear_solve: matrix must be 2n x 2n");
  BandedSolver lu(matrix, matrix.rows / 2);
  return lu.solve(rhs);
}

std::vector<std::complex<double>> eigenvalues_sorted(
    const LinearizedSystem& linsys) {
  return sort_by_real(dense_eigenvalues(linsys.matrix));
}

Spectrum eigen_spectrum(const LinearizedSystem& linsys, int m) {
  const int dim = linsys.matrix.rows;
  if (m < 1 || m > dim)
    throw input_error("eigen_spectrum: m out of range");

  DenseEigenResult full = dense_eigen(linsys.matrix);
  std::vector<int> order(dim);
  for (int i = 0; i < dim; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (full.values[a].real() != full.values[b].real())
      return full.values[a].real() < full.values[b].real();
    return full.values[a].imag() < full.values[b].imag();
  });

  // Keep conjugate pairs together: if the cut lands inside a pair, extend.
  int take = m;
  if (take < dim) {
    const auto& last = full.values[order[take - 1]];
    const auto& next = full.values[order[take]];
    if (last.imag() != 0.0 && next.real() == last.real() &&
        next.imag() == -last.imag()) {
      ++take;
    }
  }

  Spectrum spec;
  spec.operator_inf_norm = linsys.inf_norm;
  spec.tol_zero = kZeroTolScale * linsys.inf_norm;
  for (int k = 0; k < take; ++k) {
    spec.eigenvalues.push_back(full.values[order[k]]);
    spec.eigenvectors.push_back(full.vectors[order[k]]);
  }

  // Residual certificate for every stored pair.
  const double bound = 1e-8 * linsys.inf_norm;
  for (size_t k = 0; k < spec.eigenvalues.size(); ++k) {
    auto lv = matvec(linsys.matrix, spec.eigenvectors[k]);
    double res = 0.0;
    for (int i = 0; i < dim; ++i)
      res += std::norm(lv[i] - spec.eigenvalues[k] * spec.eigenvectors[k][i]);
    res = std::sqrt(res);
    if (res > bound)
      throw spectral_error("eigenpair residual exceeds certificate bound");
  }

  // Morse count uses the full spectrum, not just the m kept.
  std::vector<std::complex<double>> all = sort_by_real(full.values);
  spec.morse_index = count_negative(all, spec.tol_zero);
  spec.critical_count = count_critical(all, spec.tol_zero);
  return spec;
}

int count_negative(const std::vector<std::complex<double>>& eigenvalues,
                   double tol_zero) {
  int c = 0;
  for (const auto& mu : eigenvalues)
    if (mu.real() < -tol_zero) ++c;
  return c;
}

int count_critical(const std::vector<std::complex<double>>& eigenvalues,
                   double tol_zero) {
  int c = 0;
  for (const auto& mu : eigenvalues)
    if (std::abs(mu.real()) <= tol_zero) ++c;
  return c;
}

int morse_index(const Spectrum& spectrum) {
  return count_negative(spectrum.eigenvalues, spectrum.tol_zero);
}

}  // namespace skt
