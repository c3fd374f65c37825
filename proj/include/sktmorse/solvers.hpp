#pragma once

#include <complex>
#include <vector>

#include "sktmorse/model.hpp"

namespace skt {

struct NewtonSettings {
  double tol_residual = 1e-10;  // max-norm convergence threshold
  int max_iters = 50;
  double damping_min = 1.0 / 64.0;
};

// Sorted spectrum of a linearization with the Morse count derived from it.
// tol_zero classifies eigenvalues as negative / critical / positive; critical
// ones are reported separately and never silently counted.
struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;  // ascending real part
  std::vector<std::vector<std::complex<double>>> eigenvectors;  // unit 2-norm
  int morse_index = 0;
  int critical_count = 0;
  double tol_zero = 0.0;
  double operator_inf_norm = 0.0;
};

// Default tol_zero = kZeroTolScale * ||L||_inf. The scale is well above dgeev
// noise (~1e-16*||L||) yet small enough that eigenvalues half a unit away from
// a crossing still count toward the Morse index at n = 400.
inline constexpr double kZeroTolScale = 1e-10;

// Damped Newton iteration on the stationary residual. Backtracking halves the
// step until the residual max-norm decreases (down to damping_min). Throws
// divergence_error after max_iters, singular_matrix_error near bifurcations.
SteadyState newton_solve(const ModelParams& params, const Grid& grid,
                         const SteadyState& guess,
                         const NewtonSettings& settings = {});

// Solve the field-blocked 2n x 2n system via the interleaved banded LU.
std::vector<double> linear_solve(const DenseMatrix& matrix,
                                 const std::vector<double>& rhs);

// The m eigenvalues of smallest real part, with eigenvectors, of the dense
// linearization. Complex conjugate pairs are kept together (m may grow by one).
Spectrum eigen_spectrum(const LinearizedSystem& linsys, int m);

// All eigenvalues (ascending real part, no vectors); the continuation hot path.
std::vector<std::complex<double>> eigenvalues_sorted(const LinearizedSystem& linsys);

// Count of eigenvalues with real part < -tol_zero; pure function of the stored
// values, so the stored index is recomputable.
int morse_index(const Spectrum& spectrum);
int count_negative(const std::vector<std::complex<double>>& eigenvalues,
                   double tol_zero);
int count_critical(const std::vector<std::complex<double>>& eigenvalues,
                   double tol_zero);

}  // namespace skt
