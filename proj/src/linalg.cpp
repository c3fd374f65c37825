#include "sktmorse/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "sktmorse/errors.hpp"

extern "C" {
void dgemm_(const char* transa, const char* transb, const int* m, const int* n,
            const int* k, const double* alpha, const double* a, const int* lda,
            const double* b, const int* ldb, const double* beta, double* c,
            const int* ldc);
}

namespace skt {

double DenseMatrix::inf_norm() const {
  double best = 0.0;
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += std::abs((*this)(i, j));
    best = std::max(best, s);
  }
  return best;
}

DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B) {
  if (A.cols != B.rows) throw input_error("matmul: dimension mismatch");
  DenseMatrix C(A.rows, B.cols);
  const double one = 1.0, zero = 0.0;
  dgemm_("N", "N", &A.rows, &B.cols, &A.cols, &one, A.a.data(), &A.rows,
         B.a.data(), &B.rows, &zero, C.a.data(), &C.rows);
  return C;
}

std::vector<double> matvec(const DenseMatrix& A, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != A.cols)
    throw input_error("matvec: dimension mismatch");
  std::vector<double> y(A.rows, 0.0);
  for (int j = 0; j < A.cols; ++j) {
    const double xj = x[j];
    const double* col = &A.a[static_cast<size_t>(j) * A.rows];
    for (int i = 0; i < A.rows; ++i) y[i] += col[i] * xj;
  }
  return y;
}

std::vector<std::complex<double>> matvec(
    const DenseMatrix& A, const std::vector<std::complex<double>>& x) {
  if (static_cast<int>(x.size()) != A.cols)
    throw input_error("matvec: dimension mismatch");
  std::vector<std::complex<double>> y(A.rows, 0.0);
  for (int j = 0; j < A.cols; ++j) {
    const std::complex<double> xj = x[j];
    const double* col = &A.a[static_cast<size_t>(j) * A.rows];
    for (int i = 0; i < A.rows; ++i) y[i] += col[i] * xj;
  }
  return y;
}

namespace {
constexpr int kBandwidth = 3;  // interleaved node order: |row-col| <= 3
constexpr double kSingularRcond = 1e-14;
}  // namespace

BandedSolver::BandedSolver(const DenseMatrix& matrix, int n) : n_(n), dim_(2 * n) {
  if (matrix.rows != dim_ || matrix.cols != dim_)
    throw input_error("BandedSolver: matrix must be 2n x 2n");
  const int kl = kBandwidth, ku = kBandwidth;
  const int ldab = 2 * kl + ku + 1;
  ab_.assign(static_cast<size_t>(ldab) * dim_, 0.0);
  ipiv_.assign(dim_, 0);

  // Interleave: blocked index (f*n + i) -> 2*i + f for field f in {0,1}.
  // Entries couple nodes i and j with |i-j| <= 1, so |r-c| <= 3.
  auto fill = [&](int rb, int cb, double value) {
    const int r = 2 * (rb % n_) + (rb / n_);
    const int c = 2 * (cb % n_) + (cb / n_);
    ab_[static_cast<size_t>(c) * ldab + (kl + ku + r - c)] = value;
  };
  for (int f_row = 0; f_row < 2; ++f_row) {
    for (int f_col = 0; f_col < 2; ++f_col) {
      for (int i = 0; i < n_; ++i) {
        for (int j = std::max(0, i - 1); j <= std::min(n_ - 1, i + 1); ++j) {
          fill(f_row * n_ + i, f_col * n_ + j, matrix(f_row * n_ + i, f_col * n_ + j));
        }
      }
    }
  }

  // 1-norm of the banded matrix, needed by the condition estimator.
  std::vector<double> colsum(dim_, 0.0);
  for (int c = 0; c < dim_; ++c) {
    for (int r = std::max(0, c - kl - ku); r <= std::min(dim_ - 1, c + kl + ku); ++r) {
      if (std::abs(r - c) <= kl) {
        colsum[c] += std::abs(ab_[static_cast<size_t>(c) * ldab + (kl + ku + r - c)]);
      }
    }
  }
  const double anorm = *std::max_element(colsum.begin(), colsum.end());

  int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, dim_, dim_, kl, ku, ab_.data(),
                            ldab, ipiv_.data());
  if (info > 0)
    throw singular_matrix_error("banded LU: exact zero pivot", 0.0);
  if (info < 0) throw error("dgbtrf: illegal argument");

  info = LAPACKE_dgbcon(LAPACK_COL_MAJOR, '1', dim_, kl, ku, ab_.data(), ldab,
                        ipiv_.data(), anorm, &rcond_);
  if (info != 0) throw error("dgbcon failed");
  if (rcond_ < kSingularRcond)
    throw singular_matrix_error("banded LU: numerically singular", rcond_);
}

std::vector<double> BandedSolver::solve(const std::vector<double>& rhs) const {
  if (static_cast<int>(rhs.size()) != dim_)
    throw input_error("BandedSolver::solve: rhs size mismatch");
  const int kl = kBandwidth, ku = kBandwidth;
  const int ldab = 2 * kl + ku + 1;
  std::vector<double> x(dim_);
  for (int i = 0; i < n_; ++i) {
    x[2 * i] = rhs[i];
    x[2 * i + 1] = rhs[n_ + i];
  }
  int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', dim_, kl, ku, 1,
                            ab_.data(), ldab, ipiv_.data(), x.data(), dim_);
  if (info != 0) throw error("dgbtrs failed");
  std::vector<double> out(dim_);
  for (int i = 0; i < n_; ++i) {
    out[i] = x[2 * i];
    out[n_ + i] = x[2 * i + 1];
  }
  return out;
}

std::vector<std::complex<double>> dense_eigenvalues(const DenseMatrix& A) {
  if (A.rows != A.cols) throw input_error("dense_eigenvalues: square only");
  const int n = A.rows;
  std::vector<double> work = A.a;
  std::vector<double> wr(n), wi(n);
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n,
                           wr.data(), wi.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw spectral_error("dgeev did not converge");
  std::vector<std::complex<double>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
  return out;
}

DenseEigenResult dense_eigen(const DenseMatrix& A) {
  if (A.rows != A.cols) throw input_error("dense_eigen: square only");
  const int n = A.rows;
  std::vector<double> work = A.a;
  std::vector<double> wr(n), wi(n), vr(static_cast<size_t>(n) * n);
  int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, work.data(), n,
                           wr.data(), wi.data(), nullptr, 1, vr.data(), n);
  if (info != 0) throw spectral_error("dgeev did not converge");

  DenseEigenResult res;
  res.values.resize(n);
  res.vectors.assign(n, {});
  for (int j = 0; j < n; ++j) {
    res.values[j] = {wr[j], wi[j]};
    std::vector<std::complex<double>> q(n);
    if (wi[j] == 0.0) {
      for (int i = 0; i < n; ++i) q[i] = vr[static_cast<size_t>(j) * n + i];
    } else if (wi[j] > 0.0) {
      for (int i = 0; i < n; ++i)
        q[i] = {vr[static_cast<size_t>(j) * n + i],
                vr[static_cast<size_t>(j + 1) * n + i]};
    } else {
      for (int i = 0; i < n; ++i)
        q[i] = {vr[static_cast<size_t>(j - 1) * n + i],
                -vr[static_cast<size_t>(j) * n + i]};
    }
    double nrm = 0.0;
    for (const auto& z : q) nrm += std::norm(z);
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (auto& z : q) z /= nrm;
    res.vectors[j] = std::move(q);
  }
  return res;
}

std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> diag,
                                                      std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  if (static_cast<int>(off.size()) != std::max(0, n - 1))
    throw input_error("tridiagonal size mismatch");
  int info = LAPACKE_dsterf(n, diag.data(), off.data());
  if (info != 0) throw spectral_error("dsterf did not converge");
  return diag;
}

std::pair<double, std::vector<double>> symmetric_tridiagonal_smallest(
    std::vector<double> diag, std::vector<double> off) {
  const int n = static_cast<int>(diag.size());
  if (static_cast<int>(off.size()) != std::max(0, n - 1))
    throw input_error("tridiagonal size mismatch");
  std::vector<double> w(n), z(n);
  std::vector<lapack_int> isuppz(2);
  lapack_int m = 0;
  int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, diag.data(),
                            off.data(), 0.0, 0.0, 1, 1, 0.0, &m, w.data(),
                            z.data(), n, isuppz.data());
  if (info != 0 || m < 1) throw spectral_error("dstevr did not converge");
  return {w[0], z};
}

void tridiagonal_solve(std::vector<double>& sub, std::vector<double>& diag,
                       std::vector<double>& super, std::vector<double>& rhs) {
  const int n = static_cast<int>(diag.size());
  int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, sub.data(), diag.data(),
                           super.data(), rhs.data(), n);
  if (info > 0) throw singular_matrix_error("dgtsv: zero pivot", 0.0);
  if (info < 0) throw error("dgtsv: illegal argument");
}

}  // namespace skt
