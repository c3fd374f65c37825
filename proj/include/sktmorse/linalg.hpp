#pragma once

#include <complex>
#include <vector>

namespace skt {

// Column-major dense matrix, sized for direct LAPACK consumption.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  double& operator()(int i, int j) { return a[static_cast<size_t>(j) * rows + i]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(j) * rows + i]; }
  double inf_norm() const;
};

// C = A * B
DenseMatrix matmul(const DenseMatrix& A, const DenseMatrix& B);

// y = A * x
std::vector<double> matvec(const DenseMatrix& A, const std::vector<double>& x);
std::vector<std::complex<double>> matvec(const DenseMatrix& A,
                                         const std::vector<std::complex<double>>& x);

// LU factorization of the 2n x 2n field-blocked system, carried out in
// interleaved node order (u0,v0,u1,v1,...) where the bandwidth is 3.
// Throws singular_matrix_error when the factorization breaks down or the
// condition estimate indicates numerical singularity.
class BandedSolver {
public:
  // matrix is the dense field-blocked operator; n is the per-field size.
  BandedSolver(const DenseMatrix& matrix, int n);
  // Solve matrix * x = rhs (rhs in field-blocked order).
  std::vector<double> solve(const std::vector<double>& rhs) const;
  double rcond() const { return rcond_; }

private:
  int n_ = 0;
  int dim_ = 0;
  std::vector<double> ab_;
  std::vector<int> ipiv_;
  double rcond_ = 0.0;
};

// All eigenvalues of a general real matrix (no eigenvectors), unsorted.
std::vector<std::complex<double>> dense_eigenvalues(const DenseMatrix& A);

struct DenseEigenResult {
  std::vector<std::complex<double>> values;
  // Right eigenvectors, one per eigenvalue, unit 2-norm.
  std::vector<std::vector<std::complex<double>>> vectors;
};

// Eigenvalues and right eigenvectors of a general real matrix.
DenseEigenResult dense_eigen(const DenseMatrix& A);

// All eigenvalues (ascending) of the symmetric tridiagonal matrix with the
// given diagonal and off-diagonal entries.
std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> diag,
                                                      std::vector<double> off);

// Smallest eigenvalue and its eigenvector for the same matrix.
std::pair<double, std::vector<double>> symmetric_tridiagonal_smallest(
    std::vector<double> diag, std::vector<double> off);

// Solve the tridiagonal system (sub, diag, super) * x = rhs in place.
void tridiagonal_solve(std::vector<double>& sub, std::vector<double>& diag,
                       std::vector<double>& super, std::vector<double>& rhs);

}  // namespace skt
