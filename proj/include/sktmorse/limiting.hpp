#pragma once

#include <optional>
#include <vector>

#include "sktmorse/model.hpp"

namespace skt {

// Positive limit profile U of the scaled coexistence states (alpha*u -> U).
struct LimitProfileU {
  std::vector<double> U;
  double lambda = 0.0;
};

// Sign-changing limit profile w of the segregation states; u -> w_+, v -> w_-.
struct LimitProfileW {
  std::vector<double> w;
  double lambda = 0.0;
  int j = 0;            // nodal class: w has j-1 interior sign changes
  int orientation = 1;  // sign of w near x = -ell
};

// Closed-form eigenvalues of the discrete Dirichlet Laplacian on the uniform
// grid: lambda_j^h = (4/h^2) sin^2(j pi h / (4 ell)), ascending.
std::vector<double> discrete_laplacian_eigenvalues(const Grid& grid);
// j is 1-based; eigenvector sin(j pi i/(n+1)), unit 2-norm.
std::vector<double> discrete_laplacian_eigenvector(const Grid& grid, int j);

// Unique positive solution of the diffusive logistic equation
// D2 theta + theta (lambda - b theta) = 0, or nullopt when lambda <= lambda_1^h.
std::optional<std::vector<double>> solve_logistic(double lambda, double b,
                                                  const Grid& grid);

struct WeightedEig {
  double mu1 = 0.0;
  std::vector<double> eigenvector;  // sign-normalized positive
};

// Principal eigenvalue of -D2 phi + q phi = mu r phi with r >= 0, r not
// identically zero. Solved in symmetric form via similarity with r^{1/2}.
WeightedEig weighted_principal_eig(const std::vector<double>& q,
                                   const std::vector<double>& r,
                                   const Grid& grid);
// All n eigenvalues of the same pencil, ascending (requires r > 0).
std::vector<double> weighted_eigenvalues(const std::vector<double>& q,
                                         const std::vector<double>& r,
                                         const Grid& grid);

// Positive solution of the scaled limiting equation, solved in the variable
// Z = (1+U) U whose equation is linear in the diffusion term; nullopt when
// lambda <= lambda_1^h.
std::optional<LimitProfileU> solve_ls1(double lambda, const Grid& grid);

// Sign-changing solution of D2 w + lambda w - b1 w_+^2 + c2 w_-^2 = 0 with
// j-1 interior sign changes; nullopt when lambda <= lambda_j^h.
// Throws wrong_class_error when every retry converges to the wrong class.
std::optional<LimitProfileW> solve_ls2(double lambda, int j, int orientation,
                                       double b1, double c2, const Grid& grid);

struct LimitingDecomposition {
  std::vector<double> set_a;          // lambda_j^h - lambda, analytic
  std::vector<double> set_b;          // weighted eigenvalues, all positive
  std::vector<double> full_spectrum;  // sorted real spectrum of the 2n system
  double max_mismatch = 0.0;          // multiset match error, relative
};

// Assembles the discrete limiting linearization at U(lambda), computes its
// full spectrum and checks it equals the union of the two single-equation
// eigenvalue sets. Throws decomposition_error on mismatch beyond tolerance.
LimitingDecomposition limiting_eigen_decomposition(double lambda,
                                                   const Grid& grid);

struct ScalarLimitMorse {
  int negative_count = 0;
  int zero_count = 0;  // interior sign changes of w, logged for comparison
  std::vector<double> smallest;
};

// Negative-eigenvalue count of -D2 - (lambda - 2 b1 w_+ - 2 c2 w_-), the
// linearization of the scalar limiting equation at w.
ScalarLimitMorse scalar_limit_morse(double lambda, const std::vector<double>& w,
                                    double b1, double c2, const Grid& grid);

struct DecouplingReport {
  double h_block_deviation = 0.0;  // h-block minus (-D2 - lambda I), max entry
  double k_to_h_coupling = 0.0;    // max |entry| of the k -> h block
  double h_to_k_coupling = 0.0;    // max |entry| of the h -> k block
  double operator_scale = 0.0;     // max |entry| of the untransformed operator
};

// Conjugates the discrete limiting operator by the map
// (phi, psi) -> (phi - psi, (1+2U)(phi + psi)) and reports the couplings that
// vanish analytically. For lambda <= lambda_1^h the profile is U == 0.
DecouplingReport decoupling_check(double lambda, const Grid& grid);
DecouplingReport decoupling_check_profile(double lambda,
                                          const std::vector<double>& U,
                                          const Grid& grid);

// The dense 2n x 2n discrete limiting linearization at profile U.
DenseMatrix assemble_limiting_operator(double lambda,
                                       const std::vector<double>& U,
                                       const Grid& grid);

int count_sign_changes(const std::vector<double>& w);

}  // namespace skt
