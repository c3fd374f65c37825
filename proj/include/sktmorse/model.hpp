#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sktmorse/linalg.hpp"

namespace skt {

// Scalar parameters of the cross-diffusion competition system.
// lambda is the shared resource level; alpha the (equal) cross-diffusion
// coefficient; b1,c2 intra- and c1,b2 inter-specific competition; ell the
// half-length of the interval (-ell, ell).
struct ModelParams {
  double lambda = 0.0;
  double alpha = 20.0;
  double b1 = 3.0;
  double b2 = 2.0;
  double c1 = 2.0;
  double c2 = 1.0;
  double ell = 0.5;

  void validate() const;
  ModelParams with_lambda(double lam) const {
    ModelParams p = *this;
    p.lambda = lam;
    return p;
  }
};

// Uniform interior-node mesh on (-ell, ell). Dirichlet boundary values are
// identically zero and never stored; h*(n+1) == 2*ell.
struct Grid {
  int n = 0;
  double ell = 0.5;
  double h = 0.0;

  static Grid uniform(int n, double ell);
  double node(int i) const { return -ell + h * (i + 1); }
  std::vector<double> nodes() const;
};

enum class BranchTag {
  trivial,
  semitrivial_u,
  semitrivial_v,
  coexistence,
  segregation_plus,
  segregation_minus,
};

std::string to_string(BranchTag tag);
BranchTag branch_tag_from_string(const std::string& s);

// Paired nodal vectors of the two densities plus the branch the state lives on.
struct SteadyState {
  std::vector<double> u;
  std::vector<double> v;
  BranchTag tag = BranchTag::trivial;

  static SteadyState zero(const Grid& grid, BranchTag tag = BranchTag::trivial);
  int n() const { return static_cast<int>(u.size()); }
};

// Discrete linearized operator L(lambda, u*, v*) = -D_state(residual),
// stored dense in field-blocked order (all u rows first, then all v rows).
// Negative eigenvalues of L mean linear instability.
struct LinearizedSystem {
  DenseMatrix matrix;       // 2n x 2n
  SteadyState base_state;
  double inf_norm = 0.0;    // max absolute row sum, cached at assembly
};

// Second-order central difference with zero Dirichlet ghost values, evaluated
// in paired form ((f[i-1]-f[i]) + (f[i+1]-f[i]))/h^2 to keep the roundoff
// floor proportional to |f'|/h instead of |f|/h^2.
void apply_second_difference(const std::vector<double>& f, double h,
                             std::vector<double>& out);

// Residual of the stationary system, sign convention: entry i is
// D2[(1+alpha v)u]_i + u_i (lambda - b1 u_i - c1 v_i), entry n+i the same for
// the second equation, so a steady state gives the zero vector.
std::vector<double> assemble_residual(const ModelParams& params,
                                      const Grid& grid,
                                      const SteadyState& state);

// Exact Jacobian of assemble_residual, negated: L q = -D_state(residual) q.
LinearizedSystem assemble_linearization(const ModelParams& params,
                                        const Grid& grid,
                                        const SteadyState& state);

// d(residual)/d(lambda) = (u, v); used by the arclength corrector.
std::vector<double> residual_lambda_derivative(const SteadyState& state);

double max_norm(const std::vector<double>& x);
double two_norm(const std::vector<double>& x);

}  // namespace skt
