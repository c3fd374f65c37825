#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace skt {

// Base class for everything this library throws on purpose.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: dimension mismatches, out-of-range parameters, invalid config.
class input_error : public error {
public:
  using error::error;
};

// Newton ran out of iterations; carries the last iterate so callers can inspect
// or reseed from it.
class divergence_error : public error {
public:
  divergence_error(const std::string& msg, std::vector<double> last_u,
                   std::vector<double> last_v, double last_residual)
      : error(msg), u(std::move(last_u)), v(std::move(last_v)),
        residual(last_residual) {}
  std::vector<double> u, v;
  double residual = 0.0;
};

// Numerically singular linear system. Near-zero rcond usually means the state
// sits next to a bifurcation point.
class singular_matrix_error : public error {
public:
  singular_matrix_error(const std::string& msg, double rcond_estimate)
      : error(msg), rcond(rcond_estimate) {}
  double rcond = 0.0;
};

// Eigenvalue iteration failed or produced pairs violating the residual bound.
class spectral_error : public error {
public:
  using error::error;
};

// Branch switching fell back onto the parent branch.
class no_switch_error : public error {
public:
  no_switch_error(const std::string& msg, double dist)
      : error(msg), distance(dist) {}
  double distance = 0.0;
};

// A sign-changing profile converged with the wrong number of interior zeros.
class wrong_class_error : public error {
public:
  wrong_class_error(const std::string& msg, int found)
      : error(msg), found_sign_changes(found) {}
  int found_sign_changes = 0;
};

// Least-squares fit had too few samples inside the requested window.
class estimation_error : public error {
public:
  using error::error;
};

// Segregation measure of the zero state.
class undefined_measure_error : public error {
public:
  using error::error;
};

// Union of the decoupled eigenvalue sets failed to match the full spectrum.
class decomposition_error : public error {
public:
  decomposition_error(const std::string& msg, double offending)
      : error(msg), offending_eigenvalue(offending) {}
  double offending_eigenvalue = 0.0;
};

// Malformed snapshot or config file; line is 1-based.
class parse_error : public error {
public:
  parse_error(const std::string& msg, int line_number)
      : error(msg), line(line_number) {}
  int line = 0;
};

}  // namespace skt
