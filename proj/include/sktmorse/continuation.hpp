#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "sktmorse/model.hpp"
#include "sktmorse/solvers.hpp"

namespace skt {

struct StepControls {
  double ds_init = 0.5;
  double ds_max = 2.0;
  double ds_min = 1e-8;
  double growth = 1.3;
  int num_eigenvalues = 8;  // tracked per accepted point
  NewtonSettings newton;
  int corrector_max_iters = 12;
  // Branch switching defaults.
  double switch_delta_rel = 1e-2;  // delta = rel * ||parent state||_2
  double switch_offset = 0.2;     // lambda offset past the bifurcation point
};

struct StopRule {
  double lambda_max = 100.0;
  double lambda_min = -1e30;
  int max_points = 2000;
};

// One accepted continuation point, annotated with the leading spectrum.
struct BranchPoint {
  double lambda = 0.0;
  SteadyState state;
  double arclength = 0.0;
  std::vector<std::complex<double>> spectrum_summary;  // m smallest real parts
  int morse_index = 0;
  bool critical_flag = false;  // an eigenvalue sits inside the zero band
};

struct BifurcationEvent {
  double lambda_star = 0.0;
  std::vector<double> kernel_vector;  // unit 2n-vector
  int crossing_direction = 0;         // sign of d(mu)/d(lambda) at crossing
  bool approximate = false;           // refinement did not meet tolerance
  int index_before = 0;               // Morse index on the small-lambda side
};

struct Branch {
  std::vector<BranchPoint> points;
  BranchTag tag = BranchTag::trivial;
  std::vector<BifurcationEvent> events;
  bool stalled = false;  // step underflow ended the trace early
};

// Result wrapper for a stalled continuation: the partial branch is preserved.
class stall_error : public error {
public:
  stall_error(const std::string& msg, Branch partial_branch)
      : error(msg), partial(std::move(partial_branch)) {}
  Branch partial;
};

// Keller pseudo-arclength continuation: tangent predictor, Newton corrector on
// residual + arclength constraint, step halving on failure and growth on fast
// convergence. Each accepted point is annotated with its leading spectrum and
// Morse index.
Branch continue_branch(const ModelParams& params, const Grid& grid,
                       const BranchPoint& start, int direction,
                       const StepControls& controls, const StopRule& stop);

// Locate zero crossings of the eigenvalue that changes sign between
// consecutive branch points and refine each by secant iteration on
// mu(lambda), re-solving the steady state at every trial lambda.
std::vector<BifurcationEvent> detect_bifurcations(const ModelParams& params,
                                                  const Grid& grid,
                                                  const Branch& branch,
                                                  const StepControls& controls);

// Seed a pitchfork child branch: guess = parent state + amplitude * kernel at
// lambda_star + offset, Newton corrected at fixed lambda. Throws
// no_switch_error when the corrector falls back onto the parent branch.
BranchPoint switch_branch(const ModelParams& params, const Grid& grid,
                          const BifurcationEvent& event,
                          const BranchPoint& parent_point, double amplitude,
                          const StepControls& controls);

// switch_branch with a doubling amplitude ladder; sign picks the child.
BranchPoint switch_branch_auto(const ModelParams& params, const Grid& grid,
                               const BifurcationEvent& event,
                               const BranchPoint& parent_point, int sign,
                               const StepControls& controls);

// Overlap ratio integral(min(u,v)) / integral(max(u,v)) in [0,1] via
// trapezoid sums; 1 for identical profiles, -> 0 under segregation.
double segregation_measure(const SteadyState& state, const Grid& grid);

// Annotate an arbitrary converged state as a branch point.
BranchPoint make_branch_point(const ModelParams& params, const Grid& grid,
                              const SteadyState& state, double arclength,
                              int num_eigenvalues);

// Branch seeds. Coexistence starts at lambda_1^h + 0.3 from the scaled
// first-eigenvector guess u = v = (0.1/alpha) sin(pi (x+ell)/(2 ell)).
SteadyState seed_trivial(const Grid& grid);
std::optional<SteadyState> seed_semitrivial(const ModelParams& params,
                                            const Grid& grid, bool u_component);
std::optional<SteadyState> seed_coexistence(const ModelParams& params,
                                            const Grid& grid, double lambda,
                                            const NewtonSettings& settings);

}  // namespace skt
