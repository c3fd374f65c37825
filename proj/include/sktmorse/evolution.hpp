#pragma once

#include <optional>
#include <vector>

#include "sktmorse/model.hpp"

namespace skt {

// Time series from the semi-implicit integrator. probe holds the distance to
// the reference state when one was supplied.
struct Trajectory {
  std::vector<double> times;
  std::vector<SteadyState> states;
  std::vector<double> probe;
  int clamped_steps = 0;  // negativity undershoots clamped to zero, logged
};

class blowup_error : public error {
public:
  blowup_error(const std::string& msg, Trajectory partial_trajectory)
      : error(msg), partial(std::move(partial_trajectory)) {}
  Trajectory partial;
};

// Linearly implicit IMEX step: the diffusion of the composite variables
// (1+alpha v)u and (1+alpha u)v goes implicit with coefficients frozen at the
// current step, the reaction explicit. Snapshots are recorded every
// max(1, floor(T/(200 dt))) steps.
Trajectory evolve(const ModelParams& params, const Grid& grid,
                  const SteadyState& initial, double T, double dt,
                  const std::optional<SteadyState>& reference = std::nullopt);

struct GrowthWindow {
  double probe_lo = 1e-4;
  double probe_hi = 1e-2;
};

// Least-squares slope of log(probe) vs time restricted to samples whose probe
// lies inside the window. Throws estimation_error with < 10 samples.
double growth_rate(const Trajectory& trajectory, const GrowthWindow& window);

}  // namespace skt
