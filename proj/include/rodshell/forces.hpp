#pragma once

#include "rodshell/types.hpp"

namespace rodshell {

// State handed to every force evaluation inside a Newton iteration. Forces are
// evaluated at (q, v); the Jacobian each term returns is taken with respect to
// the stepper's unknown q_{k+1}, using dq = d q / d q_{k+1} and
// dv = d v / d q_{k+1} (scalars for every supported integrator).
struct ForceEval {
  const VecX& q;
  const VecX& v;
  const VecX& q_prev;  // last committed positions
  double t = 0.0;
  double dt = 0.0;
  double dq = 1.0;
  double dv = 0.0;
  double load_scale = 1.0;  // ramp factor used by the static solver
  int threads = 1;
  const VecX* u_prev = nullptr;  // committed velocity, for explicit terms
};

}  // namespace rodshell
