#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pstokes/field.hpp"
#include "pstokes/stress.hpp"

namespace pstokes {

// Augmented-Lagrangian solver for the steady generalized Stokes system
//
//   -div A(eps u) + grad pi = -div f,   div u = 0,   u = 0 at the walls,
//
// posed in weak form against zero-trace test fields: velocity unknowns live
// on the cells strictly inside the boundary layer, the multiplier on those
// cells plus their face neighbours. Each multiplier round minimizes
//
//   sum G(|eps u|) - f : grad u - pi div u + (rho/2)(div u)^2
//
// by damped Newton with backtracking on that objective (accepted steps never
// increase it) and a Jacobi-preconditioned CG inner solve, then updates
// pi <- pi - rho div u. The final update is folded into the reported
// pressure, which makes the weak-form residual of the returned pair equal to
// the last Newton residual instead of being limited by the penalty.

// Tuning knobs. The defaults are sized for unit boxes with O(1) data; rho
// trades inner conditioning against the number of multiplier rounds.
struct SolverConfig {
  double tol = 1e-9;       // relative weak-form residual target
  double div_tol = 1e-10;  // relative divergence target h |div u|_2 / |u|_2
  std::vector<double> deltas = {1e-2, 1e-3, 1e-4};  // shear regularization ladder (p != 2 laws)
  double rho = 30.0;       // divergence penalty weight
  int max_newton = 80;     // Newton steps per multiplier round
  int max_uzawa = 400;     // multiplier rounds per regularization leg
  int cg_max = 6000;       // CG iterations per Newton step
  double cg_tol = 1e-10;   // relative CG residual
  int max_picard = 300;    // convection lag sweeps
  double relax = 0.7;      // Picard under-relaxation in (0, 1]
  bool keep_history = true;
};

// One solve: velocity, multiplier, diagnostics. The velocity is zero outside
// the wall layer, the pressure carries the canonical gauge (per-parity
// component means removed). A failed solve comes back with converged = false
// and the reason in message; the fields then hold the last iterate.
struct Solution {
  VectorField u;
  ScalarField pi;
  bool converged = false;
  std::string message;
  double residual_rel = 0.0;  // relative weak-form residual
  double div_rel = 0.0;       // h |div u|_2 / |u|_2
  double delta_used = 0.0;    // regularization of the reported fields
  int newton_total = 0;
  int uzawa_total = 0;
  int picard_total = 0;
  bool energy_monotone = true;           // no accepted Newton step raised the objective
  std::vector<double> energy_history;    // objective per accepted step, first round from cold start
  std::vector<double> residual_history;  // relative residual per multiplier round (per Picard sweep
                                         // for the convective solve)
  std::vector<double> anneal_tail;  // relative W^{1,p} distance between consecutive ladder legs

  Solution(const Dims& d, double h) : u(d, h), pi(d, h) {}
};

Solution solve_stokes(const StressModel& model, const TensorField& f, const GridDomain& dom,
                      const SolverConfig& cfg = {});

// Same system plus the convection N(u; u), handled by Picard sweeps with the
// transport direction frozen at the previous relaxed iterate. Blowing up
// instead of contracting is reported, not thrown.
Solution solve_navier_stokes(const StressModel& model, const TensorField& f, const GridDomain& dom,
                             const SolverConfig& cfg = {});

// N(w; u) = ((w . grad) u + div(u x w)) / 2. <N(w; u), u> = 0 holds exactly
// for zero-trace u whatever w is, so the convective term adds no energy.
VectorField convection(const VectorField& w, const VectorField& u);

// relative strong-form residual of a state against the weak formulation
double weak_residual(const StressModel& model, const Solution& sol, const TensorField& f,
                     const GridDomain& dom, bool with_convection);

// cells carrying pressure unknowns: the zero-trace velocity cells plus their
// face neighbours (everything a centred divergence of such a velocity touches)
std::vector<u8> pressure_mask(const GridDomain& dom);

// Connected components of a mask under steps of two cells along one axis;
// -1 outside the mask. Each of the eight parity classes decomposes on its
// own; fields constant on a component are exactly the ones the centred
// gradient cannot see through the mask.
std::vector<std::int32_t> parity_components(const Dims& dims, const std::vector<u8>& mask,
                                            int* component_count = nullptr);

// canonical pressure gauge: subtract the mean over every parity component of
// the pressure cells, zero everywhere else
void pressure_gauge(ScalarField& pi, const GridDomain& dom);

// Pressure matching an already computed velocity: least squares for
// grad pi = div A(eps u) - div g (- N(u; u)) over the velocity cells,
// then the canonical gauge.
ScalarField recover_pressure(const VectorField& u, const TensorField& g, const StressModel& model,
                             const GridDomain& dom, double delta, bool with_convection = false,
                             const SolverConfig& cfg = {});

// Minimal-gradient right inverse of the divergence with zero boundary values:
// v minimizes |grad v|_2 among zero-trace fields with div v = a. The source
// must be supported on the pressure cells with zero mean; the checkerboard
// imbalance the centred divergence cannot produce (per-parity component
// means) is projected out first and its relative size reported.
struct Bogovski {
  VectorField v;
  double div_rel = 0.0;         // |div v - a|_2 / |a|_2 after the projection
  double projection_rel = 0.0;  // relative size of the projected-out part
  int uzawa_rounds = 0;
  int cg_total = 0;
  Bogovski(const Dims& d, double h) : v(d, h) {}
};
Bogovski bogovski(const ScalarField& a, const GridDomain& dom, const SolverConfig& cfg = {});

// (|v|_q + |grad v|_q) / |a|_q for one application of the right inverse
double bogovski_ratio(const Bogovski& b, const ScalarField& a, const GridDomain& dom, double q);

// amplitude |x - x0|^{-a} times a fixed direction of unit Frobenius norm,
// with the radius clamped below at h/2
TensorField singular_forcing(const GridDomain& dom, const std::array<double, 3>& x0, double a,
                             const Mat3& direction, double amplitude);

// radial clamp of |f| to k per cell; cells already below the level are copied
// bitwise, zero cells stay zero
TensorField approximate_forcing(const TensorField& f, double k);

// bitwise partition f = good + bad with the cells at |f| <= k kept in good
struct ForcingSplit {
  TensorField good;
  TensorField bad;
  i64 bad_cells = 0;
  ForcingSplit(const Dims& d, double h) : good(d, h), bad(d, h) {}
};
ForcingSplit split_forcing(const TensorField& f, double k);

// smallest level (by bisection) whose tail integral int_{|f|>k} |f|^q w over
// the interior drops to the target beta
struct SplitLevel {
  double k = 0.0;
  double tail = 0.0;
  int steps = 0;
};
SplitLevel find_split_level(const TensorField& f, const GridDomain& dom, double q,
                            const ScalarField* weight, double beta);

// (int |a-b|^p + int |grad(a-b)|^p)^(1/p) over the interior
double w1p_distance(const VectorField& a, const VectorField& b, const GridDomain& dom, double p);

}  // namespace pstokes
