#pragma once

#include "pstokes/field.hpp"

namespace pstokes {

// Vector potential of a solenoidal zero-trace field, with cached derivative
// stacks. After boundary correction the potential and its gradient vanish
// bitwise on the boundary layer and the exterior; the curl is preserved at
// every cell whose stencil does not touch the three zeroed shells.
struct Potential {
  VectorField w;
  TensorField grad_w;
  Tensor3Field grad2_w;
  ScalarField hess_mag;  // Frobenius magnitude of grad2_w

  double div_input_rel = 0.0;
  double solve_residual_rel = 0.0;
  double shell_before_zero = 0.0;  // max |w| on the zeroed shells pre-zeroing
  double trace_max = 0.0;          // max |w| on layer+exterior afterwards
  double curl_err_core = 0.0;      // max |curl w - u| where the stencil is untouched
  double curl_err_all = 0.0;       // max |curl w - u| over the interior
};

// Invert the curl by explicit line integration along one even-length axis:
// the two transverse components of the potential come from exact parity
// back-substitution against the central difference, so curl of the result
// reproduces u at rounding level whenever div u = 0. A gauge gradient from
// a Poisson solve is then added to smooth the potential; gradients never
// change the curl. Needs at least one even box dimension.
// Throws if the relative divergence of u exceeds div_tol.
VectorField newton_inverse_curl(const VectorField& u, const GridDomain& dom,
                                double* residual_rel = nullptr, double div_tol = 1e-8);

// Subtract a least-squares gradient so the potential nearly vanishes on the
// exterior and layer cells, then zero it on those cells plus the first
// interior ring. Gradient corrections never change the curl.
Potential boundary_correct(const VectorField& wtilde, const VectorField& u, const GridDomain& dom);

Potential inverse_curl(const VectorField& u, const GridDomain& dom);

}  // namespace pstokes
