#pragma once

#include <cmath>

#include "pstokes/field.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {

// Central differences with zero extension beyond the box, for every operator.
// Along distinct axes the stencils commute and each is exactly skew-adjoint
// over the box, so div(curl v) = 0, curl(grad f) = 0 and
// <div t, phi> = -<t, grad phi> (zero-trace phi) hold at machine precision.
// For zero-trace data the stencil at a boundary-layer cell reduces to a
// first-order one-sided difference. Exterior output cells are padding.

VectorField gradient(const ScalarField& f);
TensorField gradient(const VectorField& v);
Tensor3Field gradient(const TensorField& t);
TensorField sym_gradient(const VectorField& v);
ScalarField divergence(const VectorField& v);
VectorField divergence(const TensorField& t);
VectorField curl(const VectorField& v);

// Frobenius magnitude per cell.
template <int NC>
ScalarField magnitude(const Field<NC>& f) {
  ScalarField m(f.dims, f.h);
  const i64 n = f.cells();
  par_for(n, [&](i64 i) {
    double s = 0.0;
    for (int c = 0; c < NC; ++c) {
      const double x = f.at(c, i);
      s += x * x;
    }
    m.at(0, i) = std::sqrt(s);
  });
  return m;
}

template <int NC>
void axpy(double a, const Field<NC>& x, Field<NC>& y) {
  par_for(static_cast<i64>(x.v.size()), [&](i64 i) { y.v[static_cast<std::size_t>(i)] += a * x.v[static_cast<std::size_t>(i)]; });
}

template <int NC>
void scale(Field<NC>& x, double a) {
  par_for(static_cast<i64>(x.v.size()), [&](i64 i) { x.v[static_cast<std::size_t>(i)] *= a; });
}

// Deterministic l2 inner product over all components, cell measure h^3.
template <int NC>
double dot(const Field<NC>& a, const Field<NC>& b) {
  const Dims d = a.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const double w = a.h * a.h * a.h;
  return w * det_sum(static_cast<i64>(d.nz) * NC, [&](i64 s) {
    const int c = static_cast<int>(s / d.nz);
    const i64 z = s % d.nz;
    const double* pa = a.comp(c) + z * plane;
    const double* pb = b.comp(c) + z * plane;
    double acc = 0.0;
    for (i64 i = 0; i < plane; ++i) acc += pa[i] * pb[i];
    return acc;
  });
}

// Zero a field on exterior cells, optionally also on the boundary layer.
template <int NC>
void enforce_zero_trace(Field<NC>& f, const GridDomain& dom, bool include_layer = true) {
  check_same_layout(f, dom, "enforce_zero_trace");
  par_for(f.cells(), [&](i64 i) {
    const bool kill = !dom.is_interior(i) || (include_layer && dom.is_layer(i));
    if (kill)
      for (int c = 0; c < NC; ++c) f.at(c, i) = 0.0;
  });
}

}  // namespace pstokes
