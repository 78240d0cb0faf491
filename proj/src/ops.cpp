#include "pstokes/ops.hpp"

#include <cmath>

namespace pstokes {

namespace {

// d/d(axis) of component plane p at (x,y,z), zero beyond the box
inline double diff(const double* p, const Dims& d, int x, int y, int z, int axis, double inv2h) {
  int xa = x, ya = y, za = z, xb = x, yb = y, zb = z;
  if (axis == 0) {
    ++xa;
    --xb;
  } else if (axis == 1) {
    ++ya;
    --yb;
  } else {
    ++za;
    --zb;
  }
  const double fa = d.in_box(xa, ya, za) ? p[d.idx(xa, ya, za)] : 0.0;
  const double fb = d.in_box(xb, yb, zb) ? p[d.idx(xb, yb, zb)] : 0.0;
  return (fa - fb) * inv2h;
}

template <int NIN, int NOUT, class K>
Field<NOUT> apply(const Field<NIN>& f, K&& kernel) {
  Field<NOUT> out(f.dims, f.h);
  const Dims d = f.dims;
  par_for(static_cast<i64>(d.nz), [&](i64 z) {
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) kernel(out, f, x, y, static_cast<int>(z));
  });
  return out;
}

}  // namespace

VectorField gradient(const ScalarField& f) {
  const double inv2h = 1.0 / (2.0 * f.h);
  return apply<1, 3>(f, [inv2h](VectorField& out, const ScalarField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    const double* p = in.comp(0);
    for (int a = 0; a < 3; ++a) out.at(a, i) = diff(p, d, x, y, z, a, inv2h);
  });
}

TensorField gradient(const VectorField& v) {
  const double inv2h = 1.0 / (2.0 * v.h);
  return apply<3, 9>(v, [inv2h](TensorField& out, const VectorField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    for (int c = 0; c < 3; ++c) {
      const double* p = in.comp(c);
      for (int a = 0; a < 3; ++a) out.at(3 * c + a, i) = diff(p, d, x, y, z, a, inv2h);
    }
  });
}

Tensor3Field gradient(const TensorField& t) {
  const double inv2h = 1.0 / (2.0 * t.h);
  return apply<9, 27>(t, [inv2h](Tensor3Field& out, const TensorField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    for (int c = 0; c < 9; ++c) {
      const double* p = in.comp(c);
      for (int a = 0; a < 3; ++a) out.at(3 * c + a, i) = diff(p, d, x, y, z, a, inv2h);
    }
  });
}

TensorField sym_gradient(const VectorField& v) {
  TensorField g = gradient(v);
  par_for(g.cells(), [&](i64 i) {
    for (int r = 0; r < 3; ++r)
      for (int c = r + 1; c < 3; ++c) {
        const double s = 0.5 * (g.at(3 * r + c, i) + g.at(3 * c + r, i));
        g.at(3 * r + c, i) = s;
        g.at(3 * c + r, i) = s;
      }
  });
  return g;
}

ScalarField divergence(const VectorField& v) {
  const double inv2h = 1.0 / (2.0 * v.h);
  return apply<3, 1>(v, [inv2h](ScalarField& out, const VectorField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += diff(in.comp(a), d, x, y, z, a, inv2h);
    out.at(0, i) = s;
  });
}

VectorField divergence(const TensorField& t) {
  const double inv2h = 1.0 / (2.0 * t.h);
  return apply<9, 3>(t, [inv2h](VectorField& out, const TensorField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    for (int r = 0; r < 3; ++r) {
      double s = 0.0;
      for (int a = 0; a < 3; ++a) s += diff(in.comp(3 * r + a), d, x, y, z, a, inv2h);
      out.at(r, i) = s;
    }
  });
}

VectorField curl(const VectorField& v) {
  const double inv2h = 1.0 / (2.0 * v.h);
  return apply<3, 3>(v, [inv2h](VectorField& out, const VectorField& in, int x, int y, int z) {
    const Dims d = in.dims;
    const i64 i = d.idx(x, y, z);
    const double dzdy = diff(in.comp(2), d, x, y, z, 1, inv2h);
    const double dydz = diff(in.comp(1), d, x, y, z, 2, inv2h);
    const double dxdz = diff(in.comp(0), d, x, y, z, 2, inv2h);
    const double dzdx = diff(in.comp(2), d, x, y, z, 0, inv2h);
    const double dydx = diff(in.comp(1), d, x, y, z, 0, inv2h);
    const double dxdy = diff(in.comp(0), d, x, y, z, 1, inv2h);
    out.at(0, i) = dzdy - dydz;
    out.at(1, i) = dxdz - dzdx;
    out.at(2, i) = dydx - dxdy;
  });
}

}  // namespace pstokes
