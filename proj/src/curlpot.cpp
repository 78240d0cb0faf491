#include "pstokes/curlpot.hpp"

#include <cmath>
#include <stdexcept>

#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

// solve D t = g along one axis, where D is the central difference with zero
// extension. For even line length the two parity chains close: odd entries
// integrate left to right from even-index data, even entries right to left.
ScalarField line_inverse(const ScalarField& g, int axis) {
  const Dims d = g.dims;
  const int n = axis == 0 ? d.nx : axis == 1 ? d.ny : d.nz;
  const i64 stride = axis == 0 ? 1 : axis == 1 ? i64(d.nx) : i64(d.nx) * d.ny;
  const double twoh = 2.0 * g.h;
  ScalarField out(d, g.h);

  const int na = axis == 0 ? d.ny : d.nx;
  const int nb = axis == 2 ? d.ny : d.nz;
  const i64 sa = axis == 0 ? i64(d.nx) : 1;
  const i64 sb = axis == 2 ? i64(d.nx) : i64(d.nx) * d.ny;
  par_for(nb, [&](i64 b) {
    for (int a = 0; a < na; ++a) {
      const i64 base = b * sb + i64(a) * sa;
      const double* gv = g.v.data() + base;
      double* wv = out.v.data() + base;
      wv[stride] = twoh * gv[0];
      for (int i = 2; i + 1 <= n - 1; i += 2)
        wv[(i + 1) * stride] = wv[(i - 1) * stride] + twoh * gv[i * stride];
      wv[(n - 2) * stride] = -twoh * gv[(n - 1) * stride];
      for (int i = n - 3; i - 1 >= 0; i -= 2)
        wv[(i - 1) * stride] = wv[(i + 1) * stride] - twoh * gv[i * stride];
    }
  });
  return out;
}

ScalarField component(const VectorField& u, int c) {
  ScalarField s(u.dims, u.h);
  par_for(u.dims.cells(), [&](i64 i) { s.v[std::size_t(i)] = u.at(c, i); });
  return s;
}

ScalarField lap7(const ScalarField& f) {
  const Dims d = f.dims;
  const double ih2 = 1.0 / (f.h * f.h);
  ScalarField out(d, f.h);
  par_for(d.nz, [&](i64 z) {
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        auto val = [&](int xx, int yy, int zz) {
          return d.in_box(xx, yy, zz) ? f.at(0, xx, yy, zz) : 0.0;
        };
        out.at(0, x, y, int(z)) =
            (val(x + 1, y, int(z)) + val(x - 1, y, int(z)) + val(x, y + 1, int(z)) +
             val(x, y - 1, int(z)) + val(x, y, int(z) + 1) + val(x, y, int(z) - 1) -
             6.0 * val(x, y, int(z))) *
            ih2;
      }
  });
  return out;
}

double max_mag(const VectorField& f, const std::vector<std::uint8_t>& mask) {
  const Dims d = f.dims;
  const i64 plane = i64(d.nx) * d.ny;
  return det_max(d.nz, [&](i64 z) {
    double m = 0.0;
    for (i64 i = z * plane; i < (z + 1) * plane; ++i) {
      if (!mask[std::size_t(i)]) continue;
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += f.at(c, i) * f.at(c, i);
      if (s > m) m = s;
    }
    return std::sqrt(m);
  });
}

}  // namespace

VectorField newton_inverse_curl(const VectorField& u, const GridDomain& dom,
                                double* residual_rel, double div_tol) {
  check_same_layout(u, dom, "newton_inverse_curl");
  const Dims d = u.dims;
  const double h = u.h;

  NormSpec l2;
  l2.region = NormSpec::Region::box;
  double unorm = norm(u, dom, l2);
  double dnorm = norm(divergence(u), dom, l2);
  double rel = unorm > 0.0 ? dnorm * h / unorm : 0.0;
  if (rel > div_tol)
    throw std::invalid_argument(
        "newton_inverse_curl: input must be solenoidal (relative divergence " +
        std::to_string(rel) + " exceeds tolerance)");

  int axis = d.nx % 2 == 0 ? 0 : d.ny % 2 == 0 ? 1 : d.nz % 2 == 0 ? 2 : -1;
  if (axis < 0)
    throw std::invalid_argument(
        "newton_inverse_curl: the line solve needs at least one even box dimension");

  // one-axis line inverse: the curl of this field already reproduces u up to
  // the integrated divergence of the input
  VectorField wline(d, h);
  {
    int c1 = (axis + 1) % 3, c2 = (axis + 2) % 3;
    ScalarField t1 = line_inverse(component(u, c2), axis);
    ScalarField t2 = line_inverse(component(u, c1), axis);
    par_for(d.cells(), [&](i64 i) {
      wline.at(c1, i) = t1.v[std::size_t(i)];
      wline.at(c2, i) = -t2.v[std::size_t(i)];
    });
  }

  // Coulomb gauge: adding a gradient leaves the curl untouched, so project
  // out the integration wake without disturbing the reproduction property
  ScalarField b = divergence(wline);
  ScalarField phi(d, h), r = b, p = b;
  double rr = dot(r, r);
  const double rr0 = rr;
  for (int it = 0; it < 4000 && rr > 1e-16 * std::max(rr0, 1e-300); ++it) {
    ScalarField g = divergence(gradient(p));
    scale(g, -1.0);
    double pAp = dot(p, g);
    if (!(pAp > 0.0)) break;
    double alpha = rr / pAp;
    axpy(alpha, p, phi);
    axpy(-alpha, g, r);
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    par_for(d.cells(), [&](i64 i) {
      p.v[std::size_t(i)] = r.v[std::size_t(i)] + beta * p.v[std::size_t(i)];
    });
  }
  VectorField w = wline;
  axpy(1.0, gradient(phi), w);

  if (residual_rel) {
    VectorField cw = curl(w);
    axpy(-1.0, u, cw);
    double cnorm = norm(cw, dom, l2);
    *residual_rel = unorm > 0.0 ? cnorm / unorm : 0.0;
  }
  return w;
}

Potential boundary_correct(const VectorField& wtilde, const VectorField& u,
                           const GridDomain& dom) {
  check_same_layout(wtilde, dom, "boundary_correct");
  const Dims d = dom.dims;
  const double h = dom.h;
  const i64 cells = d.cells();

  std::vector<std::uint8_t> E(cells, 0);  // exterior + layer
  for (i64 i = 0; i < cells; ++i) E[std::size_t(i)] = dom.is_free(i) ? 0 : 1;

  // least squares for zeta: grad zeta matches wtilde on E, with a small
  // smoothness term that also removes the gauge freedom
  const double mu = 0.01 * h * h;
  auto apply_A = [&](const ScalarField& z) {
    VectorField g = gradient(z);
    par_for(cells, [&](i64 i) {
      if (!E[std::size_t(i)])
        for (int c = 0; c < 3; ++c) g.at(c, i) = 0.0;
    });
    ScalarField a = divergence(g);
    scale(a, -1.0);
    ScalarField l = lap7(lap7(z));
    axpy(mu, l, a);
    return a;
  };
  VectorField wmask = wtilde;
  par_for(cells, [&](i64 i) {
    if (!E[std::size_t(i)])
      for (int c = 0; c < 3; ++c) wmask.at(c, i) = 0.0;
  });
  ScalarField b = divergence(wmask);
  scale(b, -1.0);

  ScalarField zeta(d, h), r = b, p = b;
  double rr = dot(r, r);
  const double rr0 = rr;
  int it = 0;
  for (; it < 600 && rr > 1e-20 * std::max(rr0, 1e-300); ++it) {
    ScalarField Ap = apply_A(p);
    double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) break;
    double alpha = rr / pAp;
    axpy(alpha, p, zeta);
    axpy(-alpha, Ap, r);
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    par_for(cells, [&](i64 i) {
      p.v[std::size_t(i)] = r.v[std::size_t(i)] + beta * p.v[std::size_t(i)];
    });
  }

  Potential pot;
  pot.w = wtilde;
  VectorField gz = gradient(zeta);
  axpy(-1.0, gz, pot.w);

  // zero three shells: exterior, layer, first interior ring
  std::vector<std::uint8_t> zero_mask(cells, 0);
  par_for(d.nz, [&](i64 z) {
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        i64 i = d.idx(x, y, int(z));
        if (!dom.is_free(i)) {
          zero_mask[std::size_t(i)] = 1;
          continue;
        }
        const int nb[6][3] = {{x - 1, y, int(z)}, {x + 1, y, int(z)}, {x, y - 1, int(z)},
                              {x, y + 1, int(z)}, {x, y, int(z) - 1}, {x, y, int(z) + 1}};
        for (auto& n : nb)
          if (!d.in_box(n[0], n[1], n[2]) || dom.is_layer(d.idx(n[0], n[1], n[2]))) {
            zero_mask[std::size_t(i)] = 1;
            break;
          }
      }
  });
  pot.shell_before_zero = max_mag(pot.w, zero_mask);
  par_for(cells, [&](i64 i) {
    if (zero_mask[std::size_t(i)])
      for (int c = 0; c < 3; ++c) pot.w.at(c, i) = 0.0;
  });

  std::vector<std::uint8_t> trace_mask(cells, 0);
  for (i64 i = 0; i < cells; ++i)
    trace_mask[std::size_t(i)] = (!dom.is_interior(i) || dom.is_layer(i)) ? 1 : 0;
  pot.trace_max = max_mag(pot.w, trace_mask);

  VectorField cw = curl(pot.w);
  axpy(-1.0, u, cw);
  std::vector<std::uint8_t> core(cells, 0), inner(cells, 0);
  par_for(cells, [&](i64 i) { inner[std::size_t(i)] = dom.is_interior(i) ? 1 : 0; });
  par_for(d.nz, [&](i64 z) {
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        i64 i = d.idx(x, y, int(z));
        if (!dom.is_interior(i) || zero_mask[std::size_t(i)]) continue;
        bool untouched = true;
        const int nb[6][3] = {{x - 1, y, int(z)}, {x + 1, y, int(z)}, {x, y - 1, int(z)},
                              {x, y + 1, int(z)}, {x, y, int(z) - 1}, {x, y, int(z) + 1}};
        for (auto& n : nb)
          if (!d.in_box(n[0], n[1], n[2]) || zero_mask[std::size_t(d.idx(n[0], n[1], n[2]))]) {
            untouched = false;
            break;
          }
        if (untouched) core[std::size_t(i)] = 1;
      }
  });
  pot.curl_err_core = max_mag(cw, core);
  pot.curl_err_all = max_mag(cw, inner);

  pot.grad_w = gradient(pot.w);
  pot.grad2_w = gradient(pot.grad_w);
  pot.hess_mag = magnitude(pot.grad2_w);
  return pot;
}

Potential inverse_curl(const VectorField& u, const GridDomain& dom) {
  double res = 0.0;
  VectorField wt = newton_inverse_curl(u, dom, &res);
  Potential pot = boundary_correct(wt, u, dom);
  pot.solve_residual_rel = res;
  NormSpec l2;
  l2.region = NormSpec::Region::box;
  double unorm = norm(u, dom, l2);
  double dnorm = norm(divergence(u), dom, l2);
  pot.div_input_rel = unorm > 0.0 ? dnorm * u.h / unorm : 0.0;
  return pot;
}

}  // namespace pstokes
