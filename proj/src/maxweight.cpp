#include "pstokes/maxweight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pstokes/fft.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {

ScalarField maximal(const ScalarField& g) {
  BallAverager& av = shared_averager(g.dims, g.h);
  ScalarField absg(g.dims, g.h, g.staggering);
  par_for(g.dims.cells(), [&](i64 i) { absg.v[std::size_t(i)] = std::fabs(g.v[std::size_t(i)]); });
  auto avgs = av.averages(absg);
  ScalarField out = absg;  // one-cell ball average is |g| itself
  for (const ScalarField& a : avgs)
    par_for(g.dims.cells(), [&](i64 i) {
      out.v[std::size_t(i)] = std::max(out.v[std::size_t(i)], a.v[std::size_t(i)]);
    });
  return out;
}

ScalarField maximal_reference(const ScalarField& g) {
  BallAverager av(g.dims, g.h);
  ScalarField absg(g.dims, g.h, g.staggering);
  for (i64 i = 0; i < g.dims.cells(); ++i) absg.v[std::size_t(i)] = std::fabs(g.v[std::size_t(i)]);
  ScalarField out = absg;
  for (double r : av.radii_cells()) {
    ScalarField a = av.average_reference(absg, r);
    for (i64 i = 0; i < g.dims.cells(); ++i)
      out.v[std::size_t(i)] = std::max(out.v[std::size_t(i)], a.v[std::size_t(i)]);
  }
  return out;
}

LevelSet level_set(const ScalarField& v, double lambda) {
  LevelSet ls;
  ls.lambda = lambda;
  ls.mask.assign(std::size_t(v.dims.cells()), 0);
  i64 cnt = 0;
  for (i64 i = 0; i < v.dims.cells(); ++i)
    if (v.v[std::size_t(i)] > lambda) {
      ls.mask[std::size_t(i)] = 1;
      ++cnt;
    }
  ls.cells = cnt;
  return ls;
}

Weight make_weight(const ScalarField& g, const GridDomain& dom, double p, double eps) {
  if (!(p > 1.0)) throw std::invalid_argument("weight: p must exceed one");
  if (!(eps > 0.0) || !(eps < p - 1.0))
    throw std::invalid_argument(
        "weight: exponent must lie in (0, p-1) so both the weight and its dual power are "
        "maximal-function powers below one");
  check_same_layout(g, dom);
  ScalarField base(g.dims, g.h, g.staggering);
  par_for(g.dims.cells(), [&](i64 i) {
    double v = dom.interior[std::size_t(i)] ? std::fabs(g.v[std::size_t(i)]) : 0.0;
    base.v[std::size_t(i)] = v + 1.0;
  });
  ScalarField M = maximal(base);
  Weight wt;
  wt.w = ScalarField(g.dims, g.h, g.staggering);
  par_for(g.dims.cells(), [&](i64 i) {
    wt.w.v[std::size_t(i)] = std::pow(M.v[std::size_t(i)], -eps);
  });
  wt.p = p;
  wt.eps = eps;
  wt.provenance = "maximal_power";
  return wt;
}

double ap_constant(const ScalarField& w, double p, const std::vector<double>& radii_physical,
                   ApWitness* witness) {
  if (!(p > 1.0)) throw std::invalid_argument("ap_constant: p must exceed one");
  for (i64 i = 0; i < w.dims.cells(); ++i)
    if (!(w.v[std::size_t(i)] > 0.0))
      throw std::invalid_argument("ap_constant: weight must be positive");
  BallAverager& av = shared_averager(w.dims, w.h);
  std::vector<double> radii_cells;
  for (double r : radii_physical) {
    double rc = r / w.h;
    if (rc < 1.0) continue;  // below one cell the ball is the cell itself
    radii_cells.push_back(rc);
  }
  if (radii_cells.empty()) radii_cells.push_back(1.0);
  ScalarField dual(w.dims, w.h, w.staggering);
  double dexp = -1.0 / (p - 1.0);
  par_for(w.dims.cells(), [&](i64 i) {
    dual.v[std::size_t(i)] = std::pow(w.v[std::size_t(i)], dexp);
  });
  auto aw = av.averages_at(w, radii_cells);
  auto ad = av.averages_at(dual, radii_cells);
  double best = 0.0;
  i64 best_cell = 0;
  std::size_t best_r = 0;
  for (std::size_t k = 0; k < radii_cells.size(); ++k) {
    for (i64 i = 0; i < w.dims.cells(); ++i) {
      double val = aw[k].v[std::size_t(i)] * std::pow(ad[k].v[std::size_t(i)], p - 1.0);
      if (val > best) {
        best = val;
        best_cell = i;
        best_r = k;
      }
    }
  }
  if (witness) {
    witness->value = best;
    witness->cx = int(best_cell % w.dims.nx);
    witness->cy = int((best_cell / w.dims.nx) % w.dims.ny);
    witness->cz = int(best_cell / (i64(w.dims.nx) * w.dims.ny));
    witness->radius_cells = radii_cells[best_r];
  }
  return best;
}

double ap_constant(const ScalarField& w, double p, ApWitness* witness) {
  BallAverager& av = shared_averager(w.dims, w.h);
  std::vector<double> radii_physical;
  for (double rc : av.radii_cells()) radii_physical.push_back(rc * w.h);
  return ap_constant(w, p, radii_physical, witness);
}

}  // namespace pstokes
