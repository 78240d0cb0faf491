#include "pstokes/truncation.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "pstokes/maxweight.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

i64 floor_div(i64 a, i64 b) {
  i64 q = a / b, r = a % b;
  return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

// cell index range (one axis) whose centers lie in the closed 3/2-dilated
// cube box [16a - 4s, 16a + 20s] in sixteenths of a cell
void dilated_center_range(int a, int s, int& lo, int& hi) {
  i64 num = -4 * i64(s) - 8;
  i64 q = floor_div(num, 16);
  lo = a + int(16 * q == num ? q : q + 1);
  hi = a + int(floor_div(20 * i64(s) - 8, 16));
}

// cell index range (one axis) of cells whose interiors overlap the closed
// 3/2-dilated cube box
void dilated_overlap_range(int a, int s, int& lo, int& hi) {
  lo = a + int(floor_div(-4 * i64(s) - 16, 16) + 1);
  i64 num = 20 * i64(s);
  i64 q = floor_div(num, 16);
  hi = a + int(16 * q == num ? q - 1 : q);
}

template <int NC>
double masked_power(const Field<NC>& f, const std::vector<std::uint8_t>& mask, double q,
                    const ScalarField* w) {
  const Dims d = f.dims;
  const i64 plane = i64(d.nx) * d.ny;
  const double h3 = f.h * f.h * f.h;
  double s = det_sum(d.nz, [&](i64 z) {
    double acc = 0.0;
    for (i64 i = z * plane; i < (z + 1) * plane; ++i) {
      if (!mask[std::size_t(i)]) continue;
      double m2 = 0.0;
      for (int c = 0; c < NC; ++c) m2 += f.at(c, i) * f.at(c, i);
      if (m2 == 0.0) continue;
      double t = std::pow(m2, 0.5 * q);
      if (w) t *= w->at(0, i);
      acc += t;
    }
    return acc;
  });
  return s * h3;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string gshort(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::vector<std::uint8_t> erode_mask(Dims d, const std::vector<std::uint8_t>& mask, int rounds) {
  std::vector<std::uint8_t> cur = mask;
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::uint8_t> next(cur.size(), 0);
    par_for(d.nz, [&](i64 z) {
      for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
          i64 i = d.idx(x, y, int(z));
          if (!cur[std::size_t(i)]) continue;
          const int nb[6][3] = {{x - 1, y, int(z)}, {x + 1, y, int(z)}, {x, y - 1, int(z)},
                                {x, y + 1, int(z)}, {x, y, int(z) - 1}, {x, y, int(z) + 1}};
          bool keep = true;
          for (auto& n : nb)
            if (!d.in_box(n[0], n[1], n[2]) || !cur[std::size_t(d.idx(n[0], n[1], n[2]))]) {
              keep = false;
              break;
            }
          if (keep) next[std::size_t(i)] = 1;
        }
    });
    cur.swap(next);
  }
  return cur;
}

CubeAffine local_linearization(const Potential& pot, const GridDomain& dom,
                               const WhitneyCover& cover, i64 cube) {
  const Dims d = cover.dims;
  const double h = cover.h;
  const DyadicCube& q = cover.cubes[std::size_t(cube)];
  CubeAffine out;

  int ox0, ox1, oy0, oy1, oz0, oz1;
  dilated_overlap_range(q.ax, q.side, ox0, ox1);
  dilated_overlap_range(q.ay, q.side, oy0, oy1);
  dilated_overlap_range(q.az, q.side, oz0, oz1);
  out.inside = true;
  for (int z = oz0; z <= oz1 && out.inside; ++z)
    for (int y = oy0; y <= oy1 && out.inside; ++y)
      for (int x = ox0; x <= ox1 && out.inside; ++x)
        if (!d.in_box(x, y, z) || !dom.is_interior(d.idx(x, y, z))) out.inside = false;
  if (!out.inside) return out;

  int cx0, cx1, cy0, cy1, cz0, cz1;
  dilated_center_range(q.ax, q.side, cx0, cx1);
  dilated_center_range(q.ay, q.side, cy0, cy1);
  dilated_center_range(q.az, q.side, cz0, cz1);
  cx0 = std::max(cx0, 0);
  cy0 = std::max(cy0, 0);
  cz0 = std::max(cz0, 0);
  cx1 = std::min(cx1, d.nx - 1);
  cy1 = std::min(cy1, d.ny - 1);
  cz1 = std::min(cz1, d.nz - 1);

  i64 count = 0;
  for (int z = cz0; z <= cz1; ++z)
    for (int y = cy0; y <= cy1; ++y)
      for (int x = cx0; x <= cx1; ++x) {
        i64 i = d.idx(x, y, z);
        for (int c = 0; c < 9; ++c) out.grad[std::size_t(c)] += pot.grad_w.at(c, i);
        ++count;
      }
  for (int c = 0; c < 9; ++c) out.grad[std::size_t(c)] /= double(count);

  const double xc = h * (q.ax + 0.5 * q.side);
  const double yc = h * (q.ay + 0.5 * q.side);
  const double zc = h * (q.az + 0.5 * q.side);
  for (int z = cz0; z <= cz1; ++z)
    for (int y = cy0; y <= cy1; ++y)
      for (int x = cx0; x <= cx1; ++x) {
        i64 i = d.idx(x, y, z);
        double rx = (x + 0.5) * h - xc, ry = (y + 0.5) * h - yc, rz = (z + 0.5) * h - zc;
        for (int c = 0; c < 3; ++c) {
          double lin = out.grad[std::size_t(3 * c)] * rx + out.grad[std::size_t(3 * c + 1)] * ry +
                       out.grad[std::size_t(3 * c + 2)] * rz;
          out.mean[std::size_t(c)] += pot.w.at(c, i) - lin;
        }
      }
  for (int c = 0; c < 3; ++c) out.mean[std::size_t(c)] /= double(count);
  return out;
}

RelativeTruncation relative_truncate(const VectorField& u, const std::vector<std::uint8_t>& O,
                                     const GridDomain& dom, const Potential& pot, double p,
                                     double q, const ScalarField* weight) {
  check_same_layout(u, dom, "relative_truncate");
  const Dims d = dom.dims;
  const i64 cells = d.cells();
  if (i64(O.size()) != cells)
    throw std::invalid_argument("relative_truncate: mask size does not match the box");
  if (!(q >= 1.0) || !(q <= p))
    throw std::invalid_argument("relative_truncate: the lower exponent must lie in [1, p]");

  RelativeTruncation out;
  out.O = O;
  for (i64 i = 0; i < cells; ++i) out.o_cells += O[std::size_t(i)] ? 1 : 0;
  out.whole_box = out.o_cells == cells;

  if (out.whole_box) {
    // the covering has no room: the truncation degenerates to the zero field
    out.u_O = VectorField(d, dom.h);
    out.w_O = VectorField(d, dom.h);
    out.blend.assign(std::size_t(cells), 1);
    out.blend_cells = cells;
  } else {
    std::vector<std::uint8_t> seed(std::size_t(cells), 0);
    for (i64 i = 0; i < cells; ++i)
      seed[std::size_t(i)] = (O[std::size_t(i)] && dom.is_interior(i)) ? 1 : 0;
    out.blend = erode_mask(d, seed, 2);
    for (i64 i = 0; i < cells; ++i) out.blend_cells += out.blend[std::size_t(i)] ? 1 : 0;

    if (out.blend_cells == 0) {
      out.untouched = true;
      out.u_O = u;
      out.w_O = pot.w;
    } else {
      out.cover = decompose(d, dom.h, out.blend);
      partition_of_unity(out.cover);
      const i64 nq = i64(out.cover.cubes.size());
      out.lin.resize(std::size_t(nq));
      par_for(nq, [&](i64 c) {
        out.lin[std::size_t(c)] = local_linearization(pot, dom, out.cover, c);
      });

      VectorField delta(d, dom.h);
      const WhitneyCover& cov = out.cover;
      par_for(cells, [&](i64 i) {
        if (cov.cell_cube[std::size_t(i)] < 0) return;
        int x = int(i % d.nx), y = int((i / d.nx) % d.ny), z = int(i / (i64(d.nx) * d.ny));
        double px = (x + 0.5) * dom.h, py = (y + 0.5) * dom.h, pz = (z + 0.5) * dom.h;
        double acc[3] = {0.0, 0.0, 0.0};
        for (i64 k = cov.cover_start[std::size_t(i)]; k < cov.cover_start[std::size_t(i) + 1];
             ++k) {
          const i64 j = cov.cover_cube[std::size_t(k)];
          const double psi = cov.cover_psi[std::size_t(k)];
          const CubeAffine& la = out.lin[std::size_t(j)];
          if (!la.inside) {
            for (int c = 0; c < 3; ++c) acc[c] += psi * (0.0 - pot.w.at(c, i));
            continue;
          }
          const DyadicCube& qc = cov.cubes[std::size_t(j)];
          double rx = px - dom.h * (qc.ax + 0.5 * qc.side);
          double ry = py - dom.h * (qc.ay + 0.5 * qc.side);
          double rz = pz - dom.h * (qc.az + 0.5 * qc.side);
          for (int c = 0; c < 3; ++c) {
            double lv = la.mean[std::size_t(c)] + la.grad[std::size_t(3 * c)] * rx +
                        la.grad[std::size_t(3 * c + 1)] * ry +
                        la.grad[std::size_t(3 * c + 2)] * rz;
            acc[c] += psi * (lv - pot.w.at(c, i));
          }
        }
        for (int c = 0; c < 3; ++c) delta.at(c, i) = acc[c];
      });

      VectorField cd = curl(delta);
      std::vector<std::uint8_t> touched(std::size_t(cells), 0);
      par_for(d.nz, [&](i64 z) {
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x) {
            i64 i = d.idx(x, y, int(z));
            const int nb[7][3] = {{x, y, int(z)},     {x - 1, y, int(z)}, {x + 1, y, int(z)},
                                  {x, y - 1, int(z)}, {x, y + 1, int(z)}, {x, y, int(z) - 1},
                                  {x, y, int(z) + 1}};
            for (auto& n : nb)
              if (d.in_box(n[0], n[1], n[2]) &&
                  cov.cell_cube[std::size_t(d.idx(n[0], n[1], n[2]))] >= 0) {
                touched[std::size_t(i)] = 1;
                break;
              }
          }
      });
      out.u_O = u;
      out.w_O = pot.w;
      par_for(cells, [&](i64 i) {
        if (touched[std::size_t(i)])
          for (int c = 0; c < 3; ++c) out.u_O.at(c, i) = u.at(c, i) + cd.at(c, i);
        if (cov.cell_cube[std::size_t(i)] >= 0)
          for (int c = 0; c < 3; ++c) out.w_O.at(c, i) = pot.w.at(c, i) + delta.at(c, i);
      });
    }
  }

  VectorField diff = out.u_O;
  axpy(-1.0, u, diff);
  TensorField gdiff = gradient(diff);
  TensorField gu = gradient(u);
  NormSpec ps;
  ps.q = p;
  double dp = power_integral(gdiff, dom, ps);
  double up = power_integral(gu, dom, ps);
  out.lip2_ratio = safe_ratio(dp, up);
  if (weight) {
    NormSpec pw = ps;
    pw.weight = weight;
    double dpw = power_integral(gdiff, dom, pw);
    double upw = power_integral(gu, dom, pw);
    out.lip3_ratio = safe_ratio(dpw, upw);
    NormSpec qw;
    qw.q = q;
    qw.weight = weight;
    double dqw = power_integral(gdiff, dom, qw);
    double om = weighted_measure(dom, out.O, weight);
    double den = std::pow(om, (p - q) / p) * std::pow(upw, q / p);
    out.lip4_ratio = safe_ratio(dqw, den);
  }
  return out;
}

ScalarField hessian_maximal(const Potential& pot, const GridDomain& dom) {
  ScalarField g = pot.hess_mag;
  par_for(g.cells(), [&](i64 i) {
    if (!dom.is_interior(i)) g.v[std::size_t(i)] = 0.0;
  });
  return maximal(g);
}

LipschitzTruncation lipschitz_truncate_core(const VectorField& u, const GridDomain& dom,
                                            const Potential& pot, const ScalarField& maxfield,
                                            double lambda, double p, double q,
                                            const ScalarField* weight) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("lipschitz_truncate: the threshold must be positive");
  LipschitzTruncation out;
  out.lambda = lambda;
  LevelSet ls = level_set(maxfield, lambda);
  out.bad = std::move(ls.mask);
  out.bad_cells = ls.cells;
  out.bad_measure = double(ls.cells) * dom.h * dom.h * dom.h;
  out.rel = relative_truncate(u, out.bad, dom, pot, p, q, weight);
  out.u_lam = out.rel.u_O;

  NormSpec linf;
  linf.q = NormSpec::inf;
  out.grad_sup = norm(gradient(out.u_lam), dom, linf);
  out.c_inf = out.grad_sup / lambda;
  NormSpec ps;
  ps.q = p;
  double up = power_integral(gradient(u), dom, ps);
  out.bad_ratio = safe_ratio(out.bad_measure * std::pow(lambda, p), up);
  return out;
}

LipschitzTruncation lipschitz_truncate(const VectorField& u, const GridDomain& dom,
                                       double lambda, double p, double q,
                                       const ScalarField* weight) {
  Potential pot = inverse_curl(u, dom);
  ScalarField mf = hessian_maximal(pot, dom);
  return lipschitz_truncate_core(u, dom, pot, mf, lambda, p, q, weight);
}

TruncationReport verify_truncation(const VectorField& u, const GridDomain& dom, double p,
                                   const std::vector<double>& lambdas,
                                   const std::vector<double>& q_list,
                                   const ScalarField* weight) {
  if (lambdas.empty()) throw std::invalid_argument("verify_truncation: empty ladder");
  for (double q : q_list)
    if (!(q >= 1.0 && q <= p))
      throw std::invalid_argument("verify_truncation: exponents must lie in [1, p]");

  TruncationReport rep;
  rep.p = p;
  rep.q_list = q_list;
  rep.weighted = weight != nullptr;
  rep.sup_lq_diff.assign(q_list.size(), 0.0);
  rep.sup_lq_stab.assign(q_list.size(), 0.0);

  Potential pot = inverse_curl(u, dom);
  ScalarField mf = hessian_maximal(pot, dom);
  const Dims d = dom.dims;
  const i64 cells = d.cells();

  NormSpec ps;
  ps.q = p;
  TensorField gu = gradient(u);
  double up = power_integral(gu, dom, ps);
  std::vector<double> uq(q_list.size(), 0.0);
  for (std::size_t k = 0; k < q_list.size(); ++k) {
    NormSpec qs;
    qs.q = q_list[k];
    uq[k] = power_integral(u, dom, qs);
  }

  double qrel = q_list.empty() ? std::max(1.0, p - 0.5) : q_list.front();
  for (double lambda : lambdas) {
    LipschitzTruncation lt =
        lipschitz_truncate_core(u, dom, pot, mf, lambda, p, qrel, weight);
    TruncationRow row;
    row.lambda = lambda;
    row.bad_cells = lt.bad_cells;
    row.bad_measure_ratio = lt.bad_ratio;
    row.linf_ratio = lt.c_inf;

    std::vector<std::uint8_t> bad_dom(std::size_t(cells), 0);
    for (i64 i = 0; i < cells; ++i)
      bad_dom[std::size_t(i)] = (lt.bad[std::size_t(i)] && dom.is_interior(i)) ? 1 : 0;

    VectorField diff = lt.u_lam;
    axpy(-1.0, u, diff);
    TensorField gdiff = gradient(diff);
    for (std::size_t k = 0; k < q_list.size(); ++k) {
      const double q = q_list[k];
      double num = masked_power(gdiff, bad_dom, q, nullptr);
      row.lq_diff_ratio.push_back(safe_ratio(num, std::pow(lambda, q - p) * up));
      double snum = masked_power(diff, bad_dom, q, nullptr);
      row.lq_stab_ratio.push_back(safe_ratio(snum, uq[k]));
    }
    if (weight) {
      double wnum = masked_power(gdiff, bad_dom, p, weight);
      NormSpec pw = ps;
      pw.weight = weight;
      double wden = power_integral(gdiff, dom, pw);
      row.weighted_ratio = safe_ratio(wnum, wden);
      double upw = power_integral(gu, dom, pw);
      row.weighted_lip3_ratio = safe_ratio(wden, upw);
      rep.sup_weighted_ratio = std::max(rep.sup_weighted_ratio, row.weighted_ratio);
      rep.sup_weighted_lip3 = std::max(rep.sup_weighted_lip3, row.weighted_lip3_ratio);
    }
    rep.sup_bad_ratio = std::max(rep.sup_bad_ratio, row.bad_measure_ratio);
    rep.sup_linf_ratio = std::max(rep.sup_linf_ratio, row.linf_ratio);
    for (std::size_t k = 0; k < q_list.size(); ++k) {
      rep.sup_lq_diff[k] = std::max(rep.sup_lq_diff[k], row.lq_diff_ratio[k]);
      rep.sup_lq_stab[k] = std::max(rep.sup_lq_stab[k], row.lq_stab_ratio[k]);
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string TruncationReport::csv() const {
  std::string s = "lambda,bad_measure_ratio,linf_ratio";
  for (double q : q_list) s += ",lq_diff_ratio[" + gshort(q) + "]";
  for (double q : q_list) s += ",lq_stab_ratio[" + gshort(q) + "]";
  if (weighted) s += ",weighted_ratio,weighted_lip3_ratio";
  s += "\n";
  for (const auto& r : rows) {
    s += g17(r.lambda) + "," + g17(r.bad_measure_ratio) + "," + g17(r.linf_ratio);
    for (double v : r.lq_diff_ratio) s += "," + g17(v);
    for (double v : r.lq_stab_ratio) s += "," + g17(v);
    if (weighted) s += "," + g17(r.weighted_ratio) + "," + g17(r.weighted_lip3_ratio);
    s += "\n";
  }
  return s;
}

}  // namespace pstokes
