#include "pstokes/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {
namespace {

constexpr double kTiny = 1e-300;

template <int NC>
double l2(const Field<NC>& f) {
  return std::sqrt(std::max(0.0, dot(f, f)));
}

inline void decode(const Dims& d, i64 i, int& x, int& y, int& z) {
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  z = static_cast<int>(i / plane);
  const i64 r = i % plane;
  y = static_cast<int>(r / d.nx);
  x = static_cast<int>(r % d.nx);
}

std::vector<u8> free_mask(const GridDomain& dom) {
  std::vector<u8> m(static_cast<std::size_t>(dom.dims.cells()), 0);
  par_for(dom.dims.cells(),
          [&](i64 i) { m[static_cast<std::size_t>(i)] = dom.is_free(i) ? 1 : 0; });
  return m;
}

template <int NC>
void apply_mask(Field<NC>& f, const std::vector<u8>& keep) {
  par_for(f.cells(), [&](i64 i) {
    if (!keep[static_cast<std::size_t>(i)])
      for (int c = 0; c < NC; ++c) f.at(c, i) = 0.0;
  });
}

// The scalar potential of a radial law A(z) = a(|z|) z and its derivatives.
// For the crossover law the band between K/2 and K has no closed form; a
// fixed composite Simpson rule keeps it deterministic and smooth enough for
// the line search.
struct Law {
  StressModel::Kind kind = StressModel::Kind::power_law;
  double p = 2.0;
  double d2 = 0.0;  // delta^2
  double nu = 0.0, dnu = 0.0, K = 0.0, pc = 0.0;
  double HK = 0.0;  // band integral over [K/2, K]
};

double band_integral(const Law& L, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  const int n = 32;
  const double w = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = lo + w * i;
    const double g = crossover_weight(s, L.K) * std::pow(1.0 + s * s, 0.5 * (L.pc - 2.0)) * s;
    const double c = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += c * g;
  }
  return L.dnu * acc * w / 3.0;
}

Law make_law(const StressModel& m, double delta) {
  Law L;
  L.kind = m.kind;
  if (m.kind == StressModel::Kind::power_law) {
    L.p = m.p;
    L.d2 = delta * delta;
  } else {
    L.nu = m.nu;
    L.dnu = m.nu0 - m.nu;
    L.K = m.K;
    L.pc = m.carreau_p;
    L.HK = band_integral(L, 0.5 * L.K, L.K);
  }
  return L;
}

double potential(const Law& L, double t2) {
  if (L.kind == StressModel::Kind::power_law) {
    const double e = 0.5 * L.p;
    return (std::pow(L.d2 + t2, e) - std::pow(L.d2, e)) / L.p;
  }
  const double t = std::sqrt(t2);
  const double base = 0.5 * L.nu * t2;
  const double half = 0.5 * L.K;
  if (t <= half) return base;
  if (t < L.K) return base + band_integral(L, half, t);
  const double e = 0.5 * L.pc;
  return base + L.HK +
         L.dnu * (std::pow(1.0 + t2, e) - std::pow(1.0 + L.K * L.K, e)) / L.pc;
}

// radial factor a with A(z) = a z, and tangent dA[y] = c1 y + c2 (z:y) z
void law_coeffs(const Law& L, double t2, double& a, double& c1, double& c2) {
  if (L.kind == StressModel::Kind::power_law) {
    if (L.p == 2.0) {
      a = c1 = 1.0;
      c2 = 0.0;
      return;
    }
    const double w2 = L.d2 + t2;
    if (w2 == 0.0) {  // only reachable for p > 2: below two the ladder is positive
      a = c1 = c2 = 0.0;
      return;
    }
    a = c1 = std::pow(w2, 0.5 * (L.p - 2.0));
    c2 = (L.p - 2.0) * std::pow(w2, 0.5 * (L.p - 4.0));
    return;
  }
  const double t = std::sqrt(t2);
  const double st = L.dnu * std::pow(1.0 + t2, 0.5 * (L.pc - 2.0));
  const double phi = crossover_weight(t, L.K);
  a = c1 = L.nu + phi * st;
  const double sp2 = L.dnu * 0.5 * (L.pc - 2.0) * std::pow(1.0 + t2, 0.5 * (L.pc - 4.0));
  c2 = (t > 0.0 ? crossover_slope(t, L.K) * st / t : 0.0) + 2.0 * phi * sp2;
}

struct StokesProblem {
  const GridDomain& dom;
  const TensorField& f;
  const VectorField* load = nullptr;  // extra <load, u> term (frozen convection)
  Law law;
  double rho = 30.0;
  const std::vector<u8>* freem = nullptr;
};

inline double sym_t2(const double g[9], double e[9]) {
  e[0] = g[0];
  e[4] = g[4];
  e[8] = g[8];
  e[1] = e[3] = 0.5 * (g[1] + g[3]);
  e[2] = e[6] = 0.5 * (g[2] + g[6]);
  e[5] = e[7] = 0.5 * (g[5] + g[7]);
  return e[0] * e[0] + e[4] * e[4] + e[8] * e[8] +
         2.0 * (e[1] * e[1] + e[2] * e[2] + e[5] * e[5]);
}

// sum of G(|eps u|) - f : grad u - pi div u + (rho/2)(div u)^2 - load . u,
// cell measure h^3
double objective(const StokesProblem& P, const VectorField& u, const ScalarField& pi) {
  const Dims d = u.dims;
  const TensorField G = gradient(u);
  const ScalarField dv = divergence(u);
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const double h3 = u.h * u.h * u.h;
  return h3 * det_sum(d.nz, [&](i64 z) {
    const double* g[9];
    const double* fc[9];
    for (int c = 0; c < 9; ++c) {
      g[c] = G.comp(c) + z * plane;
      fc[c] = P.f.comp(c) + z * plane;
    }
    const double* dvp = dv.comp(0) + z * plane;
    const double* pip = pi.comp(0) + z * plane;
    const double* lc[3] = {nullptr, nullptr, nullptr};
    const double* uc[3] = {nullptr, nullptr, nullptr};
    if (P.load)
      for (int c = 0; c < 3; ++c) {
        lc[c] = P.load->comp(c) + z * plane;
        uc[c] = u.comp(c) + z * plane;
      }
    double acc = 0.0;
    for (i64 i = 0; i < plane; ++i) {
      double gg[9], ee[9];
      for (int c = 0; c < 9; ++c) gg[c] = g[c][i];
      const double t2 = sym_t2(gg, ee);
      double cell = potential(P.law, t2);
      for (int c = 0; c < 9; ++c) cell -= fc[c][i] * gg[c];
      const double dvv = dvp[i];
      cell += (0.5 * P.rho * dvv - pip[i]) * dvv;
      if (P.load)
        for (int c = 0; c < 3; ++c) cell -= lc[c][i] * uc[c][i];
      acc += cell;
    }
    return acc;
  });
}

TensorField radial_stress(const Law& law, const TensorField& G) {
  TensorField S(G.dims, G.h);
  par_for(G.cells(), [&](i64 i) {
    double gg[9], ee[9];
    for (int c = 0; c < 9; ++c) gg[c] = G.at(c, i);
    const double t2 = sym_t2(gg, ee);
    double a, c1, c2;
    law_coeffs(law, t2, a, c1, c2);
    for (int c = 0; c < 9; ++c) S.at(c, i) = a * ee[c];
  });
  return S;
}

// gradient of the objective: -div A(eps u) + div f + grad pi
//                            - rho grad(div u) - load, on the free cells
VectorField al_gradient(const StokesProblem& P, const VectorField& u, const ScalarField& pi,
                        double* scale_out) {
  const TensorField G = gradient(u);
  TensorField FS = radial_stress(P.law, G);
  scale(FS, -1.0);
  axpy(1.0, P.f, FS);
  VectorField r = divergence(FS);
  const double n1 = l2(r);
  const VectorField gp = gradient(pi);
  const double n2 = l2(gp);
  axpy(1.0, gp, r);
  const ScalarField dv = divergence(u);
  const VectorField gdv = gradient(dv);
  const double n3 = l2(gdv);
  axpy(-P.rho, gdv, r);
  double n4 = 0.0;
  if (P.load) {
    n4 = l2(*P.load);
    axpy(-1.0, *P.load, r);
  }
  apply_mask(r, *P.freem);
  if (scale_out) *scale_out = n1 + n2 + P.rho * n3 + n4 + kTiny;
  return r;
}

struct TangentCache {
  TensorField z;  // eps u at the current iterate
  ScalarField c1, c2, prec;
  TangentCache(const Dims& d, double h) : z(d, h), c1(d, h), c2(d, h), prec(d, h) {}
};

void build_cache(const StokesProblem& P, const VectorField& u, TangentCache& C) {
  const TensorField G = gradient(u);
  const double rho = P.rho;
  const Law law = P.law;
  par_for(u.cells(), [&](i64 i) {
    double gg[9], ee[9];
    for (int c = 0; c < 9; ++c) gg[c] = G.at(c, i);
    const double t2 = sym_t2(gg, ee);
    double a, c1, c2;
    law_coeffs(law, t2, a, c1, c2);
    for (int c = 0; c < 9; ++c) C.z.at(c, i) = ee[c];
    C.c1.at(0, i) = c1;
    C.c2.at(0, i) = c2;
    double diag = c1 + 0.5 * c2 * t2;
    if (!(diag > 0.25 * c1)) diag = 0.25 * c1;
    C.prec.at(0, i) = 1.0 / (diag + rho + kTiny);
  });
}

// tangent operator: -div dA(eps u)[eps s] - rho grad(div s), on the free cells
void apply_tangent(const StokesProblem& P, const TangentCache& C, const VectorField& s,
                   VectorField& out) {
  const TensorField Gs = gradient(s);
  TensorField T(s.dims, s.h);
  par_for(s.cells(), [&](i64 i) {
    double gg[9], ee[9];
    for (int c = 0; c < 9; ++c) gg[c] = Gs.at(c, i);
    sym_t2(gg, ee);
    double zh = 0.0;
    for (int c = 0; c < 9; ++c) zh += C.z.at(c, i) * ee[c];
    const double c1 = C.c1.at(0, i);
    const double c2z = C.c2.at(0, i) * zh;
    for (int c = 0; c < 9; ++c) T.at(c, i) = c1 * ee[c] + c2z * C.z.at(c, i);
  });
  out = divergence(T);
  scale(out, -1.0);
  const ScalarField ds = divergence(s);
  const VectorField gds = gradient(ds);
  axpy(-P.rho, gds, out);
  apply_mask(out, *P.freem);
}

template <int NC, class Apply>
int pcg(Apply&& apply, const Field<NC>& b, Field<NC>& x, const ScalarField* jac, double tolrel,
        int maxit) {
  x.fill(0.0);
  const double bn = l2(b);
  if (!(bn > 0.0)) return 0;
  Field<NC> r = b;
  Field<NC> z = b;
  auto precond = [&](const Field<NC>& in, Field<NC>& out) {
    if (!jac) {
      out = in;
      return;
    }
    par_for(in.cells(), [&](i64 i) {
      const double m = jac->at(0, i);
      for (int c = 0; c < NC; ++c) out.at(c, i) = m * in.at(c, i);
    });
  };
  precond(r, z);
  Field<NC> p = z;
  Field<NC> q(b.dims, b.h);
  double rz = dot(r, z);
  for (int it = 1; it <= maxit; ++it) {
    apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) return it;  // curvature exhausted at roundoff
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    axpy(-alpha, q, r);
    if (l2(r) <= tolrel * bn) return it;
    precond(r, z);
    const double rz2 = dot(r, z);
    const double beta = rz2 / std::max(rz, kTiny);
    rz = rz2;
    scale(p, beta);
    axpy(1.0, z, p);
  }
  return maxit;
}

struct NewtonOut {
  double rel = 1.0;
  bool ok = false;
  int steps = 0;
  std::string err;
};

NewtonOut newton_round(const StokesProblem& P, VectorField& u, const ScalarField& pi,
                       const SolverConfig& cfg, double tol_round, Solution* diag,
                       bool record_energy) {
  NewtonOut out;
  double rscale = 0.0;
  VectorField r = al_gradient(P, u, pi, &rscale);
  out.rel = l2(r) / rscale;
  TangentCache C(u.dims, u.h);
  VectorField s(u.dims, u.h);
  VectorField trial(u.dims, u.h);
  const double cg_rel = std::max(cfg.cg_tol, 0.25 * tol_round);
  for (int it = 0; it < cfg.max_newton; ++it) {
    if (out.rel <= tol_round) {
      out.ok = true;
      return out;
    }
    build_cache(P, u, C);
    VectorField nr = r;
    scale(nr, -1.0);
    pcg(
        [&](const VectorField& in, VectorField& o) { apply_tangent(P, C, in, o); }, nr, s,
        &C.prec, cg_rel, cfg.cg_max);
    double d0 = dot(r, s);
    if (!(d0 < 0.0)) {  // inexact step lost descent; fall back to the gradient
      s = nr;
      d0 = dot(r, s);
    }
    if (!std::isfinite(d0)) {
      out.err = "search direction is not finite";
      return out;
    }
    const double obj0 = objective(P, u, pi);
    double alpha = 1.0;
    bool accepted = false;
    double objT = obj0;
    for (int bt = 0; bt < 60; ++bt) {
      trial = u;
      axpy(alpha, s, trial);
      objT = objective(P, trial, pi);
      if (objT <= obj0 + 1e-4 * alpha * d0 + 1e-13 * (1.0 + std::fabs(obj0))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.err = "line search stalled";
      return out;
    }
    std::swap(u.v, trial.v);
    out.steps += 1;
    if (diag) {
      if (record_energy) {
        if (diag->energy_history.empty()) diag->energy_history.push_back(obj0);
        diag->energy_history.push_back(objT);
      }
      if (objT > obj0 + 1e-12 * (1.0 + std::fabs(obj0))) diag->energy_monotone = false;
    }
    r = al_gradient(P, u, pi, &rscale);
    out.rel = l2(r) / rscale;
  }
  out.ok = out.rel <= tol_round;
  if (!out.ok) out.err = "newton iteration cap";
  return out;
}

struct LegOut {
  bool ok = true;
  std::string err;
  double residual_rel = 0.0;
  double div_rel = 0.0;
};

// Multiplier rounds for one regularization level. Early rounds run Newton at
// a tolerance tied to the current divergence so the cost concentrates where
// it matters; the final multiplier update is folded into pi, which makes the
// weak-form residual of the returned pair equal the last Newton residual.
LegOut run_leg(const StokesProblem& P, const SolverConfig& cfg, VectorField& u, ScalarField& pi,
               Solution* diag, bool record_energy) {
  LegOut out;
  double round_tol = std::max(cfg.tol, 1e-4);
  for (int round = 0; round < cfg.max_uzawa; ++round) {
    const NewtonOut nw =
        newton_round(P, u, pi, cfg, round_tol, diag, record_energy && round == 0);
    if (diag) {
      diag->newton_total += nw.steps;
      diag->uzawa_total += 1;
      if (cfg.keep_history) diag->residual_history.push_back(nw.rel);
    }
    const ScalarField dv = divergence(u);
    const double un = l2(u);
    const double dn = l2(dv);
    const double div_rel = un > 0.0 ? u.h * dn / un : (dn > 0.0 ? 1.0 : 0.0);
    axpy(-P.rho, dv, pi);
    out.residual_rel = nw.rel;
    out.div_rel = div_rel;
    if (!nw.ok && !nw.err.empty() && nw.err != "newton iteration cap") {
      out.ok = false;
      out.err = nw.err;
      return out;
    }
    if (nw.rel <= cfg.tol && div_rel <= cfg.div_tol) return out;
    round_tol = std::max(cfg.tol, std::min(1e-4, 1e-2 * div_rel));
  }
  out.ok = false;
  out.err = "multiplier rounds exhausted";
  return out;
}

double w1p_norm(const VectorField& v, const GridDomain& dom, double p) {
  NormSpec ns;
  ns.q = p;
  return std::pow(power_integral(v, dom, ns) + power_integral(gradient(v), dom, ns), 1.0 / p);
}

std::string history_tail(const std::vector<double>& h) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(3);
  const std::size_t n = h.size();
  const std::size_t from = n > 8 ? n - 8 : 0;
  for (std::size_t i = from; i < n; ++i) os << (i > from ? " " : "") << h[i];
  return os.str();
}

Solution solve_core(const StressModel& model, const TensorField& f, const VectorField* load,
                    const GridDomain& dom, const SolverConfig& cfg, const VectorField* warm_u,
                    const ScalarField* warm_pi) {
  check_same_layout(f, dom, "solve");
  if (load) check_same_layout(*load, dom, "solve load");
  if (!(model.p > 1.0)) throw std::invalid_argument("solve: exponent must exceed one");
  if (model.kind == StressModel::Kind::user_map)
    throw std::invalid_argument(
        "solve: a user stress map carries no potential; use the power law or the crossover law");
  if (!(cfg.rho > 0.0) || !(cfg.tol > 0.0) || !(cfg.div_tol > 0.0) || !(cfg.cg_tol > 0.0))
    throw std::invalid_argument("solve: tolerances and rho must be positive");
  if (!(cfg.relax > 0.0) || cfg.relax > 1.0)
    throw std::invalid_argument("solve: relaxation must lie in (0, 1]");
  const bool nonlinear = model.kind == StressModel::Kind::power_law && model.p != 2.0;
  std::vector<double> ladder;
  if (nonlinear) {
    if (cfg.deltas.empty()) throw std::invalid_argument("solve: empty regularization ladder");
    ladder = cfg.deltas;
    if (model.p < 2.0)
      for (const double dlt : ladder)
        if (!(dlt > 0.0))
          throw std::invalid_argument("solve: p below two needs positive regularization");
  } else {
    ladder = {0.0};
  }

  Solution sol(dom.dims, dom.h);
  const std::vector<u8> freem = free_mask(dom);
  i64 nfree = 0;
  for (const u8 b : freem) nfree += b;
  if (nfree == 0) throw std::invalid_argument("solve: no interior unknowns");

  if (warm_u) {
    sol.u = *warm_u;
    apply_mask(sol.u, freem);
  }
  if (warm_pi) sol.pi = *warm_pi;
  const bool cold = l2(sol.u) == 0.0;

  StokesProblem P{dom, f, load, Law{}, cfg.rho, &freem};

  // a cold nonlinear solve starts from the Newtonian solution to set the scale
  if (nonlinear && cold) {
    P.law = make_law(StressModel::power_law(2.0), 0.0);
    SolverConfig pre = cfg;
    pre.tol = std::max(cfg.tol, 1e-6);
    pre.div_tol = std::max(cfg.div_tol, 1e-8);
    pre.max_uzawa = std::min(cfg.max_uzawa, 60);
    run_leg(P, pre, sol.u, sol.pi, &sol, false);
  }

  VectorField prev_leg(dom.dims, dom.h);
  double leg_res = 0.0, leg_div = 0.0;
  for (std::size_t li = 0; li < ladder.size(); ++li) {
    P.law = make_law(model, ladder[li]);
    const LegOut lo = run_leg(P, cfg, sol.u, sol.pi, &sol, cold && li == 0);
    sol.delta_used = ladder[li];
    sol.residual_rel = lo.residual_rel;
    sol.div_rel = lo.div_rel;
    if (!lo.ok) {
      sol.converged = false;
      sol.message = "regularization leg " + std::to_string(li) + ": " + lo.err +
                    "; residual history " + history_tail(sol.residual_history);
      return sol;
    }
    if (li > 0) {
      const double dist = w1p_distance(sol.u, prev_leg, dom, model.p);
      const double base = w1p_norm(sol.u, dom, model.p);
      sol.anneal_tail.push_back(dist / std::max(base, kTiny));
    }
    if (li + 1 < ladder.size()) prev_leg = sol.u;
    leg_res = lo.residual_rel;
    leg_div = lo.div_rel;
  }
  sol.residual_rel = leg_res;
  sol.div_rel = leg_div;
  sol.converged = true;
  pressure_gauge(sol.pi, dom);
  return sol;
}

}  // namespace

Solution solve_stokes(const StressModel& model, const TensorField& f, const GridDomain& dom,
                      const SolverConfig& cfg) {
  return solve_core(model, f, nullptr, dom, cfg, nullptr, nullptr);
}

Solution solve_navier_stokes(const StressModel& model, const TensorField& f, const GridDomain& dom,
                             const SolverConfig& cfg) {
  Solution base = solve_core(model, f, nullptr, dom, cfg, nullptr, nullptr);
  if (!base.converged) {
    base.message = "transport-free stage: " + base.message;
    return base;
  }
  SolverConfig sweep_cfg = cfg;
  if (model.kind == StressModel::Kind::power_law && model.p != 2.0 && !cfg.deltas.empty())
    sweep_cfg.deltas = {cfg.deltas.back()};

  VectorField w = base.u;
  ScalarField pw = base.pi;
  int newton_total = base.newton_total;
  int uzawa_total = base.uzawa_total;
  std::vector<double> energy = std::move(base.energy_history);
  std::vector<double> tails = std::move(base.anneal_tail);
  bool emono = base.energy_monotone;
  std::vector<double> ns_hist;
  double best = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= cfg.max_picard; ++k) {
    VectorField frozen = convection(w, w);
    scale(frozen, -1.0);
    Solution sk = solve_core(model, f, &frozen, dom, sweep_cfg, &w, &pw);
    newton_total += sk.newton_total;
    uzawa_total += sk.uzawa_total;
    emono = emono && sk.energy_monotone;
    sk.newton_total = newton_total;
    sk.uzawa_total = uzawa_total;
    sk.picard_total = k;
    sk.energy_monotone = emono;
    if (!sk.converged) {
      sk.message = "picard sweep " + std::to_string(k) + ": " + sk.message;
      sk.residual_history = std::move(ns_hist);
      return sk;
    }
    const double rel = weak_residual(model, sk, f, dom, true);
    ns_hist.push_back(rel);
    if (std::isfinite(rel) && rel <= cfg.tol) {
      sk.residual_rel = rel;
      sk.energy_history = std::move(energy);
      sk.anneal_tail = std::move(tails);
      sk.residual_history = std::move(ns_hist);
      return sk;
    }
    if (!std::isfinite(rel) || rel > 5.0 * best) {
      sk.converged = false;
      sk.residual_rel = rel;
      sk.residual_history = std::move(ns_hist);
      sk.message =
          "picard sweeps diverge; reduce the forcing amplitude or strengthen the "
          "under-relaxation; residual history " +
          history_tail(sk.residual_history);
      return sk;
    }
    best = std::min(best, rel);
    VectorField du = sk.u;
    axpy(-1.0, w, du);
    axpy(cfg.relax, du, w);
    ScalarField dp = sk.pi;
    axpy(-1.0, pw, dp);
    axpy(cfg.relax, dp, pw);
  }
  Solution out(dom.dims, dom.h);
  out.u = w;
  out.pi = pw;
  out.converged = false;
  out.newton_total = newton_total;
  out.uzawa_total = uzawa_total;
  out.picard_total = cfg.max_picard;
  out.residual_rel = ns_hist.empty() ? 1.0 : ns_hist.back();
  out.residual_history = std::move(ns_hist);
  out.message = "picard sweep cap reached before the tolerance; residual history " +
                history_tail(out.residual_history);
  return out;
}

VectorField convection(const VectorField& w, const VectorField& u) {
  if (w.dims != u.dims) throw std::invalid_argument("convection: dims mismatch");
  const TensorField G = gradient(u);
  TensorField T(u.dims, u.h);
  par_for(u.cells(), [&](i64 i) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) T.at(3 * a + b, i) = u.at(a, i) * w.at(b, i);
  });
  const VectorField dT = divergence(T);
  VectorField out(u.dims, u.h);
  par_for(u.cells(), [&](i64 i) {
    for (int a = 0; a < 3; ++a) {
      double adv = 0.0;
      for (int b = 0; b < 3; ++b) adv += G.at(3 * a + b, i) * w.at(b, i);
      out.at(a, i) = 0.5 * (adv + dT.at(a, i));
    }
  });
  return out;
}

double weak_residual(const StressModel& model, const Solution& sol, const TensorField& f,
                     const GridDomain& dom, bool with_convection) {
  check_same_layout(f, dom, "weak_residual");
  check_same_layout(sol.u, dom, "weak_residual state");
  const TensorField E = sym_gradient(sol.u);
  TensorField FS = stress_field(model, E, sol.delta_used);
  scale(FS, -1.0);
  axpy(1.0, f, FS);
  VectorField r = divergence(FS);
  const double n1 = l2(r);
  const VectorField gp = gradient(sol.pi);
  const double n2 = l2(gp);
  axpy(1.0, gp, r);
  double n3 = 0.0;
  if (with_convection) {
    const VectorField N = convection(sol.u, sol.u);
    n3 = l2(N);
    axpy(1.0, N, r);
  }
  const std::vector<u8> freem = free_mask(dom);
  apply_mask(r, freem);
  return l2(r) / (n1 + n2 + n3 + kTiny);
}

std::vector<u8> pressure_mask(const GridDomain& dom) {
  const Dims d = dom.dims;
  std::vector<u8> m(static_cast<std::size_t>(d.cells()), 0);
  par_for(d.cells(), [&](i64 i) {
    if (dom.is_free(i)) {
      m[static_cast<std::size_t>(i)] = 1;
      return;
    }
    int x, y, z;
    decode(d, i, x, y, z);
    const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                          {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
    for (const auto& c : nb)
      if (d.in_box(c[0], c[1], c[2]) && dom.is_free(d.idx(c[0], c[1], c[2]))) {
        m[static_cast<std::size_t>(i)] = 1;
        return;
      }
  });
  return m;
}

std::vector<std::int32_t> parity_components(const Dims& dims, const std::vector<u8>& mask,
                                            int* component_count) {
  const i64 n = dims.cells();
  if (mask.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("parity_components: mask size mismatch");
  std::vector<std::int32_t> comp(static_cast<std::size_t>(n), -1);
  std::vector<i64> stack;
  std::int32_t next = 0;
  for (i64 i = 0; i < n; ++i) {
    if (!mask[static_cast<std::size_t>(i)] || comp[static_cast<std::size_t>(i)] >= 0) continue;
    comp[static_cast<std::size_t>(i)] = next;
    stack.push_back(i);
    while (!stack.empty()) {
      const i64 j = stack.back();
      stack.pop_back();
      int x, y, z;
      decode(dims, j, x, y, z);
      const int nb[6][3] = {{x - 2, y, z}, {x + 2, y, z}, {x, y - 2, z},
                            {x, y + 2, z}, {x, y, z - 2}, {x, y, z + 2}};
      for (const auto& c : nb) {
        if (!dims.in_box(c[0], c[1], c[2])) continue;
        const i64 t = dims.idx(c[0], c[1], c[2]);
        if (!mask[static_cast<std::size_t>(t)] || comp[static_cast<std::size_t>(t)] >= 0) continue;
        comp[static_cast<std::size_t>(t)] = next;
        stack.push_back(t);
      }
    }
    ++next;
  }
  if (component_count) *component_count = next;
  return comp;
}

void pressure_gauge(ScalarField& pi, const GridDomain& dom) {
  check_same_layout(pi, dom, "pressure_gauge");
  const std::vector<u8> m = pressure_mask(dom);
  int nc = 0;
  const std::vector<std::int32_t> comp = parity_components(dom.dims, m, &nc);
  std::vector<double> mean(static_cast<std::size_t>(nc), 0.0);
  std::vector<i64> cnt(static_cast<std::size_t>(nc), 0);
  const i64 n = pi.cells();
  for (i64 i = 0; i < n; ++i) {
    const std::int32_t c = comp[static_cast<std::size_t>(i)];
    if (c >= 0) {
      mean[static_cast<std::size_t>(c)] += pi.at(0, i);
      cnt[static_cast<std::size_t>(c)] += 1;
    }
  }
  for (int c = 0; c < nc; ++c) mean[static_cast<std::size_t>(c)] /= static_cast<double>(cnt[static_cast<std::size_t>(c)]);
  par_for(n, [&](i64 i) {
    const std::int32_t c = comp[static_cast<std::size_t>(i)];
    pi.at(0, i) = c >= 0 ? pi.at(0, i) - mean[static_cast<std::size_t>(c)] : 0.0;
  });
}

ScalarField recover_pressure(const VectorField& u, const TensorField& g, const StressModel& model,
                             const GridDomain& dom, double delta, bool with_convection,
                             const SolverConfig& cfg) {
  check_same_layout(u, dom, "recover_pressure");
  check_same_layout(g, dom, "recover_pressure forcing");
  const TensorField E = sym_gradient(u);
  TensorField SG = stress_field(model, E, delta);
  axpy(-1.0, g, SG);
  VectorField R0 = divergence(SG);
  if (with_convection) {
    const VectorField N = convection(u, u);
    axpy(-1.0, N, R0);
  }
  const std::vector<u8> freem = free_mask(dom);
  apply_mask(R0, freem);
  ScalarField b = divergence(R0);
  scale(b, -1.0);
  auto op = [&](const ScalarField& in, ScalarField& out) {
    VectorField gp = gradient(in);
    apply_mask(gp, freem);
    out = divergence(gp);
    scale(out, -1.0);
  };
  ScalarField x(dom.dims, dom.h);
  pcg(op, b, x, nullptr, std::min(cfg.cg_tol, 1e-12), 4 * cfg.cg_max);
  pressure_gauge(x, dom);
  return x;
}

Bogovski bogovski(const ScalarField& a, const GridDomain& dom, const SolverConfig& cfg) {
  check_same_layout(a, dom, "bogovski");
  Bogovski out(dom.dims, dom.h);
  const double an = l2(a);
  if (an == 0.0) return out;
  const std::vector<u8> presm = pressure_mask(dom);
  double off2 = 0.0, plain = 0.0, abs_sum = 0.0;
  const i64 n = a.cells();
  for (i64 i = 0; i < n; ++i) {
    const double v = a.at(0, i);
    plain += v;
    abs_sum += std::fabs(v);
    if (!presm[static_cast<std::size_t>(i)]) off2 += v * v;
  }
  if (std::sqrt(off2) > 1e-12 * an)
    throw std::invalid_argument("bogovski: source must live on the pressure cells");
  if (std::fabs(plain) > 1e-12 * abs_sum)
    throw std::invalid_argument("bogovski: source must have zero mean");
  ScalarField ap = a;
  pressure_gauge(ap, dom);
  {
    ScalarField diff = a;
    axpy(-1.0, ap, diff);
    out.projection_rel = l2(diff) / an;
  }
  const double apn = std::max(l2(ap), kTiny);
  const std::vector<u8> freem = free_mask(dom);
  ScalarField mu(dom.dims, dom.h);
  VectorField s(dom.dims, dom.h);
  auto op = [&](const VectorField& in, VectorField& o) {
    const TensorField Gs = gradient(in);
    o = divergence(Gs);
    scale(o, -1.0);
    const ScalarField ds = divergence(in);
    const VectorField gds = gradient(ds);
    axpy(-cfg.rho, gds, o);
    apply_mask(o, freem);
  };
  for (int round = 0; round < cfg.max_uzawa; ++round) {
    const TensorField Gv = gradient(out.v);
    VectorField r = divergence(Gv);
    scale(r, -1.0);
    const VectorField gm = gradient(mu);
    axpy(1.0, gm, r);
    ScalarField dres = divergence(out.v);
    axpy(-1.0, ap, dres);
    const VectorField gd = gradient(dres);
    axpy(-cfg.rho, gd, r);
    apply_mask(r, freem);
    scale(r, -1.0);
    out.cg_total += pcg(op, r, s, nullptr, cfg.cg_tol, cfg.cg_max);
    axpy(1.0, s, out.v);
    out.uzawa_rounds = round + 1;
    ScalarField d2 = divergence(out.v);
    axpy(-1.0, ap, d2);
    out.div_rel = l2(d2) / apn;
    if (out.div_rel <= cfg.div_tol) return out;
    axpy(-cfg.rho, d2, mu);
  }
  return out;
}

double bogovski_ratio(const Bogovski& b, const ScalarField& a, const GridDomain& dom, double q) {
  NormSpec ns;
  ns.q = q;
  const double num = norm(b.v, dom, ns) + norm(gradient(b.v), dom, ns);
  const double den = norm(a, dom, ns);
  return den > 0.0 ? num / den : 0.0;
}

TensorField singular_forcing(const GridDomain& dom, const std::array<double, 3>& x0, double a,
                             const Mat3& direction, double amplitude) {
  if (!(a >= 0.0)) throw std::invalid_argument("singular_forcing: negative strength");
  double dn2 = 0.0;
  for (const double v : direction) dn2 += v * v;
  if (!(dn2 > 0.0)) throw std::invalid_argument("singular_forcing: zero direction");
  const double inv = 1.0 / std::sqrt(dn2);
  const Dims d = dom.dims;
  TensorField f(d, dom.h);
  const double h = dom.h;
  const double rmin = 0.5 * h;
  par_for(d.cells(), [&](i64 i) {
    int x, y, z;
    decode(d, i, x, y, z);
    const double dx = (x + 0.5) * h - x0[0];
    const double dy = (y + 0.5) * h - x0[1];
    const double dz = (z + 0.5) * h - x0[2];
    const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double s = amplitude * std::pow(std::max(r, rmin), -a);
    for (int c = 0; c < 9; ++c) f.at(c, i) = s * direction[static_cast<std::size_t>(c)] * inv;
  });
  return f;
}

TensorField approximate_forcing(const TensorField& f, double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("approximate_forcing: negative level");
  TensorField out(f.dims, f.h);
  par_for(f.cells(), [&](i64 i) {
    double m2 = 0.0;
    for (int c = 0; c < 9; ++c) {
      const double v = f.at(c, i);
      m2 += v * v;
    }
    const double m = std::sqrt(m2);
    if (m > k) {
      const double sc = k / m;
      for (int c = 0; c < 9; ++c) out.at(c, i) = sc * f.at(c, i);
    } else {
      for (int c = 0; c < 9; ++c) out.at(c, i) = f.at(c, i);
    }
  });
  return out;
}

ForcingSplit split_forcing(const TensorField& f, double k) {
  if (!(k >= 0.0)) throw std::invalid_argument("split_forcing: negative level");
  ForcingSplit out(f.dims, f.h);
  std::vector<u8> bad(static_cast<std::size_t>(f.cells()), 0);
  par_for(f.cells(), [&](i64 i) {
    double m2 = 0.0;
    for (int c = 0; c < 9; ++c) {
      const double v = f.at(c, i);
      m2 += v * v;
    }
    if (std::sqrt(m2) > k) {
      bad[static_cast<std::size_t>(i)] = 1;
      for (int c = 0; c < 9; ++c) out.bad.at(c, i) = f.at(c, i);
    } else {
      for (int c = 0; c < 9; ++c) out.good.at(c, i) = f.at(c, i);
    }
  });
  for (const u8 b : bad) out.bad_cells += b;
  return out;
}

namespace {
double tail_integral(const TensorField& f, const GridDomain& dom, double q, const ScalarField* w,
                     double k) {
  const Dims d = f.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const double h3 = f.h * f.h * f.h;
  return h3 * det_sum(d.nz, [&](i64 z) {
    double acc = 0.0;
    for (i64 qq = 0; qq < plane; ++qq) {
      const i64 i = z * plane + qq;
      if (!dom.is_interior(i)) continue;
      double m2 = 0.0;
      for (int c = 0; c < 9; ++c) {
        const double v = f.at(c, i);
        m2 += v * v;
      }
      const double m = std::sqrt(m2);
      if (m > k) acc += std::pow(m, q) * (w ? w->at(0, i) : 1.0);
    }
    return acc;
  });
}
}  // namespace

SplitLevel find_split_level(const TensorField& f, const GridDomain& dom, double q,
                            const ScalarField* weight, double beta) {
  check_same_layout(f, dom, "find_split_level");
  if (weight) check_same_layout(*weight, dom, "find_split_level weight");
  if (!(q >= 1.0)) throw std::invalid_argument("find_split_level: q must be at least one");
  if (!(beta >= 0.0)) throw std::invalid_argument("find_split_level: negative target");
  const Dims d = f.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  double kmax = det_max(d.nz, [&](i64 z) {
    double mx = 0.0;
    for (i64 qq = 0; qq < plane; ++qq) {
      const i64 i = z * plane + qq;
      if (!dom.is_interior(i)) continue;
      double m2 = 0.0;
      for (int c = 0; c < 9; ++c) {
        const double v = f.at(c, i);
        m2 += v * v;
      }
      mx = std::max(mx, m2);
    }
    return mx;
  });
  kmax = std::sqrt(std::max(0.0, kmax));
  SplitLevel out;
  const double t0 = tail_integral(f, dom, q, weight, 0.0);
  if (t0 <= beta) {
    out.tail = t0;
    return out;
  }
  double lo = 0.0, hi = kmax;
  out.tail = 0.0;  // tail at kmax: nothing exceeds the largest magnitude
  while (out.steps < 200 && hi - lo > 1e-15 * std::max(1.0, kmax)) {
    const double mid = 0.5 * (lo + hi);
    const double t = tail_integral(f, dom, q, weight, mid);
    if (t <= beta) {
      hi = mid;
      out.tail = t;
    } else {
      lo = mid;
    }
    out.steps += 1;
  }
  out.k = hi;
  return out;
}

double w1p_distance(const VectorField& a, const VectorField& b, const GridDomain& dom, double p) {
  check_same_layout(a, dom, "w1p_distance");
  if (a.dims != b.dims) throw std::invalid_argument("w1p_distance: dims mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("w1p_distance: p must be at least one");
  VectorField diff = a;
  axpy(-1.0, b, diff);
  NormSpec ns;
  ns.q = p;
  return std::pow(power_integral(diff, dom, ns) + power_integral(gradient(diff), dom, ns),
                  1.0 / p);
}

}  // namespace pstokes
