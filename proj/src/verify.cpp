#include "pstokes/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>

#include "pstokes/maxweight.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"

namespace pstokes {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

NormSpec plain(double q) { return NormSpec{q, nullptr, NormSpec::Region::domain}; }
NormSpec with(double q, const ScalarField& w) { return NormSpec{q, &w, NormSpec::Region::domain}; }

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void validate_pq(double p, double q, const char* who) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument(std::string(who) + ": the growth exponent must exceed one");
  const double pp = p / (p - 1.0);
  if (!(q > 1.0) || !(q <= pp + 1e-12))
    throw std::invalid_argument(std::string(who) + ": q must lie in (1, p']");
}

// |f| on the domain, shifted up by one everywhere; the argument fed to the
// maximal operator when building the forcing weights
ScalarField shifted_magnitude(const TensorField& f, const GridDomain& dom) {
  ScalarField s = magnitude(f);
  par_for(s.cells(), [&](i64 i) {
    const std::size_t k = static_cast<std::size_t>(i);
    s.v[k] = (dom.is_interior(i) ? s.v[k] : 0.0) + 1.0;
  });
  return s;
}

ScalarField pow_field(const ScalarField& a, double e) {
  ScalarField r(a.dims, a.h);
  par_for(a.cells(), [&](i64 i) {
    const std::size_t k = static_cast<std::size_t>(i);
    r.v[k] = std::pow(a.v[k], e);
  });
  return r;
}

double min_over_box(const ScalarField& a) {
  double m = std::numeric_limits<double>::infinity();
  for (const double x : a.v) m = std::min(m, x);
  return m;
}

double ratio_or_one(double lhs, double rhs) {
  if (rhs == 0.0 && lhs == 0.0) return 1.0;
  return lhs / rhs;
}

void decode(const Dims& d, i64 i, int& x, int& y, int& z) {
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  z = static_cast<int>(i / plane);
  const i64 r = i % plane;
  y = static_cast<int>(r / d.nx);
  x = static_cast<int>(r % d.nx);
}

template <int NC>
void smooth_pass(Field<NC>& f) {
  const Field<NC> old = f;
  const Dims d = f.dims;
  par_for(f.cells(), [&](i64 i) {
    int x, y, z;
    decode(d, i, x, y, z);
    const i64 plane = static_cast<i64>(d.nx) * d.ny;
    for (int c = 0; c < NC; ++c) {
      double s = old.at(c, i);
      if (x > 0) s += old.at(c, i - 1);
      if (x + 1 < d.nx) s += old.at(c, i + 1);
      if (y > 0) s += old.at(c, i - d.nx);
      if (y + 1 < d.ny) s += old.at(c, i + d.nx);
      if (z > 0) s += old.at(c, i - plane);
      if (z + 1 < d.nz) s += old.at(c, i + plane);
      f.at(c, i) = s / 7.0;
    }
  });
}

std::vector<u8> zero_trace_mask(const GridDomain& dom) {
  std::vector<u8> m(static_cast<std::size_t>(dom.dims.cells()), 0);
  par_for(dom.dims.cells(), [&](i64 i) {
    m[static_cast<std::size_t>(i)] = (dom.is_interior(i) && !dom.is_layer(i)) ? 1 : 0;
  });
  return m;
}

template <int NC>
void apply_mask(Field<NC>& f, const std::vector<u8>& m) {
  par_for(f.cells(), [&](i64 i) {
    if (!m[static_cast<std::size_t>(i)])
      for (int c = 0; c < NC; ++c) f.at(c, i) = 0.0;
  });
}

// graph distance (in cells) to the nearest cell outside the zero-trace set
std::vector<int> wall_distance(const GridDomain& dom, const std::vector<u8>& freem) {
  const i64 n = dom.dims.cells();
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::vector<i64> queue;
  queue.reserve(static_cast<std::size_t>(n));
  for (i64 i = 0; i < n; ++i)
    if (!freem[static_cast<std::size_t>(i)]) {
      dist[static_cast<std::size_t>(i)] = 0;
      queue.push_back(i);
    }
  const Dims d = dom.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  std::size_t head = 0;
  while (head < queue.size()) {
    const i64 i = queue[head++];
    const int di = dist[static_cast<std::size_t>(i)];
    int x, y, z;
    decode(d, i, x, y, z);
    const i64 nb[6] = {x > 0 ? i - 1 : -1,          x + 1 < d.nx ? i + 1 : -1,
                       y > 0 ? i - d.nx : -1,       y + 1 < d.ny ? i + d.nx : -1,
                       z > 0 ? i - plane : -1,      z + 1 < d.nz ? i + plane : -1};
    for (const i64 j : nb)
      if (j >= 0 && dist[static_cast<std::size_t>(j)] < 0) {
        dist[static_cast<std::size_t>(j)] = di + 1;
        queue.push_back(j);
      }
  }
  return dist;
}

double quintic_step(double t) {
  t = std::min(1.0, std::max(0.0, t));
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

double conjugate_exponent(double p) {
  if (!(p > 1.0)) throw std::invalid_argument("conjugate exponent: p must exceed one");
  return p / (p - 1.0);
}

EstimateReport verify_mt1(const Solution& sol, const TensorField& f, const GridDomain& dom,
                          double p, double q) {
  check_same_layout(f, dom, "verify_mt1");
  validate_pq(p, q, "mt1");
  const double pp = conjugate_exponent(p);
  EstimateReport rep;
  rep.id = "mt1";
  rep.p = p;
  rep.q = q;
  rep.eps = pp - q;
  rep.h = dom.h;
  const TensorField gu = gradient(sol.u);
  const double gterm = power_integral(gu, dom, plain(q * (p - 1.0)));
  const double piterm = power_integral(sol.pi, dom, plain(q));
  rep.lhs = gterm + piterm;
  rep.rhs = power_integral(f, dom, plain(q)) + 1.0;
  rep.ratio = rep.lhs / rep.rhs;
  rep.extra = {{"grad_term", gterm}, {"pressure_term", piterm}};
  return rep;
}

EstimateReport verify_mt2(const Solution& sol, const TensorField& f, const GridDomain& dom,
                          double p, double q) {
  check_same_layout(f, dom, "verify_mt2");
  validate_pq(p, q, "mt2");
  const double pp = conjugate_exponent(p);
  EstimateReport rep;
  rep.id = "mt2";
  rep.p = p;
  rep.q = q;
  rep.eps = pp - q;
  rep.h = dom.h;
  const ScalarField m = maximal(shifted_magnitude(f, dom));
  const ScalarField omega = pow_field(m, q - pp);
  const ScalarField omegad = pow_field(m, (pp - q) / (p - 1.0));
  const TensorField gu = gradient(sol.u);
  const double gterm = power_integral(gu, dom, with(p, omega));
  const double piterm = power_integral(sol.pi, dom, with(p, omegad));
  rep.lhs = gterm + piterm;
  rep.rhs = power_integral(f, dom, plain(q)) + 1.0;
  rep.ratio = rep.lhs / rep.rhs;
  const double bridge_lhs = power_integral(gu, dom, plain(q * (p - 1.0)));
  const double bridge_rhs = gterm + power_integral(m, dom, plain(q));
  rep.extra = {{"grad_term", gterm},
               {"pressure_term", piterm},
               {"bridge_lhs", bridge_lhs},
               {"bridge_rhs", bridge_rhs},
               {"bridge_ratio", ratio_or_one(bridge_lhs, bridge_rhs)}};
  return rep;
}

double alpha(double s, double p) {
  if (!(p > 2.0)) throw std::invalid_argument("alpha: defined for p > 2");
  if (!(s >= 0.0)) throw std::invalid_argument("alpha: s must be nonnegative");
  if (p <= 3.0) return s * 2.0 / (p - 2.0);
  return std::max(s * p / (p - 2.0), (p - 3.0) / (p - 2.0));
}

EstimateReport verify_ns_estimate(const Solution& sol, const TensorField& f, const GridDomain& dom,
                                  const StressModel& model, double q) {
  check_same_layout(f, dom, "verify_ns_estimate");
  if (model.kind == StressModel::Kind::user_map)
    throw std::invalid_argument("ns estimate: a user stress map carries no growth exponent");
  const bool crossover = model.kind == StressModel::Kind::linear_at_infinity;
  const double p = crossover ? 2.0 : model.p;
  if (!crossover && !(p > 2.0))
    throw std::invalid_argument("ns estimate: the power-law branch needs p > 2");
  validate_pq(p, q, "ns estimate");
  const double pp = conjugate_exponent(p);
  EstimateReport rep;
  rep.id = crossover ? "ns-2" : "ns-p";
  rep.p = p;
  rep.q = q;
  rep.eps = pp - q;
  rep.h = dom.h;
  const ScalarField m = maximal(shifted_magnitude(f, dom));
  const ScalarField omega = pow_field(m, q - pp);
  const TensorField gu = gradient(sol.u);
  const double piq = power_integral(sol.pi, dom, plain(q));
  const double pip = power_integral(sol.pi, dom, plain(p));
  const double gq = power_integral(gu, dom, plain(q * (p - 1.0)));
  const double gw = power_integral(gu, dom, with(p, omega));
  rep.lhs = piq + pip + gq + gw;
  rep.extra = {{"pressure_q", piq}, {"pressure_p", pip}, {"grad_q", gq}, {"grad_weighted", gw}};
  if (crossover) {
    rep.rhs = 1.0;
    rep.ratio = rep.lhs;
  } else {
    const double base = power_integral(f, dom, plain(q)) + 1.0;
    const double expo = 1.0 / (p - 2.0) + alpha((pp - q) / q, p);
    rep.rhs = std::pow(base, expo);
    rep.ratio = rep.lhs / rep.rhs;
    rep.extra.push_back({"base", base});
    rep.extra.push_back({"exponent", expo});
  }
  return rep;
}

EstimateReport layer_cake_identity(const VectorField& u, const ScalarField& g,
                                   const GridDomain& dom, double p, double eps,
                                   int lambda_nodes) {
  check_same_layout(u, dom, "layer_cake_identity");
  check_same_layout(g, dom, "layer_cake_identity");
  if (!(eps > 0.0)) throw std::invalid_argument("layer cake: the exponent must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("layer cake: the power must be at least one");
  if (lambda_nodes < 2) throw std::invalid_argument("layer cake: need at least two lambda nodes");
  if (!(min_over_box(g) > 0.0))
    throw std::invalid_argument("layer cake: g must be bounded below by a positive constant");

  const ScalarField M = maximal(g);
  const ScalarField amag = magnitude(sym_gradient(u));
  const double w = dom.h * dom.h * dom.h;

  std::vector<std::pair<double, double>> pts;
  pts.reserve(static_cast<std::size_t>(dom.dims.cells()));
  for (i64 i = 0; i < dom.dims.cells(); ++i)
    if (dom.is_interior(i))
      pts.push_back({M.v[static_cast<std::size_t>(i)],
                     std::pow(amag.v[static_cast<std::size_t>(i)], p) * w});
  if (pts.empty()) throw std::invalid_argument("layer cake: the domain has no interior cells");
  std::sort(pts.begin(), pts.end());

  std::vector<double> vals, mass;
  vals.reserve(pts.size());
  mass.reserve(pts.size());
  for (const auto& pt : pts) {
    if (!vals.empty() && vals.back() == pt.first)
      mass.back() += pt.second;
    else {
      vals.push_back(pt.first);
      mass.push_back(pt.second);
    }
  }

  double direct = 0.0, total = 0.0;
  for (std::size_t j = 0; j < vals.size(); ++j) {
    direct += mass[j] * std::pow(vals[j], -eps);
    total += mass[j];
  }
  direct /= eps;

  const double lo = vals.front() * 1e-2;
  const double hi = vals.back() * 1e2;
  std::vector<double> lam(static_cast<std::size_t>(lambda_nodes));
  for (int k = 0; k < lambda_nodes; ++k)
    lam[static_cast<std::size_t>(k)] = lo * std::pow(hi / lo, double(k) / double(lambda_nodes - 1));

  // union of the ladder and the distribution breakpoints; the distribution
  // function is constant between consecutive union nodes, so each segment of
  // lambda^{-1-eps} F(lambda) integrates in closed form
  std::vector<double> xs;
  xs.reserve(lam.size() + vals.size());
  std::merge(lam.begin(), lam.end(), vals.begin(), vals.end(), std::back_inserter(xs));
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  double route_a = 0.0, cum = 0.0;
  std::size_t jv = 0;
  for (std::size_t mth = 0; mth < xs.size(); ++mth) {
    const double x = xs[mth];
    while (jv < vals.size() && vals[jv] <= x) cum += mass[jv++];
    if (mth + 1 < xs.size())
      route_a += cum * (std::pow(x, -eps) - std::pow(xs[mth + 1], -eps)) / eps;
    else
      route_a += cum * std::pow(x, -eps) / eps;
  }

  EstimateReport rep;
  rep.id = "layer-cake";
  rep.p = p;
  rep.q = 0.0;
  rep.eps = eps;
  rep.h = dom.h;
  rep.lhs = route_a;
  rep.rhs = direct;
  rep.ratio = ratio_or_one(route_a, direct);
  rep.ladder.resize(lam.size());
  std::size_t jf = 0;
  double cf = 0.0;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    while (jf < vals.size() && vals[jf] <= lam[k]) cf += mass[jf++];
    rep.ladder[k] = cf;
  }
  rep.extra = {{"lambda_min", lo},
               {"lambda_max", hi},
               {"nodes", double(lambda_nodes)},
               {"breakpoints", double(vals.size())},
               {"strain_total", total}};
  return rep;
}

double korn_constant(const GridDomain& dom, double p, const ScalarField* weight, int samples,
                     std::uint64_t seed) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("korn: the exponent must lie in (1, inf)");
  if (weight) {
    check_same_layout(*weight, dom, "korn_constant");
    if (!(min_over_box(*weight) > 0.0))
      throw std::invalid_argument("korn: the weight must be positive");
  }
  const std::vector<u8> freem = zero_trace_mask(dom);
  i64 nfree = 0;
  for (const u8 b : freem) nfree += b;
  if (nfree == 0) throw std::invalid_argument("korn: no zero-trace cells");

  const NormSpec spec{p, weight, NormSpec::Region::domain};
  const auto grad_ratio = [&](const VectorField& v) {
    const double den = norm(sym_gradient(v), dom, spec);
    if (!(den > 0.0)) return 0.0;
    return norm(gradient(v), dom, spec) / den;
  };

  double best = 0.0;
  Rng rng(seed);

  for (int t = 0; t < 4; ++t) {
    ScalarField phi(dom.dims, dom.h);
    for (double& x : phi.v) x = rng.normal();
    for (int s = 0; s < 3; ++s) smooth_pass(phi);
    best = std::max(best, grad_ratio(gradient(phi)));
  }

  for (int s = 0; s < samples; ++s) {
    VectorField v(dom.dims, dom.h);
    for (i64 i = 0; i < dom.dims.cells(); ++i)
      if (freem[static_cast<std::size_t>(i)])
        for (int c = 0; c < 3; ++c) v.at(c, i) = rng.normal();
    const int passes = s % 4;
    for (int t = 0; t < passes; ++t) {
      smooth_pass(v);
      apply_mask(v, freem);
    }
    best = std::max(best, grad_ratio(v));
  }

  const std::vector<int> dist = wall_distance(dom, freem);
  int maxd = 0;
  for (const int d : dist) maxd = std::max(maxd, d);
  if (maxd > 0) {
    const double taper = std::max(2.0, 0.5 * maxd);
    const Dims d = dom.dims;
    const std::array<double, 3> c = {0.5 * d.nx * dom.h, 0.5 * d.ny * dom.h, 0.5 * d.nz * dom.h};
    for (int axis = 0; axis < 3; ++axis) {
      VectorField v(dom.dims, dom.h);
      par_for(dom.dims.cells(), [&](i64 i) {
        if (!freem[static_cast<std::size_t>(i)]) return;
        int x, y, z;
        decode(d, i, x, y, z);
        const std::array<double, 3> xc = dom.center(x, y, z);
        const double r[3] = {xc[0] - c[0], xc[1] - c[1], xc[2] - c[2]};
        double a[3] = {0.0, 0.0, 0.0};
        a[axis] = 1.0;
        const double win = quintic_step(dist[static_cast<std::size_t>(i)] / taper);
        v.at(0, i) = win * (a[1] * r[2] - a[2] * r[1]);
        v.at(1, i) = win * (a[2] * r[0] - a[0] * r[2]);
        v.at(2, i) = win * (a[0] * r[1] - a[1] * r[0]);
      });
      best = std::max(best, grad_ratio(v));
    }
  }
  return best;
}

EstimateReport embedding_check(const VectorField& u, const GridDomain& dom, double p,
                               const ScalarField& omega, double q) {
  check_same_layout(u, dom, "embedding_check");
  check_same_layout(omega, dom, "embedding_check");
  if (!(p > 1.0) || !(p < 3.0))
    throw std::invalid_argument("embedding: the Sobolev branch needs p in (1, 3)");
  validate_pq(p, q, "embedding");
  if (!(min_over_box(omega) > 0.0))
    throw std::invalid_argument("embedding: the weight must be positive");
  const double pp = conjugate_exponent(p);
  const double ps = 3.0 * p / (3.0 - p);

  EstimateReport rep;
  rep.id = "embedding";
  rep.p = p;
  rep.q = q;
  rep.eps = pp - q;
  rep.h = dom.h;

  const ScalarField wpow = pow_field(omega, (3.0 - p) / 3.0);
  const TensorField gu = gradient(u);
  rep.lhs = std::pow(power_integral(u, dom, with(ps, omega)), 1.0 / ps);
  rep.rhs = std::pow(power_integral(gu, dom, with(p, wpow)), 1.0 / p);
  rep.ratio = ratio_or_one(rep.lhs, rep.rhs);

  double mean[3] = {0.0, 0.0, 0.0};
  i64 count = 0;
  for (i64 i = 0; i < dom.dims.cells(); ++i)
    if (dom.is_interior(i)) {
      ++count;
      for (int c = 0; c < 3; ++c) mean[c] += u.at(c, i);
    }
  for (int c = 0; c < 3; ++c) mean[c] /= double(count);
  VectorField centered = u;
  par_for(dom.dims.cells(), [&](i64 i) {
    for (int c = 0; c < 3; ++c) centered.at(c, i) -= mean[c];
  });
  const double plhs = std::pow(power_integral(centered, dom, with(p, omega)), 1.0 / p);
  const double prhs = std::pow(power_integral(gu, dom, with(p, omega)), 1.0 / p);

  const double ap_class = ps / pp + 1.0;
  const double ap_omega = ap_constant(omega, ap_class);
  const double a_solve = (pp - q) * (3.0 - p) / 3.0 * pp / ps;
  const double a_quoted = (pp - q) / (pp - 1.0);
  rep.extra = {{"poincare_lhs", plhs},
               {"poincare_rhs", prhs},
               {"poincare_ratio", ratio_or_one(plhs, prhs)},
               {"ap_class", ap_class},
               {"ap_omega", ap_omega},
               {"alpha_admissible", a_solve},
               {"alpha_quoted", a_quoted},
               {"alpha_in_range", (a_solve > 0.0 && a_solve < 1.0) ? 1.0 : 0.0}};
  return rep;
}

ScanTable scan_epsilon0(const StressModel& model, const GridDomain& dom, const TensorField& f,
                        const std::vector<double>& k_levels, const std::vector<double>& q_grid,
                        const SolverConfig& cfg, bool with_convection) {
  check_same_layout(f, dom, "scan_epsilon0");
  if (model.kind == StressModel::Kind::user_map)
    throw std::invalid_argument("scan: a user stress map carries no estimate");
  const double p = model.kind == StressModel::Kind::linear_at_infinity ? 2.0 : model.p;
  const double pp = conjugate_exponent(p);
  if (q_grid.empty()) throw std::invalid_argument("scan: empty q grid");
  for (const double q : q_grid)
    if (!(q > 1.0) || !(q <= pp + 1e-12))
      throw std::invalid_argument("scan: every q must lie in (1, p']");
  if (k_levels.empty()) throw std::invalid_argument("scan: empty level ladder");
  for (const double k : k_levels)
    if (!(k > 0.0)) throw std::invalid_argument("scan: levels must be positive");

  ScanTable table;
  table.p = p;
  table.eps0 = 0.0;
  for (const double q : q_grid) {
    ScanRow row;
    row.q = q;
    row.gap = pp - q;
    for (const double k : k_levels) {
      const TensorField fk = approximate_forcing(f, k);
      const Solution sol = with_convection ? solve_navier_stokes(model, fk, dom, cfg)
                                           : solve_stokes(model, fk, dom, cfg);
      double r = kNan;
      if (!sol.converged)
        row.note += "level " + fmt6(k) + " failed; ";
      else
        r = with_convection ? verify_ns_estimate(sol, fk, dom, model, q).ratio
                            : verify_mt1(sol, fk, dom, p, q).ratio;
      row.ratios.push_back(r);
    }
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    bool all_finite = true;
    for (const double r : row.ratios) {
      if (!std::isfinite(r)) {
        all_finite = false;
        continue;
      }
      mn = std::min(mn, r);
      mx = std::max(mx, r);
    }
    row.spread = (mn < std::numeric_limits<double>::infinity() && mn > 0.0) ? mx / mn : 0.0;
    row.stable = all_finite && row.spread > 0.0 && row.spread <= 2.0;
    if (row.stable) table.eps0 = std::max(table.eps0, row.gap);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt17(v[i]);
  }
  return out;
}

std::string join_extra(const std::vector<std::pair<std::string, double>>& kv) {
  std::string out;
  for (std::size_t i = 0; i < kv.size(); ++i) {
    if (i) out += ';';
    out += kv[i].first + "=" + fmt17(kv[i].second);
  }
  return out;
}

std::string json_number(double x) {
  if (!std::isfinite(x)) return "null";
  return fmt17(x);
}

}  // namespace

std::string reports_csv(const std::vector<EstimateReport>& reports) {
  std::string out = "id,p,q,eps,h,forcing_a,lhs,rhs,ratio,ladder,extra\n";
  for (const EstimateReport& r : reports) {
    out += r.id;
    out += ',' + fmt17(r.p) + ',' + fmt17(r.q) + ',' + fmt17(r.eps) + ',' + fmt17(r.h);
    out += ',' + fmt17(r.forcing_a) + ',' + fmt17(r.lhs) + ',' + fmt17(r.rhs) + ',' + fmt17(r.ratio);
    out += ',' + join_values(r.ladder) + ',' + join_extra(r.extra) + '\n';
  }
  return out;
}

std::string reports_json(const std::vector<EstimateReport>& reports) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const EstimateReport& r = reports[i];
    out += "  {\"id\": \"" + r.id + "\"";
    out += ", \"p\": " + json_number(r.p);
    out += ", \"q\": " + json_number(r.q);
    out += ", \"eps\": " + json_number(r.eps);
    out += ", \"h\": " + json_number(r.h);
    out += ", \"forcing_a\": " + json_number(r.forcing_a);
    out += ", \"lhs\": " + json_number(r.lhs);
    out += ", \"rhs\": " + json_number(r.rhs);
    out += ", \"ratio\": " + json_number(r.ratio);
    out += ", \"ladder\": [";
    for (std::size_t k = 0; k < r.ladder.size(); ++k) {
      if (k) out += ", ";
      out += json_number(r.ladder[k]);
    }
    out += "], \"extra\": {";
    for (std::size_t k = 0; k < r.extra.size(); ++k) {
      if (k) out += ", ";
      out += "\"" + r.extra[k].first + "\": " + json_number(r.extra[k].second);
    }
    out += "}}";
    out += (i + 1 < reports.size()) ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

std::string scan_csv(const ScanTable& table) {
  std::string out = "q,gap,stable,spread,ratios,note\n";
  for (const ScanRow& row : table.rows) {
    out += fmt17(row.q) + ',' + fmt17(row.gap) + ',';
    out += row.stable ? '1' : '0';
    out += ',' + fmt17(row.spread) + ',' + join_values(row.ratios) + ',' + row.note + '\n';
  }
  return out;
}

}  // namespace pstokes
