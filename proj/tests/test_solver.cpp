#include <doctest.h>

#include <Eigen/Sparse>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "manufactured.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"
#include "pstokes/solver.hpp"

using namespace pstokes;

namespace {

template <int NC>
double l2f(const Field<NC>& f) {
  return std::sqrt(std::max(0.0, dot(f, f)));
}

TensorField wave_forcing(const Dims& d, double h, double amp) {
  TensorField f(d, h);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double cx = (x + 0.5) * h, cy = (y + 0.5) * h, cz = (z + 0.5) * h;
        const i64 i = d.idx(x, y, z);
        for (int k = 0; k < 9; ++k)
          f.at(k, i) = amp * std::sin(2.0 * M_PI * cx + 0.7 * k) *
                       std::cos(2.0 * M_PI * cy - 0.3 * k) *
                       std::sin(2.0 * M_PI * cz + 0.11 * k * k);
      }
  return f;
}

VectorField random_state(const GridDomain& dom, Rng& rng, double amp) {
  VectorField u(dom.dims, dom.h);
  for (i64 i = 0; i < u.cells(); ++i)
    if (dom.is_free(i))
      for (int c = 0; c < 3; ++c) u.at(c, i) = amp * rng.normal();
  return u;
}

double rel_err_free(const VectorField& a, const VectorField& b, const GridDomain& dom) {
  double num = 0.0, den = 0.0;
  for (i64 i = 0; i < a.cells(); ++i) {
    if (!dom.is_free(i)) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = a.at(c, i) - b.at(c, i);
      num += d * d;
      den += b.at(c, i) * b.at(c, i);
    }
  }
  return std::sqrt(num / den);
}

double rel_err_mask(const ScalarField& a, const ScalarField& b, const std::vector<u8>& mask) {
  double num = 0.0, den = 0.0;
  for (i64 i = 0; i < a.cells(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    const double d = a.at(0, i) - b.at(0, i);
    num += d * d;
    den += b.at(0, i) * b.at(0, i);
  }
  return std::sqrt(num / den);
}

double fitted_slope(const std::vector<double>& logh, const std::vector<double>& loge) {
  const double n = static_cast<double>(logh.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < logh.size(); ++i) {
    sx += logh[i];
    sy += loge[i];
    sxx += logh[i] * logh[i];
    sxy += logh[i] * loge[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("pressure cells split into eight parity classes") {
  const int n = 16;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  const std::vector<u8> mask = pressure_mask(dom);
  i64 cnt = 0;
  for (u8 b : mask) cnt += b;
  CHECK(cnt == 1000 + 600);  // the free block plus one face ring

  int nc = 0;
  const std::vector<std::int32_t> comp = parity_components(dom.dims, mask, &nc);
  CHECK(nc == 8);
  for (i64 i = 0; i < dom.dims.cells(); ++i)
    CHECK((comp[static_cast<std::size_t>(i)] >= 0) == (mask[static_cast<std::size_t>(i)] != 0));

  // fields constant on each class are invisible to the centred gradient
  Rng rng(31);
  double cval[8];
  for (double& v : cval) v = rng.uniform(-2.0, 2.0);
  ScalarField g(dom.dims, dom.h);
  for (i64 i = 0; i < g.cells(); ++i) {
    const std::int32_t c = comp[static_cast<std::size_t>(i)];
    if (c >= 0) g.at(0, i) = cval[c];
  }
  const VectorField gg = gradient(g);
  for (i64 i = 0; i < g.cells(); ++i) {
    if (!dom.is_free(i)) continue;
    for (int c = 0; c < 3; ++c) CHECK(gg.at(c, i) == 0.0);
  }

  pressure_gauge(g, dom);
  std::vector<double> mean(8, 0.0);
  std::vector<i64> cntc(8, 0);
  for (i64 i = 0; i < g.cells(); ++i) {
    const std::int32_t c = comp[static_cast<std::size_t>(i)];
    if (c >= 0) {
      mean[static_cast<std::size_t>(c)] += g.at(0, i);
      cntc[static_cast<std::size_t>(c)] += 1;
    } else {
      CHECK(g.at(0, i) == 0.0);
    }
  }
  for (int c = 0; c < 8; ++c) CHECK(std::fabs(mean[static_cast<std::size_t>(c)] / cntc[static_cast<std::size_t>(c)]) <= 1e-12);
}

TEST_CASE("zero forcing returns the zero state exactly") {
  const int n = 16;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f(dom.dims, dom.h);
  Solution sol = solve_stokes(StressModel::power_law(2.0), f, dom);
  REQUIRE(sol.converged);
  for (double v : sol.u.v) CHECK(v == 0.0);
  for (double v : sol.pi.v) CHECK(v == 0.0);
  CHECK(sol.residual_rel == 0.0);
  CHECK(sol.div_rel == 0.0);
}

TEST_CASE("solver input validation") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.3);
  CHECK_THROWS_AS(solve_stokes(StressModel::user(2.0, [](const Mat3& z) { return z; }), f, dom),
                  std::invalid_argument);
  SolverConfig cfg;
  cfg.deltas.clear();
  CHECK_THROWS_AS(solve_stokes(StressModel::power_law(3.0), f, dom, cfg), std::invalid_argument);
  SolverConfig cfg2;
  cfg2.deltas = {1e-2, 0.0};
  CHECK_THROWS_AS(solve_stokes(StressModel::power_law(1.5), f, dom, cfg2), std::invalid_argument);
  SolverConfig cfg3;
  cfg3.relax = 1.5;
  CHECK_THROWS_AS(solve_stokes(StressModel::power_law(2.0), f, dom, cfg3), std::invalid_argument);
}

TEST_CASE("linear manufactured solution converges at second order") {
  StressModel lin = StressModel::power_law(2.0);
  std::vector<double> logh, logu, logp;
  for (int n : {16, 24, 32}) {
    Manufactured mf(n);
    GridDomain dom = mf.domain();
    TensorField f = mf.forcing_field();
    Solution sol = solve_stokes(lin, f, dom);
    REQUIRE(sol.converged);
    CHECK(sol.residual_rel <= 1e-8);
    CHECK(sol.div_rel <= 1e-9);
    CHECK(sol.delta_used == 0.0);
    CHECK(sol.energy_monotone);
    CHECK(sol.anneal_tail.empty());

    const VectorField ue = mf.velocity_field();
    ScalarField pe = mf.pressure_field();
    pressure_gauge(pe, dom);
    const std::vector<u8> mask = pressure_mask(dom);
    const double eu = rel_err_free(sol.u, ue, dom);
    const double ep = rel_err_mask(sol.pi, pe, mask);
    logh.push_back(std::log(mf.h));
    logu.push_back(std::log(eu));
    logp.push_back(std::log(ep));
    if (n == 32) CHECK(eu <= 0.05);

    if (n == 16) {
      CHECK(weak_residual(lin, sol, f, dom, false) <= 1e-8);
      const ScalarField pr = recover_pressure(sol.u, f, lin, dom, 0.0);
      CHECK(rel_err_mask(pr, sol.pi, mask) <= 1e-6);
    }
  }
  CHECK(fitted_slope(logh, logu) >= 1.7);
  CHECK(fitted_slope(logh, logp) >= 0.7);
}

TEST_CASE("shear thickening solve satisfies the weak form") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.6);
  StressModel m = StressModel::power_law(3.0);
  Solution sol = solve_stokes(m, f, dom);
  REQUIRE(sol.converged);
  CHECK(sol.residual_rel <= 1e-8);
  CHECK(sol.div_rel <= 1e-9);
  CHECK(sol.delta_used == 1e-4);
  CHECK(sol.energy_monotone);
  REQUIRE(sol.energy_history.size() >= 2);
  for (std::size_t i = 1; i < sol.energy_history.size(); ++i)
    CHECK(sol.energy_history[i] <=
          sol.energy_history[i - 1] + 1e-12 * (1.0 + std::fabs(sol.energy_history[i - 1])));
  REQUIRE(sol.anneal_tail.size() == 2);
  CHECK(sol.anneal_tail[0] < 0.1);
  CHECK(sol.anneal_tail[1] <= sol.anneal_tail[0]);
  CHECK(weak_residual(m, sol, f, dom, false) <= 1e-8);

  // pairing the state against random zero-trace fields closes the identity
  // <A(eps u), grad phi> - <pi, div phi> = <f, grad phi>
  const TensorField S = stress_field(m, sym_gradient(sol.u), sol.delta_used);
  Rng rng(404);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorField phi = random_state(dom, rng, 1.0);
    const TensorField gphi = gradient(phi);
    const ScalarField dphi = divergence(phi);
    const double t1 = dot(S, gphi);
    const double t2 = dot(f, gphi);
    const double t3 = dot(sol.pi, dphi);
    const double scale = std::fabs(t1) + std::fabs(t2) + std::fabs(t3) + 1e-30;
    CHECK(std::fabs(t1 - t2 - t3) <= 1e-6 * scale);
  }
}

TEST_CASE("crossover law solve converges in one leg") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.5);
  StressModel m = StressModel::linear_at_infinity(1.0, 2.0, 0.5, 1.6);
  Solution sol = solve_stokes(m, f, dom);
  REQUIRE(sol.converged);
  CHECK(sol.residual_rel <= 1e-8);
  CHECK(sol.delta_used == 0.0);
  CHECK(sol.anneal_tail.empty());
  CHECK(weak_residual(m, sol, f, dom, false) <= 1e-8);
}

TEST_CASE("power law solutions scale with the forcing") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.6);
  StressModel m = StressModel::power_law(3.0);
  const double t = 2.0;

  Solution a = solve_stokes(m, f, dom);
  REQUIRE(a.converged);

  TensorField ft = f;
  scale(ft, t * t);  // t^{p-1} at p = 3
  SolverConfig cfg;
  for (double& d : cfg.deltas) d *= t;
  Solution b = solve_stokes(m, ft, dom, cfg);
  REQUIRE(b.converged);

  VectorField du = b.u;
  axpy(-t, a.u, du);
  CHECK(l2f(du) <= 2e-6 * t * l2f(a.u));
  ScalarField dp = b.pi;
  axpy(-t * t, a.pi, dp);
  CHECK(l2f(dp) <= 1e-5 * t * t * l2f(a.pi));
}

TEST_CASE("convection pairs to zero against its own field") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  Rng rng(77);
  const VectorField w = random_state(dom, rng, 1.3);
  const VectorField u = random_state(dom, rng, 0.9);
  const VectorField v = random_state(dom, rng, 1.1);

  const VectorField N = convection(w, u);
  const double scale_wu = l2f(N) * l2f(u) + 1e-30;
  CHECK(std::fabs(dot(N, u)) <= 1e-12 * scale_wu);

  // bilinearity: the pairing is skew in the transported pair
  const VectorField Nv = convection(w, v);
  const double s = dot(N, v) + dot(Nv, u);
  CHECK(std::fabs(s) <= 1e-12 * (l2f(N) * l2f(v) + l2f(Nv) * l2f(u) + 1e-30));

  // duality route: <div(u x w), v> = -<u x w, grad v>
  TensorField T(dom.dims, dom.h);
  for (i64 i = 0; i < T.cells(); ++i)
    for (int aa = 0; aa < 3; ++aa)
      for (int bb = 0; bb < 3; ++bb) T.at(3 * aa + bb, i) = u.at(aa, i) * w.at(bb, i);
  const double lhs = dot(divergence(T), v);
  const double rhs = -dot(T, gradient(v));
  CHECK(std::fabs(lhs - rhs) <= 1e-12 * (std::fabs(lhs) + std::fabs(rhs) + 1e-30));

  VectorField small(Dims{8, 8, 8}, 1.0 / 8);
  CHECK_THROWS_AS(convection(w, small), std::invalid_argument);
}

TEST_CASE("transport solve matches a monolithic factorization") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.3);
  StressModel lin = StressModel::power_law(2.0);

  SolverConfig cfg;
  cfg.tol = 1e-11;
  cfg.div_tol = 1e-11;
  cfg.relax = 1.0;
  Solution sol = solve_navier_stokes(lin, f, dom, cfg);
  REQUIRE(sol.converged);
  CHECK(sol.picard_total >= 2);
  CHECK(weak_residual(lin, sol, f, dom, true) <= 1e-10);

  // assemble the saddle system with the convection frozen at the converged
  // state and solve it by sparse LU as an independent route
  const Dims d = dom.dims;
  std::vector<int> uidx(static_cast<std::size_t>(d.cells()), -1);
  std::vector<int> pidx(static_cast<std::size_t>(d.cells()), -1);
  std::vector<i64> ucells, pcells;
  const std::vector<u8> pmask = pressure_mask(dom);
  for (i64 i = 0; i < d.cells(); ++i) {
    if (dom.is_free(i)) {
      uidx[static_cast<std::size_t>(i)] = static_cast<int>(ucells.size());
      ucells.push_back(i);
    }
    if (pmask[static_cast<std::size_t>(i)]) {
      pidx[static_cast<std::size_t>(i)] = static_cast<int>(pcells.size());
      pcells.push_back(i);
    }
  }
  const int nu = 3 * static_cast<int>(ucells.size());
  const int np = static_cast<int>(pcells.size());
  std::vector<Eigen::Triplet<double>> trips;

  VectorField e(d, dom.h);
  for (std::size_t j = 0; j < ucells.size(); ++j)
    for (int b = 0; b < 3; ++b) {
      e.at(b, ucells[j]) = 1.0;
      const int col = 3 * static_cast<int>(j) + b;
      const VectorField Ae = [&] {
        VectorField r = divergence(sym_gradient(e));
        scale(r, -1.0);
        return r;
      }();
      const ScalarField Be = divergence(e);
      e.at(b, ucells[j]) = 0.0;
      for (i64 i = 0; i < d.cells(); ++i) {
        if (dom.is_free(i))
          for (int a = 0; a < 3; ++a)
            if (Ae.at(a, i) != 0.0)
              trips.emplace_back(3 * uidx[static_cast<std::size_t>(i)] + a, col, Ae.at(a, i));
        if (pmask[static_cast<std::size_t>(i)] && Be.at(0, i) != 0.0)
          trips.emplace_back(nu + pidx[static_cast<std::size_t>(i)], col, Be.at(0, i));
      }
    }
  ScalarField ep(d, dom.h);
  for (std::size_t m = 0; m < pcells.size(); ++m) {
    ep.at(0, pcells[m]) = 1.0;
    const VectorField gp = gradient(ep);
    ep.at(0, pcells[m]) = 0.0;
    for (i64 i = 0; i < d.cells(); ++i)
      if (dom.is_free(i))
        for (int a = 0; a < 3; ++a)
          if (gp.at(a, i) != 0.0)
            trips.emplace_back(3 * uidx[static_cast<std::size_t>(i)] + a,
                               nu + static_cast<int>(m), gp.at(a, i));
    trips.emplace_back(nu + static_cast<int>(m), nu + static_cast<int>(m), -1e-12);
  }

  Eigen::SparseMatrix<double> K(nu + np, nu + np);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(K);
  REQUIRE(lu.info() == Eigen::Success);

  VectorField rhs = divergence(f);
  scale(rhs, -1.0);
  const VectorField Nw = convection(sol.u, sol.u);
  axpy(-1.0, Nw, rhs);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nu + np);
  for (std::size_t j = 0; j < ucells.size(); ++j)
    for (int a = 0; a < 3; ++a) b[3 * static_cast<int>(j) + a] = rhs.at(a, ucells[j]);
  const Eigen::VectorXd x = lu.solve(b);
  REQUIRE(lu.info() == Eigen::Success);

  VectorField uo(d, dom.h);
  ScalarField po(d, dom.h);
  for (std::size_t j = 0; j < ucells.size(); ++j)
    for (int a = 0; a < 3; ++a) uo.at(a, ucells[j]) = x[3 * static_cast<int>(j) + a];
  for (std::size_t m = 0; m < pcells.size(); ++m) po.at(0, pcells[m]) = x[nu + static_cast<int>(m)];
  pressure_gauge(po, dom);

  CHECK(rel_err_free(sol.u, uo, dom) <= 1e-6);
  CHECK(rel_err_mask(sol.pi, po, pmask) <= 1e-5);

  const ScalarField pr = recover_pressure(sol.u, f, lin, dom, 0.0, true);
  CHECK(rel_err_mask(pr, sol.pi, pmask) <= 1e-5);
}

TEST_CASE("runaway transport is reported, not thrown") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 800.0);
  SolverConfig cfg;
  cfg.relax = 1.0;
  cfg.max_picard = 6;
  Solution sol = solve_navier_stokes(StressModel::power_law(2.0), f, dom, cfg);
  CHECK(!sol.converged);
  CHECK(sol.message.find("picard") != std::string::npos);
}

TEST_CASE("divergence right inverse hits parity-compatible sources") {
  SolverConfig cfg;
  std::vector<double> ratios15, ratios2, ratios3;
  struct Setup {
    int n, margin;
    std::array<int, 3> plus, minus;
  };
  for (const Setup& st : {Setup{16, 2, {6, 8, 8}, {10, 8, 8}}, Setup{24, 3, {9, 12, 12}, {15, 12, 12}}}) {
    GridDomain dom = GridDomain::box({st.n, st.n, st.n}, 1.0 / st.n, st.margin);
    ScalarField a(dom.dims, dom.h);
    a.at(0, dom.dims.idx(st.plus[0], st.plus[1], st.plus[2])) = 1.0;
    a.at(0, dom.dims.idx(st.minus[0], st.minus[1], st.minus[2])) = -1.0;
    Bogovski bg = bogovski(a, dom, cfg);
    CHECK(bg.projection_rel <= 1e-12);
    CHECK(bg.div_rel <= 1e-10);
    for (i64 i = 0; i < bg.v.cells(); ++i)
      if (!dom.is_free(i))
        for (int c = 0; c < 3; ++c) CHECK(bg.v.at(c, i) == 0.0);
    ratios15.push_back(bogovski_ratio(bg, a, dom, 1.5));
    ratios2.push_back(bogovski_ratio(bg, a, dom, 2.0));
    ratios3.push_back(bogovski_ratio(bg, a, dom, 3.0));
  }
  for (const std::vector<double>* r : {&ratios15, &ratios2, &ratios3}) {
    CHECK((*r)[0] > 0.0);
    const double hi = std::max((*r)[0], (*r)[1]);
    const double lo = std::min((*r)[0], (*r)[1]);
    CHECK(hi / lo <= 4.0);
  }

  GridDomain dom = GridDomain::box({16, 16, 16}, 1.0 / 16, 2);
  ScalarField bad(dom.dims, dom.h);
  bad.at(0, dom.dims.idx(8, 8, 8)) = 1.0;
  CHECK_THROWS_AS(bogovski(bad, dom, cfg), std::invalid_argument);
  ScalarField off(dom.dims, dom.h);
  off.at(0, dom.dims.idx(0, 0, 0)) = 1.0;
  off.at(0, dom.dims.idx(2, 0, 0)) = -1.0;
  CHECK_THROWS_AS(bogovski(off, dom, cfg), std::invalid_argument);
}

TEST_CASE("forcing levels clamp, split, and bisect") {
  const int n = 16;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  Rng rng(555);
  TensorField f(dom.dims, dom.h);
  for (i64 i = 0; i < f.cells(); ++i)
    for (int c = 0; c < 9; ++c) f.at(c, i) = rng.normal() * std::exp(rng.uniform(0.0, 3.0));

  double kmax = 0.0, kmax_int = 0.0;
  for (i64 i = 0; i < f.cells(); ++i) {
    double m2 = 0.0;
    for (int c = 0; c < 9; ++c) m2 += f.at(c, i) * f.at(c, i);
    kmax = std::max(kmax, std::sqrt(m2));
    if (dom.is_interior(i)) kmax_int = std::max(kmax_int, std::sqrt(m2));
  }

  const TensorField full = approximate_forcing(f, kmax);
  for (i64 i = 0; i < f.cells(); ++i)
    for (int c = 0; c < 9; ++c) CHECK(full.at(c, i) == f.at(c, i));
  const TensorField g1 = approximate_forcing(f, 0.25 * kmax);
  const TensorField g2 = approximate_forcing(f, 0.5 * kmax);
  for (i64 i = 0; i < f.cells(); ++i) {
    double m1 = 0.0, m2 = 0.0;
    for (int c = 0; c < 9; ++c) {
      m1 += g1.at(c, i) * g1.at(c, i);
      m2 += g2.at(c, i) * g2.at(c, i);
    }
    CHECK(std::sqrt(m1) <= 0.25 * kmax * (1.0 + 1e-12));
    CHECK(m1 <= m2 * (1.0 + 1e-12) + 1e-300);
  }

  const ForcingSplit sp = split_forcing(f, 0.5 * kmax);
  i64 bad = 0;
  for (i64 i = 0; i < f.cells(); ++i) {
    double mg = 0.0, mb = 0.0;
    for (int c = 0; c < 9; ++c) {
      CHECK(sp.good.at(c, i) + sp.bad.at(c, i) == f.at(c, i));
      CHECK((sp.good.at(c, i) == 0.0 || sp.bad.at(c, i) == 0.0));
      mg += sp.good.at(c, i) * sp.good.at(c, i);
      mb += sp.bad.at(c, i) * sp.bad.at(c, i);
    }
    if (mb > 0.0) ++bad;
    CHECK(std::sqrt(mg) <= 0.5 * kmax);
  }
  CHECK(sp.bad_cells == bad);

  NormSpec q2;
  q2.q = 2.0;
  const double total = power_integral(f, dom, q2);
  SplitLevel lv = find_split_level(f, dom, 2.0, nullptr, 0.5 * total);
  CHECK(lv.k > 0.0);
  CHECK(lv.k < kmax);
  CHECK(lv.tail <= 0.5 * total);
  CHECK(lv.steps <= 200);
  SplitLevel all = find_split_level(f, dom, 2.0, nullptr, 2.0 * total);
  CHECK(all.k == 0.0);
  SplitLevel none = find_split_level(f, dom, 2.0, nullptr, 0.0);
  CHECK(none.tail == 0.0);
  CHECK(none.k <= kmax_int * (1.0 + 1e-12));
  CHECK(none.k >= kmax_int * (1.0 - 1e-9));
  CHECK_THROWS_AS(find_split_level(f, dom, 0.5, nullptr, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(find_split_level(f, dom, 2.0, nullptr, -1.0), std::invalid_argument);
}

TEST_CASE("thread count does not change the solution") {
  const int n = 12;
  GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, 2);
  TensorField f = wave_forcing(dom.dims, dom.h, 0.6);
  StressModel m = StressModel::power_law(3.0);
  const int before = thread_count();
  set_threads(1);
  Solution s1 = solve_stokes(m, f, dom);
  set_threads(4);
  Solution s4 = solve_stokes(m, f, dom);
  set_threads(before);
  REQUIRE(s1.converged);
  REQUIRE(s4.converged);
  CHECK(s1.u.v == s4.u.v);
  CHECK(s1.pi.v == s4.pi.v);
}
