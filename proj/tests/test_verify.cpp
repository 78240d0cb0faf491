#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pstokes/field.hpp"
#include "pstokes/maxweight.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/rng.hpp"
#include "pstokes/solver.hpp"
#include "pstokes/stress.hpp"
#include "pstokes/verify.hpp"

using namespace pstokes;

namespace {

constexpr double kPi = 3.14159265358979323846;

TensorField wave_forcing(const GridDomain& dom, double amp) {
  TensorField f(dom.dims, dom.h);
  const Dims d = dom.dims;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const i64 i = d.idx(x, y, z);
        if (!dom.is_interior(i)) continue;
        const std::array<double, 3> c = dom.center(x, y, z);
        for (int k = 0; k < 9; ++k)
          f.at(k, i) = amp * std::sin(2.0 * kPi * c[0] * (1 + k % 3)) *
                       std::cos(2.0 * kPi * c[1] * (1 + (k / 3) % 3)) *
                       std::sin(2.0 * kPi * c[2] + 0.3 * k);
      }
  return f;
}

template <int NC>
void blur(Field<NC>& f) {
  const Field<NC> old = f;
  const Dims d = f.dims;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const i64 i = d.idx(x, y, z);
        for (int c = 0; c < NC; ++c) {
          double s = old.at(c, i);
          if (x > 0) s += old.at(c, i - 1);
          if (x + 1 < d.nx) s += old.at(c, i + 1);
          if (y > 0) s += old.at(c, i - d.nx);
          if (y + 1 < d.ny) s += old.at(c, i + d.nx);
          if (z > 0) s += old.at(c, d.idx(x, y, z - 1));
          if (z + 1 < d.nz) s += old.at(c, d.idx(x, y, z + 1));
          f.at(c, i) = s / 7.0;
        }
      }
}

VectorField smooth_random(const GridDomain& dom, std::uint64_t seed, int passes) {
  Rng rng(seed);
  VectorField u(dom.dims, dom.h);
  for (i64 i = 0; i < dom.dims.cells(); ++i)
    if (dom.is_free(i))
      for (int c = 0; c < 3; ++c) u.at(c, i) = rng.normal();
  for (int t = 0; t < passes; ++t) {
    blur(u);
    enforce_zero_trace(u, dom);
  }
  return u;
}

double extra_of(const EstimateReport& rep, const std::string& key) {
  for (const auto& kv : rep.extra)
    if (kv.first == key) return kv.second;
  FAIL("missing extra ", key);
  return 0.0;
}

// off-diagonal pull: an identity-like direction would make div f a pure
// gradient, absorbed by the pressure with no velocity response at all
Mat3 offdiag_direction() {
  Mat3 d{};
  d[1] = 1.0;
  return d;
}

struct SolvedCase {
  GridDomain dom;
  TensorField f;
  StressModel model;
  Solution sol;
};

const SolvedCase& thick3() {
  static SolvedCase c = [] {
    GridDomain dom = GridDomain::box({12, 12, 12}, 1.0 / 12, 2);
    TensorField f = wave_forcing(dom, 0.6);
    StressModel m = StressModel::power_law(3.0);
    Solution s = solve_stokes(m, f, dom, {});
    return SolvedCase{std::move(dom), std::move(f), m, std::move(s)};
  }();
  return c;
}

}  // namespace

TEST_CASE("zero forcing gives vanishing estimate reports") {
  const GridDomain dom = GridDomain::box({8, 8, 8}, 1.0 / 8, 1);
  const TensorField f(dom.dims, dom.h);
  const Solution sol = solve_stokes(StressModel::power_law(2.0), f, dom, {});
  REQUIRE(sol.converged);

  const EstimateReport r1 = verify_mt1(sol, f, dom, 2.0, 2.0);
  CHECK(r1.id == "mt1");
  CHECK(r1.lhs == 0.0);
  CHECK(r1.rhs == 1.0);
  CHECK(r1.ratio == 0.0);
  CHECK(r1.eps == 0.0);
  CHECK(r1.h == doctest::Approx(1.0 / 8));

  const EstimateReport r2 = verify_mt2(sol, f, dom, 2.0, 2.0);
  CHECK(r2.lhs == 0.0);
  CHECK(r2.ratio == 0.0);
  CHECK(extra_of(r2, "bridge_lhs") == 0.0);
  CHECK(extra_of(r2, "bridge_ratio") <= 1.0);

  const StressModel lai = StressModel::linear_at_infinity(1.0, 2.0, 0.5);
  const Solution ns = solve_navier_stokes(lai, f, dom, {});
  REQUIRE(ns.converged);
  const EstimateReport r3 = verify_ns_estimate(ns, f, dom, lai, 1.8);
  CHECK(r3.id == "ns-2");
  CHECK(r3.lhs == 0.0);
  CHECK(r3.rhs == 1.0);
  CHECK(r3.ratio == 0.0);

  CHECK(conjugate_exponent(2.0) == doctest::Approx(2.0));
  CHECK(conjugate_exponent(4.0) == doctest::Approx(4.0 / 3.0));
  CHECK(conjugate_exponent(1.5) == doctest::Approx(3.0));
  CHECK_THROWS_AS(conjugate_exponent(1.0), std::invalid_argument);
}

TEST_CASE("alpha follows both growth branches") {
  CHECK(alpha(0.0, 2.5) == 0.0);
  CHECK(alpha(0.0, 4.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(alpha(0.1, 2.5) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(alpha(0.2, 3.0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(alpha(0.2, 3.0 - 1e-9) == doctest::Approx(0.4).epsilon(1e-6));
  CHECK(alpha(0.2, 4.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(alpha(0.3, 4.0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK_THROWS_AS(alpha(0.1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(alpha(0.1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(alpha(-0.1, 2.5), std::invalid_argument);
}

TEST_CASE("duality endpoint reduces the weight to one") {
  const SolvedCase& c = thick3();
  REQUIRE(c.sol.converged);
  const double q = 1.5;  // = p' for p = 3

  const EstimateReport m1 = verify_mt1(c.sol, c.f, c.dom, 3.0, q);
  const EstimateReport m2 = verify_mt2(c.sol, c.f, c.dom, 3.0, q);
  const double plain3 =
      power_integral(gradient(c.sol.u), c.dom, NormSpec{3.0, nullptr, NormSpec::Region::domain});
  CHECK(extra_of(m2, "grad_term") == doctest::Approx(plain3).epsilon(1e-14));
  CHECK(extra_of(m1, "grad_term") == doctest::Approx(plain3).epsilon(1e-14));
  const double piplain =
      power_integral(c.sol.pi, c.dom, NormSpec{3.0, nullptr, NormSpec::Region::domain});
  CHECK(extra_of(m2, "pressure_term") == doctest::Approx(piplain).epsilon(1e-14));

  for (const double qq : {1.5, 1.4, 1.3}) {
    const EstimateReport rep = verify_mt2(c.sol, c.f, c.dom, 3.0, qq);
    CHECK(rep.ratio > 0.0);
    CHECK(std::isfinite(rep.ratio));
    CHECK(extra_of(rep, "bridge_ratio") <= 1.0 + 1e-12);
  }

  CHECK_THROWS_AS(verify_mt1(c.sol, c.f, c.dom, 3.0, 1.6), std::invalid_argument);
  CHECK_THROWS_AS(verify_mt2(c.sol, c.f, c.dom, 3.0, 0.9), std::invalid_argument);
}

TEST_CASE("energy identity controls the quadratic estimate") {
  const GridDomain dom = GridDomain::box({12, 12, 12}, 1.0 / 12, 2);
  const TensorField f = wave_forcing(dom, 0.5);
  const Solution sol = solve_stokes(StressModel::power_law(2.0), f, dom, {});
  REQUIRE(sol.converged);

  const TensorField eu = sym_gradient(sol.u);
  const TensorField gu = gradient(sol.u);
  const double energy = dot(eu, eu);
  const double pairing = dot(f, gu) + dot(sol.pi, divergence(sol.u));
  CHECK(energy == doctest::Approx(pairing).epsilon(1e-6));

  const NormSpec l2{2.0, nullptr, NormSpec::Region::domain};
  const double ru = norm(gu, dom, l2) / norm(eu, dom, l2);
  CHECK(ru >= 1.0 - 1e-12);
  const double grad_term = extra_of(verify_mt1(sol, f, dom, 2.0, 2.0), "grad_term");
  const double If2 = power_integral(f, dom, NormSpec{2.0, nullptr, NormSpec::Region::domain});
  CHECK(grad_term <= ru * ru * ru * ru * If2 * (1.0 + 1e-6));

  const Bogovski b = bogovski(sol.pi, dom, {});
  REQUIRE(b.div_rel <= 1e-7);
  const double pi2 = dot(sol.pi, sol.pi);
  CHECK(dot(sol.pi, divergence(b.v)) == doctest::Approx(pi2).epsilon(1e-6));
  const double bound =
      (norm(eu, dom, l2) + norm(f, dom, l2)) * norm(gradient(b.v), dom, l2);
  CHECK(pi2 <= bound * (1.0 + 1e-6) + 1e-12);

  const EstimateReport rep = verify_mt1(sol, f, dom, 2.0, 2.0);
  CHECK(rep.ratio <= ru * ru * ru * ru + pi2 / rep.rhs + 1e-9);
}

TEST_CASE("thickening transport bound carries unit exponent at the endpoint") {
  const GridDomain dom = GridDomain::box({8, 8, 8}, 1.0 / 8, 1);
  const TensorField f = wave_forcing(dom, 0.25);
  const StressModel m4 = StressModel::power_law(4.0);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.div_tol = 1e-9;
  const Solution sol = solve_navier_stokes(m4, f, dom, cfg);
  REQUIRE(sol.converged);

  const EstimateReport rep = verify_ns_estimate(sol, f, dom, m4, 4.0 / 3.0);
  CHECK(rep.id == "ns-p");
  CHECK(rep.lhs > 0.0);
  CHECK(extra_of(rep, "exponent") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rep.rhs == doctest::Approx(extra_of(rep, "base")).epsilon(1e-14));

  const StressModel lai = StressModel::linear_at_infinity(1.0, 2.0, 0.5);
  const EstimateReport r2 = verify_ns_estimate(sol, f, dom, lai, 1.9);
  CHECK(r2.id == "ns-2");
  CHECK(r2.rhs == 1.0);
  CHECK(r2.ratio == doctest::Approx(r2.lhs));

  CHECK_THROWS_AS(verify_ns_estimate(sol, f, dom, StressModel::power_law(2.0), 4.0 / 3.0),
                  std::invalid_argument);
  StressModel um;
  um.kind = StressModel::Kind::user_map;
  CHECK_THROWS_AS(verify_ns_estimate(sol, f, dom, um, 4.0 / 3.0), std::invalid_argument);
  CHECK_THROWS_AS(verify_ns_estimate(sol, f, dom, m4, 1.5), std::invalid_argument);
}

TEST_CASE("layer cake identity is exact on the breakpoint ladder") {
  const GridDomain dom = GridDomain::box({16, 16, 16}, 1.0 / 16, 2);

  VectorField lin(dom.dims, dom.h);
  for (int z = 0; z < 16; ++z)
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) lin.at(0, dom.dims.idx(x, y, z)) = dom.center(x, y, z)[1];
  ScalarField g3(dom.dims, dom.h);
  std::fill(g3.v.begin(), g3.v.end(), 3.0);

  const double strain = std::sqrt(0.5);  // two off-diagonal entries of 1/2
  const double w = dom.h * dom.h * dom.h;
  const double eps = 0.1, p = 2.0;
  const double closed =
      double(dom.interior_count) * std::pow(strain, p) * w * std::pow(3.0, -eps) / eps;
  const EstimateReport rc = layer_cake_identity(lin, g3, dom, p, eps);
  CHECK(rc.id == "layer-cake");
  CHECK(rc.lhs == doctest::Approx(closed).epsilon(1e-12));
  CHECK(rc.rhs == doctest::Approx(closed).epsilon(1e-12));
  CHECK(std::abs(rc.ratio - 1.0) <= 1e-12);

  const VectorField u = smooth_random(dom, 5, 2);
  ScalarField g(dom.dims, dom.h);
  Rng rng(17);
  for (double& x : g.v) x = 1.0 + 2.0 * rng.uniform();
  for (const double e : {0.05, 0.1, 0.2}) {
    const EstimateReport rep = layer_cake_identity(u, g, dom, 2.2, e);
    CHECK(std::abs(rep.ratio - 1.0) <= 1e-6);
    CHECK(std::abs(rep.ratio - 1.0) <= 1e-8);
  }
  for (const int nodes : {100, 400, 1600}) {
    const EstimateReport rep = layer_cake_identity(u, g, dom, 2.2, 0.1, nodes);
    CHECK(std::abs(rep.ratio - 1.0) <= 1e-6);
    CHECK(int(rep.ladder.size()) == nodes);
    CHECK(std::is_sorted(rep.ladder.begin(), rep.ladder.end()));
    CHECK(rep.ladder.back() == doctest::Approx(extra_of(rep, "strain_total")).epsilon(1e-14));
  }
  CHECK(extra_of(layer_cake_identity(u, g, dom, 2.2, 0.1), "breakpoints") >= 1.0);

  CHECK_THROWS_AS(layer_cake_identity(u, g, dom, 2.2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(layer_cake_identity(u, g, dom, 2.2, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(layer_cake_identity(u, g, dom, 2.2, 0.1, 1), std::invalid_argument);
  ScalarField bad = g;
  bad.v[0] = 0.0;
  CHECK_THROWS_AS(layer_cake_identity(u, bad, dom, 2.2, 0.1), std::invalid_argument);
}

TEST_CASE("korn ratio sees rotations but not gradients") {
  const GridDomain dom = GridDomain::box({14, 14, 14}, 1.0 / 14, 2);

  const double k2 = korn_constant(dom, 2.0, nullptr, 8, 11);
  CHECK(k2 > 1.05);
  CHECK(std::isfinite(k2));
  CHECK(korn_constant(dom, 2.0, nullptr, 8, 11) == k2);

  for (const std::uint64_t seed : {3ULL, 9ULL}) {
    Rng rng(seed);
    ScalarField phi(dom.dims, dom.h);
    for (double& x : phi.v) x = rng.normal();
    for (int t = 0; t < 3; ++t) blur(phi);
    const VectorField gp = gradient(phi);
    const NormSpec lp{2.0, nullptr, NormSpec::Region::domain};
    const double r = norm(gradient(gp), dom, lp) / norm(sym_gradient(gp), dom, lp);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-10));
  }

  for (const double p : {1.5, 3.0}) CHECK(korn_constant(dom, p, nullptr, 4, 11) >= 0.999);

  const TensorField f = wave_forcing(dom, 2.0);
  const ScalarField fm = magnitude(f);
  const Weight wt = make_weight(fm, dom, 2.0, 0.2);
  const double kw = korn_constant(dom, 1.8, &wt.w, 8, 11);
  CHECK(std::isfinite(kw));
  CHECK(kw > 1.0);

  CHECK_THROWS_AS(korn_constant(dom, 1.0, nullptr, 4, 1), std::invalid_argument);
  ScalarField neg(dom.dims, dom.h);
  CHECK_THROWS_AS(korn_constant(dom, 2.0, &neg, 4, 1), std::invalid_argument);
}

TEST_CASE("embedding and poincare ratios stay tame") {
  const GridDomain dom = GridDomain::box({16, 16, 16}, 1.0 / 16, 2);
  ScalarField ones(dom.dims, dom.h);
  std::fill(ones.v.begin(), ones.v.end(), 1.0);

  const VectorField u = smooth_random(dom, 21, 2);
  const EstimateReport rep = embedding_check(u, dom, 2.0, ones, 2.0);
  CHECK(rep.id == "embedding");
  CHECK(rep.ratio > 0.0);
  CHECK(std::isfinite(rep.ratio));
  CHECK(extra_of(rep, "poincare_ratio") > 0.0);
  CHECK(extra_of(rep, "ap_class") == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(extra_of(rep, "ap_omega") == doctest::Approx(1.0).epsilon(1e-12));

  VectorField cu(dom.dims, dom.h);
  for (i64 i = 0; i < dom.dims.cells(); ++i) {
    cu.at(0, i) = 1.0;
    cu.at(1, i) = 2.0;
    cu.at(2, i) = -3.0;
  }
  const EstimateReport rc = embedding_check(cu, dom, 2.0, ones, 2.0);
  CHECK(extra_of(rc, "poincare_lhs") == 0.0);

  // the two printed admissibility exponents agree only at p = 3/2
  const EstimateReport ra = embedding_check(u, dom, 1.5, ones, 2.5);
  CHECK(extra_of(ra, "alpha_admissible") == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(extra_of(ra, "alpha_quoted") == doctest::Approx(0.25).epsilon(1e-12));
  const EstimateReport rb = embedding_check(u, dom, 2.0, ones, 1.8);
  CHECK(std::abs(extra_of(rb, "alpha_admissible") - extra_of(rb, "alpha_quoted")) > 0.1);
  CHECK(extra_of(rb, "alpha_in_range") == 1.0);

  CHECK_THROWS_AS(embedding_check(u, dom, 3.0, ones, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(embedding_check(u, dom, 1.0, ones, 2.0), std::invalid_argument);
  ScalarField neg(dom.dims, dom.h);
  CHECK_THROWS_AS(embedding_check(u, dom, 2.0, neg, 2.0), std::invalid_argument);
}

TEST_CASE("analytic window keeps the embedding ratio stable under refinement") {
  double ratios[2];
  int idx = 0;
  for (const int n : {16, 24}) {
    const int m = n / 8;
    const GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, m);
    ScalarField ones(dom.dims, dom.h);
    std::fill(ones.v.begin(), ones.v.end(), 1.0);
    VectorField u(dom.dims, dom.h);
    const double wall = m * dom.h, width = (n - 2.0 * m) * dom.h;
    for (int z = 0; z < n; ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
          const std::array<double, 3> c = dom.center(x, y, z);
          double w = 1.0;
          for (int k = 0; k < 3; ++k) {
            const double t = (c[k] - wall) / width;
            w *= (t > 0.0 && t < 1.0) ? std::sin(kPi * t) : 0.0;
          }
          const i64 i = dom.dims.idx(x, y, z);
          u.at(0, i) = w;
          u.at(1, i) = -0.5 * w;
          u.at(2, i) = 0.25 * w;
        }
    ratios[idx++] = embedding_check(u, dom, 2.0, ones, 2.0).ratio;
  }
  CHECK(ratios[0] / ratios[1] > 0.7);
  CHECK(ratios[0] / ratios[1] < 1.4);
}

TEST_CASE("epsilon scan keeps the duality row stable") {
  const GridDomain dom = GridDomain::box({10, 10, 10}, 1.0 / 10, 1);
  const TensorField f =
      singular_forcing(dom, {0.5, 0.5, 0.5}, 1.2, offdiag_direction(), 0.4);
  const StressModel m2 = StressModel::power_law(2.0);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.div_tol = 1e-9;

  const ScanTable table =
      scan_epsilon0(m2, dom, f, {6.0, 12.0, 40.0}, {2.0, 1.9, 1.8}, cfg);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.p == 2.0);
  CHECK(table.rows[0].q == 2.0);
  CHECK(table.rows[0].gap == doctest::Approx(0.0));
  CHECK(table.rows[0].stable);
  CHECK(table.rows[0].note.empty());
  for (const ScanRow& row : table.rows) {
    REQUIRE(row.ratios.size() == 3);
    for (const double r : row.ratios) CHECK(std::isfinite(r));
    CHECK(row.spread >= 1.0);
  }
  CHECK(table.eps0 >= 0.0999);

  CHECK_THROWS_AS(scan_epsilon0(m2, dom, f, {2.0}, {2.2}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(scan_epsilon0(m2, dom, f, {}, {2.0}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(scan_epsilon0(m2, dom, f, {-1.0}, {2.0}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(scan_epsilon0(m2, dom, f, {2.0}, {}, cfg), std::invalid_argument);
}

TEST_CASE("estimate ratios shift little under forcing translation") {
  const GridDomain dom = GridDomain::box({12, 12, 12}, 1.0 / 12, 2);
  const StressModel m2 = StressModel::power_law(2.0);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.div_tol = 1e-9;
  double r1[2], r2[2];
  int idx = 0;
  for (const double shift : {0.0, 1.0 / 12}) {
    const TensorField f =
        singular_forcing(dom, {0.5 + shift, 0.5, 0.5}, 1.0, offdiag_direction(), 0.5);
    const Solution sol = solve_stokes(m2, f, dom, cfg);
    REQUIRE(sol.converged);
    r1[idx] = verify_mt1(sol, f, dom, 2.0, 1.9).ratio;
    r2[idx] = verify_mt2(sol, f, dom, 2.0, 1.9).ratio;
    ++idx;
  }
  CHECK(std::abs(r1[0] / r1[1] - 1.0) <= 0.1);
  CHECK(std::abs(r2[0] / r2[1] - 1.0) <= 0.1);
}

TEST_CASE("power homogeneity rescales the first estimate exactly") {
  const SolvedCase& c = thick3();
  REQUIRE(c.sol.converged);

  TensorField f2 = c.f;
  scale(f2, 4.0);  // t = 2 with p = 3: forcing scales by t^(p-1)
  SolverConfig cfg;
  cfg.deltas = {2e-2, 2e-3, 2e-4};
  const Solution s2 = solve_stokes(c.model, f2, c.dom, cfg);
  REQUIRE(s2.converged);

  const double q = 1.4;
  const EstimateReport a = verify_mt1(c.sol, c.f, c.dom, 3.0, q);
  const EstimateReport b = verify_mt1(s2, f2, c.dom, 3.0, q);
  CHECK(b.lhs / a.lhs == doctest::Approx(std::pow(2.0, 2.0 * q)).epsilon(1e-4));
}

TEST_CASE("singular sweep keeps the estimates bounded across resolutions") {
  const double a = 1.3, q = 1.9;  // a q < 3 keeps the forcing q-integrable
  const StressModel m2 = StressModel::power_law(2.0);
  SolverConfig cfg;
  cfg.tol = 1e-8;
  cfg.div_tol = 1e-9;
  std::vector<double> r1, r2;
  for (const int n : {16, 24, 32}) {
    const GridDomain dom = GridDomain::box({n, n, n}, 1.0 / n, n / 8);
    const TensorField f = singular_forcing(dom, {0.5, 0.5, 0.5}, a, offdiag_direction(), 0.4);
    const Solution sol = solve_stokes(m2, f, dom, cfg);
    REQUIRE(sol.converged);
    r1.push_back(verify_mt1(sol, f, dom, 2.0, q).ratio);
    r2.push_back(verify_mt2(sol, f, dom, 2.0, q).ratio);
  }
  const auto spread = [](const std::vector<double>& v) {
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return *mx / *mn;
  };
  CHECK(spread(r1) <= 2.0);
  CHECK(spread(r2) <= 2.0);
}

TEST_CASE("reports serialize with fixed columns") {
  const GridDomain dom = GridDomain::box({8, 8, 8}, 1.0 / 8, 1);
  const VectorField u = smooth_random(dom, 2, 1);
  ScalarField g(dom.dims, dom.h);
  std::fill(g.v.begin(), g.v.end(), 2.0);
  const EstimateReport cake = layer_cake_identity(u, g, dom, 2.0, 0.1, 8);

  EstimateReport hand;
  hand.id = "mt1";
  hand.p = 2.0;
  hand.q = 1.9;
  hand.ladder = {1.0, 2.5};
  hand.ratio = std::numeric_limits<double>::quiet_NaN();
  hand.extra = {{"a", 1.5}};

  const std::vector<EstimateReport> reps = {cake, hand};
  const std::string csv = reports_csv(reps);
  CHECK(csv.rfind("id,p,q,eps,h,forcing_a,lhs,rhs,ratio,ladder,extra\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("a=1.5") != std::string::npos);
  CHECK(reports_csv(reps) == csv);

  const nlohmann::json j = nlohmann::json::parse(reports_json(reps));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["id"] == "layer-cake");
  CHECK(j[0]["ladder"].size() == 8);
  CHECK(j[1]["ratio"].is_null());
  CHECK(j[1]["extra"]["a"] == doctest::Approx(1.5));

  ScanTable table;
  table.p = 2.0;
  ScanRow row;
  row.q = 2.0;
  row.ratios = {1.0, 1.5};
  row.spread = 1.5;
  row.stable = true;
  table.rows.push_back(row);
  const std::string sc = scan_csv(table);
  CHECK(sc.rfind("q,gap,stable,spread,ratios,note\n", 0) == 0);
  CHECK(sc.find(",1,") != std::string::npos);
}
