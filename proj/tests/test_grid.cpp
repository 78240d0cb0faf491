#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "pstokes/field.hpp"
#include "pstokes/fft.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"

using namespace pstokes;

namespace {

VectorField random_vector(Dims d, double h, std::uint64_t seed) {
  VectorField v(d, h);
  Rng rng(seed);
  for (double& x : v.v) x = rng.uniform(-1.0, 1.0);
  return v;
}

TensorField random_tensor(Dims d, double h, std::uint64_t seed) {
  TensorField t(d, h);
  Rng rng(seed);
  for (double& x : t.v) x = rng.uniform(-1.0, 1.0);
  return t;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace

TEST_CASE("cell indexing is x-fastest row major") {
  Dims d{4, 3, 2};
  CHECK(d.cells() == 24);
  CHECK(d.idx(0, 0, 0) == 0);
  CHECK(d.idx(1, 0, 0) == 1);
  CHECK(d.idx(0, 1, 0) == 4);
  CHECK(d.idx(0, 0, 1) == 12);
  CHECK(d.in_box(3, 2, 1));
  CHECK(!d.in_box(4, 0, 0));
  CHECK(!d.in_box(0, -1, 0));
}

TEST_CASE("box domain counts and layer") {
  Dims d{8, 8, 8};
  GridDomain g = GridDomain::box(d, 0.125, 1);
  CHECK(g.interior_count == 6 * 6 * 6);
  i64 layer_cells = 0;
  for (i64 i = 0; i < d.cells(); ++i) layer_cells += g.is_layer(i) ? 1 : 0;
  CHECK(layer_cells == 6 * 6 * 6 - 4 * 4 * 4);
  CHECK(g.is_interior(d.idx(1, 1, 1)));
  CHECK(g.is_layer(d.idx(1, 1, 1)));
  CHECK(g.is_free(d.idx(2, 2, 2)));
  CHECK(!g.is_interior(d.idx(0, 4, 4)));
  CHECK_THROWS(GridDomain::box(d, 0.125, 0));
  CHECK_THROWS(GridDomain::box(Dims{2, 8, 8}, 0.125, 1));
}

TEST_CASE("ball and lshape domains") {
  Dims d{16, 16, 16};
  double h = 1.0 / 16;
  GridDomain b = GridDomain::ball(d, h, {0.5, 0.5, 0.5}, 0.4);
  CHECK(b.interior_count > 0);
  double vol = b.volume();
  CHECK(vol > 0.22);  // ball volume 4/3 pi 0.4^3 = 0.268
  CHECK(vol < 0.31);
  GridDomain l = GridDomain::lshape(d, h, 2);
  CHECK(!l.is_interior(d.idx(12, 12, 8)));
  CHECK(l.is_interior(d.idx(4, 4, 8)));
}

TEST_CASE("from_mask rejects disconnected interiors") {
  Dims d{8, 8, 8};
  std::vector<std::uint8_t> m(d.cells(), 0);
  m[d.idx(1, 1, 1)] = 1;
  m[d.idx(6, 6, 6)] = 1;
  CHECK_THROWS_WITH_AS(GridDomain::from_mask(d, 0.125, m), doctest::Contains("not connected"),
                       std::invalid_argument);
  std::vector<std::uint8_t> e(d.cells(), 0);
  CHECK_THROWS_WITH_AS(GridDomain::from_mask(d, 0.125, e), doctest::Contains("empty"),
                       std::invalid_argument);
}

TEST_CASE("vector identities hold at rounding level") {
  Dims d{12, 10, 14};
  double h = 1.0 / 12;
  VectorField v = random_vector(d, h, 7);
  ScalarField f(d, h);
  Rng rng(11);
  for (double& x : f.v) x = rng.uniform(-1.0, 1.0);

  ScalarField dc = divergence(curl(v));
  CHECK(max_abs(dc.v) <= 1e-12 / (h * h));

  VectorField cg = curl(gradient(f));
  CHECK(max_abs(cg.v) <= 1e-12 / (h * h));
}

TEST_CASE("divergence pairs with gradient exactly") {
  Dims d{10, 9, 8};
  double h = 0.1;
  GridDomain dom = GridDomain::box(d, h, 1);
  TensorField t = random_tensor(d, h, 3);
  VectorField phi = random_vector(d, h, 4);

  // whole-box pairing: skew-adjointness of the zero-extended stencil
  double lhs = dot(divergence(t), phi);
  TensorField gphi = gradient(phi);
  double rhs = dot(t, gphi);
  CHECK(std::fabs(lhs + rhs) <= 1e-12 * (1.0 / h));

  // interior pairing with a zero-trace test field
  enforce_zero_trace(phi, dom, true);
  VectorField divt = divergence(t);
  gphi = gradient(phi);
  double lhs_dom = 0.0, rhs_dom = 0.0;
  for (i64 i = 0; i < d.cells(); ++i) {
    if (!dom.is_interior(i)) continue;
    for (int c = 0; c < 3; ++c) lhs_dom += divt.at(c, i) * phi.at(c, i);
    for (int c = 0; c < 9; ++c) rhs_dom += t.at(c, i) * gphi.at(c, i);
  }
  CHECK(std::fabs(lhs_dom + rhs_dom) <= 1e-11 / h);
}

TEST_CASE("sym gradient symmetrizes") {
  Dims d{8, 8, 8};
  VectorField v = random_vector(d, 0.125, 9);
  TensorField e = sym_gradient(v);
  for (i64 i = 0; i < d.cells(); ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(e.at(3 * r + c, i) == e.at(3 * c + r, i));
}

TEST_CASE("deterministic reductions do not depend on thread count") {
  Dims d{16, 16, 16};
  VectorField a = random_vector(d, 1.0 / 16, 21);
  VectorField b = random_vector(d, 1.0 / 16, 22);
  set_threads(1);
  double d1 = dot(a, b);
  set_threads(4);
  double d4 = dot(a, b);
  set_threads(0);
  CHECK(d1 == d4);
}

TEST_CASE("norms validate and compute") {
  Dims d{8, 8, 8};
  double h = 0.125;
  GridDomain dom = GridDomain::box(d, h, 1);
  ScalarField f(d, h);
  f.fill(2.0);
  NormSpec q3;
  q3.q = 3.0;
  double pi = power_integral(f, dom, q3);
  CHECK(pi == doctest::Approx(8.0 * dom.interior_count * h * h * h).epsilon(1e-13));
  NormSpec ninf;
  ninf.q = NormSpec::inf;
  CHECK(norm(f, dom, ninf) == 2.0);
  NormSpec bad;
  bad.q = 0.5;
  CHECK_THROWS_WITH_AS(norm(f, dom, bad), doctest::Contains("[1, inf]"), std::invalid_argument);
  ScalarField w(d, h);
  w.fill(-1.0);
  NormSpec wn;
  wn.weight = &w;
  CHECK_THROWS_WITH_AS(norm(f, dom, wn), doctest::Contains("negative"), std::invalid_argument);
  // box region includes exterior cells
  NormSpec boxn;
  boxn.region = NormSpec::Region::box;
  double total = power_integral(f, dom, boxn);
  CHECK(total == doctest::Approx(4.0 * d.cells() * h * h * h).epsilon(1e-13));
}

TEST_CASE("snapshot round trip is bitwise") {
  Dims d{6, 5, 4};
  VectorField v = random_vector(d, 0.2, 31);
  v.staggering = 0;
  std::string path = "snapshot_test.bin";
  write_snapshot(path, v);
  VectorField r = read_snapshot<3>(path);
  CHECK(r.dims == v.dims);
  CHECK(r.h == v.h);
  CHECK(r.v == v.v);
  std::remove(path.c_str());
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  for (int i = 0; i < 1000; ++i) {
    double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng p(7);
  Rng q = p.child(1), r = p.child(2);
  CHECK(q.next_u64() != r.next_u64());
  double mean = 0.0;
  Rng n(5);
  for (int i = 0; i < 4000; ++i) mean += n.normal();
  CHECK(std::fabs(mean / 4000.0) < 0.05);
}

TEST_CASE("poisson solve inverts the zero-extension laplacian") {
  Dims d{12, 10, 9};
  double h = 1.0 / 12;
  ScalarField rhs(d, h);
  Rng rng(17);
  for (double& x : rhs.v) x = rng.uniform(-1.0, 1.0);
  ScalarField u = poisson_zero_dirichlet(rhs);
  // apply the seven-point operator with zero extension and compare
  double worst = 0.0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        auto val = [&](int xx, int yy, int zz) {
          return d.in_box(xx, yy, zz) ? u.at(0, xx, yy, zz) : 0.0;
        };
        double lap = (6.0 * val(x, y, z) - val(x + 1, y, z) - val(x - 1, y, z) -
                      val(x, y + 1, z) - val(x, y - 1, z) - val(x, y, z + 1) -
                      val(x, y, z - 1)) /
                     (h * h);
        worst = std::max(worst, std::fabs(lap - rhs.at(0, x, y, z)));
      }
  CHECK(worst <= 1e-10);
}
