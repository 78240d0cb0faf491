#include <doctest.h>

#include <cmath>

#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"
#include "pstokes/stress.hpp"

using namespace pstokes;

namespace {

Mat3 random_mat(Rng& rng, double scale) {
  Mat3 z;
  for (int c = 0; c < 9; ++c) z[c] = scale * rng.normal();
  return z;
}

double mag(const Mat3& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

Mat3 diff(const Mat3& a, const Mat3& b) {
  Mat3 d;
  for (int c = 0; c < 9; ++c) d[c] = a[c] - b[c];
  return d;
}

}  // namespace

TEST_CASE("zero input and the linear exponent") {
  for (double p : {1.5, 2.0, 3.0}) {
    StressModel m = StressModel::power_law(p);
    Mat3 zero{};
    CHECK(mag(stress_eval(m, zero)) == 0.0);
  }
  StressModel lin = StressModel::power_law(2.0);
  Rng rng(1);
  for (int s = 0; s < 20; ++s) {
    Mat3 z = random_mat(rng, std::pow(10.0, rng.uniform(-2.0, 2.0)));
    Mat3 a = stress_eval(lin, z, 0.0);
    Mat3 ad = stress_eval(lin, z, 0.01);
    for (int c = 0; c < 9; ++c) {
      CHECK(a[c] == z[c]);
      CHECK(ad[c] == z[c]);
    }
  }
  CHECK_THROWS_AS(StressModel::power_law(0.5), std::invalid_argument);
}

TEST_CASE("monotonicity holds on random pairs") {
  for (double p : {1.5, 3.0}) {
    StressModel m = StressModel::power_law(p);
    StressReport rep = check_assumptions(m, 10000, 0.0, 99);
    CHECK(rep.samples == 10000);
    CHECK(rep.monotone);
    CHECK(rep.monotonicity_min >= -1e-12);
    if (p > 2.0) {
      CHECK(rep.strong_checked);
      CHECK(rep.strong_monotone);
      CHECK(rep.chat > 0.0);
      CHECK(rep.chat >= std::pow(2.0, 2.0 - p) - 1e-9);
      CHECK(rep.chat <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("declared structure constants survive sampling") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (double delta : {0.0, 1e-2}) {
      StressModel m = StressModel::power_law(p);
      StressReport rep = check_assumptions(m, 4000, delta, 7);
      CHECK(rep.coercive);
      CHECK(rep.bounded);
      CHECK(rep.monotone);
    }
  }
  StressModel exact = StressModel::power_law(2.0);
  CHECK(exact.C1 == 1.0);
  CHECK(exact.C2 == 1.0);
  CHECK(exact.C3 == 0.0);
  StressReport rep = check_assumptions(exact, 2000, 0.0, 3);
  CHECK(std::fabs(rep.coercivity_margin) <= 1e-12);
  CHECK(std::fabs(rep.boundedness_margin) <= 1e-12);
}

TEST_CASE("crossover law is Newtonian at small shear and nearly so at large") {
  StressModel m = StressModel::linear_at_infinity(1.0, 2.0, 4.0, 1.6);
  CHECK(m.p == 2.0);
  Rng rng(5);
  for (int s = 0; s < 200; ++s) {
    Mat3 dir = random_mat(rng, 1.0);
    double dm = mag(dir);
    if (dm == 0.0) continue;

    double small = rng.uniform(0.0, 0.5 * m.K / dm * 0.999);
    Mat3 zs;
    for (int c = 0; c < 9; ++c) zs[c] = small * dir[c];
    Mat3 as = stress_eval(m, zs);
    for (int c = 0; c < 9; ++c) CHECK(as[c] == m.nu * zs[c]);

    double big = rng.uniform(m.K / dm, 50.0 * m.K / dm);
    Mat3 zb;
    for (int c = 0; c < 9; ++c) zb[c] = big * dir[c];
    Mat3 ab = stress_eval(m, zb);
    Mat3 dev = diff(ab, zb);
    for (int c = 0; c < 9; ++c) dev[c] = ab[c] - m.nu * zb[c];
    CHECK(mag(dev) <= (m.delta_tilde + 1e-12) * mag(zb));
  }

  StressReport rep = check_assumptions(m, 10000, 0.0, 11);
  CHECK(rep.monotone);
  CHECK(rep.strong_checked);
  CHECK(rep.strong_monotone);
  CHECK(rep.linear_checked);
  CHECK(rep.linear_ok);

  CHECK(crossover_weight(0.5 * m.K, m.K) == 0.0);
  CHECK(crossover_weight(m.K, m.K) == 1.0);
  CHECK(crossover_weight(0.75 * m.K, m.K) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(StressModel::linear_at_infinity(2.0, 1.0, 4.0), std::invalid_argument);
}

TEST_CASE("corrupted law is reported with a witness") {
  StressModel bad = StressModel::user(2.0, [](const Mat3& z) {
    Mat3 out;
    for (int c = 0; c < 9; ++c) out[c] = -z[c];
    return out;
  });
  StressReport rep = check_assumptions(bad, 500, 0.0, 21);
  CHECK(!rep.monotone);
  CHECK(rep.monotonicity_min < 0.0);
  Mat3 dz = diff(rep.witness_z1, rep.witness_z2);
  Mat3 da = diff(stress_eval(bad, rep.witness_z1), stress_eval(bad, rep.witness_z2));
  double mono = 0.0;
  for (int c = 0; c < 9; ++c) mono += da[c] * dz[c];
  CHECK(mono < 0.0);
}

TEST_CASE("tangent matches finite differences") {
  Rng rng(13);
  StressModel pl = StressModel::power_law(3.0);
  StressModel lai = StressModel::linear_at_infinity(1.0, 2.0, 4.0, 1.6);
  for (const StressModel* m : {&pl, &lai}) {
    for (int s = 0; s < 50; ++s) {
      Mat3 z = random_mat(rng, std::pow(10.0, rng.uniform(-1.0, 1.0)));
      Mat3 h = random_mat(rng, 1.0);
      const double delta = m->kind == StressModel::Kind::power_law ? 1e-3 : 0.0;
      Mat3 t = stress_tangent(*m, z, h, delta);
      const double eps = 1e-6;
      Mat3 zp = z, zm = z;
      for (int c = 0; c < 9; ++c) {
        zp[c] += eps * h[c];
        zm[c] -= eps * h[c];
      }
      Mat3 fd = diff(stress_eval(*m, zp, delta), stress_eval(*m, zm, delta));
      for (int c = 0; c < 9; ++c) fd[c] /= 2.0 * eps;
      double scale = mag(t) + mag(h) + 1.0;
      CHECK(mag(diff(t, fd)) <= 1e-5 * scale);
    }
  }
}

TEST_CASE("field kernel matches cell evaluation and thread count") {
  Dims d{12, 10, 8};
  StressModel m = StressModel::power_law(2.7);
  TensorField z(d, 1.0 / 12);
  Rng rng(31);
  for (double& v : z.v) v = rng.uniform(-2.0, 2.0);

  set_threads(1);
  TensorField a1 = stress_field(m, z, 1e-3);
  set_threads(4);
  TensorField a4 = stress_field(m, z, 1e-3);
  set_threads(0);
  CHECK(a1.v == a4.v);

  for (i64 i = 0; i < d.cells(); i += 17) {
    Mat3 zi;
    for (int c = 0; c < 9; ++c) zi[c] = z.at(c, i);
    Mat3 ai = stress_eval(m, zi, 1e-3);
    for (int c = 0; c < 9; ++c) CHECK(a1.at(c, i) == ai[c]);
  }
}
