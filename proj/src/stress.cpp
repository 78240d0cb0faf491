#include "pstokes/stress.hpp"

#include <cmath>
#include <stdexcept>

#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"

namespace pstokes {

namespace {

double dot9(const Mat3& a, const Mat3& b) {
  double s = 0.0;
  for (int c = 0; c < 9; ++c) s += a[std::size_t(c)] * b[std::size_t(c)];
  return s;
}

double mag9(const Mat3& a) { return std::sqrt(dot9(a, a)); }

void validate(const StressModel& model) {
  if (model.p < 1.0) throw std::invalid_argument("stress model: exponent below one");
}

Mat3 power_law_eval(double p, double delta, const Mat3& z) {
  const double t = delta * delta + dot9(z, z);
  if (t == 0.0) return Mat3{};
  const double s = p == 2.0 ? 1.0 : std::pow(t, 0.5 * (p - 2.0));
  Mat3 out;
  for (int c = 0; c < 9; ++c) out[std::size_t(c)] = s * z[std::size_t(c)];
  return out;
}

// d/dz [ s(|z|^2) z ] h = s h + 2 s'(|z|^2) (z.h) z
Mat3 power_law_tangent(double p, double delta, const Mat3& z, const Mat3& h) {
  const double t = delta * delta + dot9(z, z);
  if (t == 0.0) {
    if (p < 2.0)
      throw std::invalid_argument("stress tangent: unbounded at zero shear without regularization");
    if (p > 2.0) return Mat3{};
    return h;
  }
  const double s = p == 2.0 ? 1.0 : std::pow(t, 0.5 * (p - 2.0));
  const double sp = p == 2.0 ? 0.0 : 0.5 * (p - 2.0) * std::pow(t, 0.5 * (p - 4.0));
  const double zh = dot9(z, h);
  Mat3 out;
  for (int c = 0; c < 9; ++c)
    out[std::size_t(c)] = s * h[std::size_t(c)] + 2.0 * sp * zh * z[std::size_t(c)];
  return out;
}

Mat3 lai_eval(const StressModel& m, const Mat3& z) {
  const double zz = dot9(z, z);
  const double za = std::sqrt(zz);
  const double phi = crossover_weight(za, m.K);
  Mat3 out;
  if (phi == 0.0) {
    for (int c = 0; c < 9; ++c) out[std::size_t(c)] = m.nu * z[std::size_t(c)];
    return out;
  }
  const double s = (m.nu0 - m.nu) * std::pow(1.0 + zz, 0.5 * (m.carreau_p - 2.0));
  for (int c = 0; c < 9; ++c) out[std::size_t(c)] = (m.nu + phi * s) * z[std::size_t(c)];
  return out;
}

Mat3 lai_tangent(const StressModel& m, const Mat3& z, const Mat3& h) {
  const double zz = dot9(z, z);
  const double za = std::sqrt(zz);
  const double phi = crossover_weight(za, m.K);
  Mat3 out;
  if (phi == 0.0 && crossover_slope(za, m.K) == 0.0) {
    for (int c = 0; c < 9; ++c) out[std::size_t(c)] = m.nu * h[std::size_t(c)];
    return out;
  }
  const double s = (m.nu0 - m.nu) * std::pow(1.0 + zz, 0.5 * (m.carreau_p - 2.0));
  const double sp =
      (m.nu0 - m.nu) * 0.5 * (m.carreau_p - 2.0) * std::pow(1.0 + zz, 0.5 * (m.carreau_p - 4.0));
  const double zh = dot9(z, h);
  const double dphi = za > 0.0 ? crossover_slope(za, m.K) * (zh / za) : 0.0;
  for (int c = 0; c < 9; ++c)
    out[std::size_t(c)] = (m.nu + phi * s) * h[std::size_t(c)] +
                          (dphi * s + phi * sp * 2.0 * zh) * z[std::size_t(c)];
  return out;
}

}  // namespace

double crossover_weight(double t, double K) {
  const double half = 0.5 * K;
  if (t <= half) return 0.0;
  if (t >= K) return 1.0;
  const double xi = (t - half) / half;
  return xi * xi * xi * (10.0 + xi * (-15.0 + 6.0 * xi));
}

double crossover_slope(double t, double K) {
  const double half = 0.5 * K;
  if (t <= half || t >= K) return 0.0;
  const double xi = (t - half) / half;
  return 30.0 * xi * xi * (xi - 1.0) * (xi - 1.0) / half;
}

StressModel StressModel::power_law(double p) {
  if (p < 1.0) throw std::invalid_argument("stress model: exponent below one");
  StressModel m;
  m.kind = Kind::power_law;
  m.p = p;
  m.C1 = p > 2.0 ? std::pow(2.0, 2.0 - p) : 1.0;
  m.C2 = 1.0;
  m.C3 = 0.0;
  return m;
}

StressModel StressModel::linear_at_infinity(double nu, double nu0, double K, double carreau_p) {
  if (!(nu > 0.0) || !(nu0 >= nu)) throw std::invalid_argument("stress model: need nu0 >= nu > 0");
  if (!(K > 0.0)) throw std::invalid_argument("stress model: crossover shear must be positive");
  if (!(carreau_p > 1.0) || !(carreau_p <= 2.0))
    throw std::invalid_argument("stress model: base exponent must lie in (1, 2]");
  StressModel m;
  m.kind = Kind::linear_at_infinity;
  m.p = 2.0;
  m.nu = nu;
  m.nu0 = nu0;
  m.K = K;
  m.carreau_p = carreau_p;
  m.delta_tilde = (nu0 - nu) * std::pow(1.0 + K * K, 0.5 * (carreau_p - 2.0));
  m.C1 = 0.5 * nu;
  m.C2 = nu0;
  m.C3 = 0.0;
  return m;
}

StressModel StressModel::user(double p, std::function<Mat3(const Mat3&)> map, double C1,
                              double C2, double C3) {
  if (p < 1.0) throw std::invalid_argument("stress model: exponent below one");
  if (!map) throw std::invalid_argument("stress model: empty map");
  StressModel m;
  m.kind = Kind::user_map;
  m.p = p;
  m.map = std::move(map);
  m.C1 = C1;
  m.C2 = C2;
  m.C3 = C3;
  return m;
}

Mat3 stress_eval(const StressModel& model, const Mat3& z, double delta) {
  validate(model);
  switch (model.kind) {
    case StressModel::Kind::power_law:
      return power_law_eval(model.p, delta, z);
    case StressModel::Kind::linear_at_infinity:
      return lai_eval(model, z);
    case StressModel::Kind::user_map:
      return model.map(z);
  }
  return Mat3{};
}

Mat3 stress_tangent(const StressModel& model, const Mat3& z, const Mat3& h, double delta) {
  validate(model);
  switch (model.kind) {
    case StressModel::Kind::power_law:
      return power_law_tangent(model.p, delta, z, h);
    case StressModel::Kind::linear_at_infinity:
      return lai_tangent(model, z, h);
    case StressModel::Kind::user_map: {
      const double hm = mag9(h);
      if (hm == 0.0) return Mat3{};
      const double eps = 1e-6 * std::max(1.0, mag9(z)) / hm;
      Mat3 zp = z, zm = z;
      for (int c = 0; c < 9; ++c) {
        zp[std::size_t(c)] += eps * h[std::size_t(c)];
        zm[std::size_t(c)] -= eps * h[std::size_t(c)];
      }
      Mat3 ap = model.map(zp), am = model.map(zm);
      Mat3 out;
      for (int c = 0; c < 9; ++c)
        out[std::size_t(c)] = (ap[std::size_t(c)] - am[std::size_t(c)]) / (2.0 * eps);
      return out;
    }
  }
  return Mat3{};
}

TensorField stress_field(const StressModel& model, const TensorField& z, double delta) {
  validate(model);
  TensorField out(z.dims, z.h);
  par_for(z.cells(), [&](i64 i) {
    Mat3 zi;
    for (int c = 0; c < 9; ++c) zi[std::size_t(c)] = z.at(c, i);
    Mat3 a = stress_eval(model, zi, delta);
    for (int c = 0; c < 9; ++c) out.at(c, i) = a[std::size_t(c)];
  });
  return out;
}

StressReport check_assumptions(const StressModel& model, int sample_count, double delta,
                               std::uint64_t seed) {
  validate(model);
  if (sample_count <= 0) throw std::invalid_argument("check_assumptions: need samples");
  StressReport rep;
  rep.samples = sample_count;
  rep.delta = delta;
  const double p = model.p;
  // regularization shifts the law by at most (2 delta)^p in the constant
  // term and dilates the boundedness constant by at most 2^((p-2)/2)
  const double C3 = model.C3 + (delta > 0.0 ? std::pow(2.0 * delta, p) : 0.0);
  const double C3b = C3 > 0.0 ? std::pow(C3, (p - 1.0) / p) : 0.0;
  const double C2 =
      model.C2 * (delta > 0.0 && p > 2.0 ? std::pow(2.0, 0.5 * (p - 2.0)) : 1.0);

  rep.strong_checked =
      (model.kind == StressModel::Kind::power_law && p > 2.0) ||
      model.kind == StressModel::Kind::linear_at_infinity;
  rep.linear_checked = model.kind == StressModel::Kind::linear_at_infinity;

  Rng rng(seed);
  bool first = true, first_pair = true;
  for (int s = 0; s < sample_count; ++s) {
    // log-spaced magnitudes probe both shear regimes
    const double scale1 = std::pow(10.0, rng.uniform(-3.0, 2.0));
    const double scale2 = std::pow(10.0, rng.uniform(-3.0, 2.0));
    Mat3 z1, z2;
    for (int c = 0; c < 9; ++c) {
      z1[std::size_t(c)] = scale1 * rng.normal();
      z2[std::size_t(c)] = scale2 * rng.normal();
    }
    const Mat3 a1 = stress_eval(model, z1, delta);
    const Mat3 a2 = stress_eval(model, z2, delta);
    const double m1 = mag9(z1);

    const double az = dot9(a1, z1);
    const double cpow = model.C1 * std::pow(m1, p);
    const double co = (az - (cpow - C3)) / (1.0 + std::fabs(az) + cpow + C3);
    const double bhs = C2 * std::pow(m1, p - 1.0) + C3b;
    const double bo = (bhs - mag9(a1)) / (1.0 + bhs + mag9(a1));
    if (first || co < rep.coercivity_margin) rep.coercivity_margin = co;
    if (first || bo < rep.boundedness_margin) rep.boundedness_margin = bo;
    first = false;

    Mat3 dz, da;
    for (int c = 0; c < 9; ++c) {
      dz[std::size_t(c)] = z1[std::size_t(c)] - z2[std::size_t(c)];
      da[std::size_t(c)] = a1[std::size_t(c)] - a2[std::size_t(c)];
    }
    const double dm = mag9(dz);
    if (dm > 0.0) {
      const double mono = dot9(da, dz);
      const double mono_n = mono / (1.0 + mag9(da) * dm);
      if (first_pair || mono_n < rep.monotonicity_min) {
        rep.monotonicity_min = mono_n;
        rep.witness_z1 = z1;
        rep.witness_z2 = z2;
      }
      if (rep.strong_checked) {
        const double spow = model.C1 * std::pow(dm, p);
        const double strong = (mono - (spow - C3)) / (1.0 + std::fabs(mono) + spow + C3);
        const double ratio = mono / std::pow(dm, p);
        if (first_pair || strong < rep.strong_margin) rep.strong_margin = strong;
        if (first_pair || ratio < rep.chat) rep.chat = ratio;
      }
      first_pair = false;
    }

    if (rep.linear_checked && m1 >= model.K) {
      double dev2 = 0.0;
      for (int c = 0; c < 9; ++c) {
        const double dv = a1[std::size_t(c)] - model.nu * z1[std::size_t(c)];
        dev2 += dv * dv;
      }
      rep.deviation_max = std::max(rep.deviation_max, std::sqrt(dev2) / m1);
    }
  }

  rep.coercive = rep.coercivity_margin >= -1e-12;
  rep.bounded = rep.boundedness_margin >= -1e-12;
  rep.monotone = rep.monotonicity_min >= -1e-12;
  rep.strong_monotone = rep.strong_checked && rep.strong_margin >= -1e-12;
  rep.linear_ok = rep.linear_checked && rep.deviation_max <= model.delta_tilde + 1e-12;
  return rep;
}

}  // namespace pstokes
