#pragma once

#include <array>
#include <functional>

#include "pstokes/field.hpp"

namespace pstokes {

using Mat3 = std::array<double, 9>;

// Constitutive law A(z) on 3x3 strain rates, with the structure constants
// C1, C2, C3 of the coercivity / boundedness / monotonicity inequalities
// declared alongside so they can be checked by sampling.
//
// power_law:          A(z) = (delta^2 + |z|^2)^((p-2)/2) z, delta from the
//                     solver; at delta = 0 the plain |z|^(p-2) z law.
// linear_at_infinity: a shear-dependent base law nu z + (nu0 - nu)
//                     (1 + |z|^2)^((pc-2)/2) z switched in by a quintic
//                     crossover weight that is 0 below |z| = K/2 and 1
//                     above |z| = K, so the law is exactly nu z at small
//                     shear and within delta_tilde |z| of nu z at large
//                     shear. Structure exponent p = 2.
// user_map:           arbitrary map for adversarial checks.
struct StressModel {
  enum class Kind { power_law, linear_at_infinity, user_map };
  Kind kind = Kind::power_law;
  double p = 2.0;

  double C1 = 1.0;
  double C2 = 1.0;
  double C3 = 0.0;

  double nu = 0.0;
  double nu0 = 0.0;
  double K = 0.0;
  double carreau_p = 1.6;
  double delta_tilde = 0.0;

  std::function<Mat3(const Mat3&)> map;

  static StressModel power_law(double p);
  static StressModel linear_at_infinity(double nu, double nu0, double K, double carreau_p = 1.6);
  static StressModel user(double p, std::function<Mat3(const Mat3&)> map, double C1 = 1.0,
                          double C2 = 1.0, double C3 = 0.0);
};

// quintic ramp: 0 for t <= K/2, 1 for t >= K, C2-smooth in between
double crossover_weight(double t, double K);
double crossover_slope(double t, double K);

Mat3 stress_eval(const StressModel& model, const Mat3& z, double delta = 0.0);

// directional derivative dA(z)[h]; analytic for the built-in kinds,
// central finite differences for user maps
Mat3 stress_tangent(const StressModel& model, const Mat3& z, const Mat3& h, double delta = 0.0);

// cellwise application over a tensor field
TensorField stress_field(const StressModel& model, const TensorField& z, double delta = 0.0);

// Margins are relative: each inequality's slack divided by the magnitude
// scale of its two sides, so pass thresholds are sample-scale independent.
struct StressReport {
  int samples = 0;
  double delta = 0.0;

  // min over samples of A(z).z - (C1|z|^p - C3), normalized
  double coercivity_margin = 0.0;
  // min over samples of C2|z|^(p-1) + C3^((p-1)/p) - |A(z)|, normalized
  double boundedness_margin = 0.0;
  // min over pairs of (A(z1)-A(z2)).(z1-z2), normalized
  double monotonicity_min = 0.0;
  // min over pairs of (A(z1)-A(z2)).(z1-z2) - (C1|z1-z2|^p - C3),
  // normalized; only meaningful when strong_checked
  double strong_margin = 0.0;
  // largest constant with (A(z1)-A(z2)).(z1-z2) >= chat |z1-z2|^p over the
  // sampled pairs (p > 2 and linear-at-infinity kinds)
  double chat = 0.0;
  // max over samples with |z| >= K of |A(z) - nu z| / |z|
  double deviation_max = 0.0;

  bool coercive = false;
  bool bounded = false;
  bool monotone = false;
  bool strong_checked = false;
  bool strong_monotone = false;
  bool linear_checked = false;
  bool linear_ok = false;

  Mat3 witness_z1{};  // worst monotonicity pair
  Mat3 witness_z2{};
};

StressReport check_assumptions(const StressModel& model, int sample_count, double delta = 0.0,
                               std::uint64_t seed = 1);

}  // namespace pstokes
