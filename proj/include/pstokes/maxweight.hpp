#pragma once

#include <string>
#include <vector>

#include "pstokes/field.hpp"

namespace pstokes {

// Hardy-Littlewood maximal function over the dyadic open-ball ladder, with
// in-box denominators. Dominates |g| pointwise because the one-cell ball is
// in the ladder.
ScalarField maximal(const ScalarField& g);
ScalarField maximal_reference(const ScalarField& g);  // direct sums

struct LevelSet {
  double lambda = 0.0;
  i64 cells = 0;
  std::vector<std::uint8_t> mask;  // strict super-level set {value > lambda}
};

LevelSet level_set(const ScalarField& v, double lambda);

struct Weight {
  ScalarField w;  // positive on the box
  double p = 2.0;
  double eps = 0.0;
  std::string provenance;
};

// omega = (M(|g| chi_Omega + 1))^-eps; admissible for eps in (0, p-1),
// which makes the dual exponent power -eps/(p-1) land inside (-1, 0)
Weight make_weight(const ScalarField& g, const GridDomain& dom, double p, double eps);

struct ApWitness {
  double value = 0.0;
  int cx = 0, cy = 0, cz = 0;
  double radius_cells = 0.0;
};

// sup over ball centers and radii of (avg w) (avg w^{-1/(p-1)})^{p-1};
// the dyadic ladder by default, or an explicit physical radius set so the
// estimate is comparable across resolutions
double ap_constant(const ScalarField& w, double p, ApWitness* witness = nullptr);
double ap_constant(const ScalarField& w, double p, const std::vector<double>& radii_physical,
                   ApWitness* witness);

}  // namespace pstokes
