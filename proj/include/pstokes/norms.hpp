#pragma once

#include <limits>

#include "pstokes/field.hpp"

namespace pstokes {

// L^q norms with midpoint quadrature: (sum |f|^q w h^3)^(1/q) with |f| the
// Frobenius magnitude across components. q = infinity gives the max norm.
// Region::domain sums interior cells; Region::box sums everything (used for
// maximal-operator bounds, which live on the whole box).
struct NormSpec {
  double q = 2.0;
  const ScalarField* weight = nullptr;
  enum class Region { domain, box } region = Region::domain;

  static constexpr double inf = std::numeric_limits<double>::infinity();
};

template <int NC>
double norm(const Field<NC>& f, const GridDomain& dom, const NormSpec& spec);

// integral of |f|^q w over the region (no outer root)
template <int NC>
double power_integral(const Field<NC>& f, const GridDomain& dom, const NormSpec& spec);

// w-measure of the cells flagged in mask (w = nullptr means Lebesgue)
double weighted_measure(const GridDomain& dom, const std::vector<std::uint8_t>& mask,
                        const ScalarField* weight);

}  // namespace pstokes
