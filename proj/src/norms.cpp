#include "pstokes/norms.hpp"

#include <cmath>
#include <stdexcept>

#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

template <int NC>
inline double mag2(const Field<NC>& f, i64 i) {
  double s = 0.0;
  for (int c = 0; c < NC; ++c) {
    const double x = f.at(c, i);
    s += x * x;
  }
  return s;
}

template <int NC>
void validate(const Field<NC>& f, const GridDomain& dom, const NormSpec& spec) {
  check_same_layout(f, dom, "norm");
  if (!(spec.q >= 1.0)) throw std::invalid_argument("norm: q must be in [1, inf]");
  if (spec.weight) {
    check_same_layout(*spec.weight, dom, "norm weight");
    for (i64 i = 0; i < dom.dims.cells(); ++i)
      if (spec.weight->at(0, i) < 0.0) throw std::invalid_argument("norm: negative weight");
  }
}

}  // namespace

template <int NC>
double power_integral(const Field<NC>& f, const GridDomain& dom, const NormSpec& spec) {
  validate(f, dom, spec);
  if (std::isinf(spec.q)) throw std::invalid_argument("power_integral: q must be finite");
  const Dims d = dom.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const bool box = spec.region == NormSpec::Region::box;
  const double half_q = 0.5 * spec.q;
  const double cellw = dom.h * dom.h * dom.h;
  return cellw * det_sum(static_cast<i64>(d.nz), [&](i64 z) {
    double acc = 0.0;
    for (i64 i = z * plane; i < (z + 1) * plane; ++i) {
      if (!box && !dom.is_interior(i)) continue;
      const double m2 = mag2(f, i);
      if (m2 == 0.0) continue;
      const double w = spec.weight ? spec.weight->at(0, i) : 1.0;
      acc += w * std::pow(m2, half_q);
    }
    return acc;
  });
}

template <int NC>
double norm(const Field<NC>& f, const GridDomain& dom, const NormSpec& spec) {
  validate(f, dom, spec);
  const Dims d = dom.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const bool box = spec.region == NormSpec::Region::box;
  if (std::isinf(spec.q)) {
    const double m2 = det_max(static_cast<i64>(d.nz), [&](i64 z) {
      double mx = 0.0;
      for (i64 i = z * plane; i < (z + 1) * plane; ++i) {
        if (!box && !dom.is_interior(i)) continue;
        const double v = mag2(f, i);
        if (v > mx) mx = v;
      }
      return mx;
    });
    return std::sqrt(m2);
  }
  return std::pow(power_integral(f, dom, spec), 1.0 / spec.q);
}

double weighted_measure(const GridDomain& dom, const std::vector<std::uint8_t>& mask,
                        const ScalarField* weight) {
  if (static_cast<i64>(mask.size()) != dom.dims.cells())
    throw std::invalid_argument("weighted_measure: mask size mismatch");
  const Dims d = dom.dims;
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  const double cellw = dom.h * dom.h * dom.h;
  return cellw * det_sum(static_cast<i64>(d.nz), [&](i64 z) {
    double acc = 0.0;
    for (i64 i = z * plane; i < (z + 1) * plane; ++i)
      if (mask[static_cast<std::size_t>(i)]) acc += weight ? weight->at(0, i) : 1.0;
    return acc;
  });
}

template double power_integral<1>(const Field<1>&, const GridDomain&, const NormSpec&);
template double power_integral<3>(const Field<3>&, const GridDomain&, const NormSpec&);
template double power_integral<9>(const Field<9>&, const GridDomain&, const NormSpec&);
template double power_integral<27>(const Field<27>&, const GridDomain&, const NormSpec&);
template double norm<1>(const Field<1>&, const GridDomain&, const NormSpec&);
template double norm<3>(const Field<3>&, const GridDomain&, const NormSpec&);
template double norm<9>(const Field<9>&, const GridDomain&, const NormSpec&);
template double norm<27>(const Field<27>&, const GridDomain&, const NormSpec&);

}  // namespace pstokes
