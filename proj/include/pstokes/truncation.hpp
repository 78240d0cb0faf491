#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "pstokes/curlpot.hpp"
#include "pstokes/field.hpp"
#include "pstokes/whitney.hpp"

namespace pstokes {

// affine model of the potential on one cube: value mean + gradient action
// relative to the cube center, averaged over the 3/2-dilated cube
struct CubeAffine {
  std::array<double, 9> grad{};  // row c of the fitted gradient, 3c+d entries
  std::array<double, 3> mean{};
  bool inside = false;  // 3/2 Q inside the domain; zero data otherwise
};

CubeAffine local_linearization(const Potential& pot, const GridDomain& dom,
                               const WhitneyCover& cover, i64 cube);

struct RelativeTruncation {
  VectorField u_O;
  VectorField w_O;
  std::vector<std::uint8_t> O;      // input mask
  std::vector<std::uint8_t> blend;  // cells the blend may touch (eroded cover)
  i64 o_cells = 0;
  i64 blend_cells = 0;
  bool whole_box = false;  // O covered the box: zero-field convention
  bool untouched = false;  // nothing to blend: u_O is u bitwise

  // measured stability ratios; the weighted pair needs a weight argument
  double lip2_ratio = std::numeric_limits<double>::quiet_NaN();
  double lip3_ratio = std::numeric_limits<double>::quiet_NaN();
  double lip4_ratio = std::numeric_limits<double>::quiet_NaN();

  WhitneyCover cover;  // valid when blend_cells > 0
  std::vector<CubeAffine> lin;
};

// replace u inside O by the curl of the blended affine models of the
// potential. Cells outside O keep bitwise-identical values; the divergence
// and the zero trace survive exactly because only a curl is added. The
// blend runs on the two-step erosion of O within the domain so the added
// curl cannot reach the boundary layer.
RelativeTruncation relative_truncate(const VectorField& u, const std::vector<std::uint8_t>& O,
                                     const GridDomain& dom, const Potential& pot, double p,
                                     double q, const ScalarField* weight = nullptr);

struct LipschitzTruncation {
  double lambda = 0.0;
  std::vector<std::uint8_t> bad;  // strict super-level set of the maximal field
  i64 bad_cells = 0;
  double bad_measure = 0.0;
  VectorField u_lam;
  double grad_sup = 0.0;   // sup of |grad u_lam| over the domain
  double c_inf = 0.0;      // grad_sup / lambda
  double bad_ratio = 0.0;  // |bad| lambda^p / integral |grad u|^p
  RelativeTruncation rel;
};

// maximal function of |hessian of the potential| restricted to the domain
ScalarField hessian_maximal(const Potential& pot, const GridDomain& dom);

LipschitzTruncation lipschitz_truncate_core(const VectorField& u, const GridDomain& dom,
                                            const Potential& pot, const ScalarField& maxfield,
                                            double lambda, double p, double q,
                                            const ScalarField* weight = nullptr);

// convenience wrapper: builds the potential and the maximal field internally
LipschitzTruncation lipschitz_truncate(const VectorField& u, const GridDomain& dom,
                                       double lambda, double p, double q,
                                       const ScalarField* weight = nullptr);

struct TruncationRow {
  double lambda = 0.0;
  i64 bad_cells = 0;
  double bad_measure_ratio = 0.0;
  double linf_ratio = 0.0;
  std::vector<double> lq_diff_ratio;
  std::vector<double> lq_stab_ratio;
  double weighted_ratio = std::numeric_limits<double>::quiet_NaN();
  double weighted_lip3_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct TruncationReport {
  double p = 0.0;
  std::vector<double> q_list;
  bool weighted = false;
  std::vector<TruncationRow> rows;

  double sup_bad_ratio = 0.0;
  double sup_linf_ratio = 0.0;
  std::vector<double> sup_lq_diff;
  std::vector<double> sup_lq_stab;
  double sup_weighted_ratio = 0.0;
  double sup_weighted_lip3 = 0.0;

  std::string csv() const;
};

// ladder sweep over lambda: one potential build, one maximal field, then
// the per-level truncations with every measured ratio
TruncationReport verify_truncation(const VectorField& u, const GridDomain& dom, double p,
                                   const std::vector<double>& lambdas,
                                   const std::vector<double>& q_list,
                                   const ScalarField* weight = nullptr);

// face-adjacency erosion of a cell mask (out-of-box counts as complement)
std::vector<std::uint8_t> erode_mask(Dims dims, const std::vector<std::uint8_t>& mask,
                                     int rounds);

}  // namespace pstokes
