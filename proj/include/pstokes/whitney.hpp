#pragma once

#include <string>
#include <vector>

#include "pstokes/field.hpp"

namespace pstokes {

// Closed axis-aligned dyadic cube, stored in cell units: side cells along
// each axis, anchored at (ax, ay, az) (multiples of side). m is the dyadic
// level relative to the box x-extent (side = 2^-m * nx * h) when nx is a
// power of two, else the negated log2 of the side in cells. clamped marks
// cubes whose selection hit the resolution floor (side 2, or the 1-cell
// fallback for masks that are not 2-block aligned) or the box ceiling; they
// cannot witness the continuum distance conditions and are excluded from
// those statistics.
struct DyadicCube {
  int side = 0;
  int ax = 0, ay = 0, az = 0;
  int m = 0;
  bool clamped = false;

  double side_length(double h) const { return side * h; }
  double diam(double h) const { return 1.7320508075688772 * side * h; }
};

struct WhitneyCover {
  Dims dims;
  double h = 0.0;
  std::vector<DyadicCube> cubes;
  std::vector<std::int32_t> cell_cube;  // tiling: cell -> cube id, -1 off O
  i64 open_cells = 0;

  // bump-support cover in CSR form: for each cell the cubes whose
  // normalized bump is positive there, with the psi values
  std::vector<std::int64_t> cover_start;
  std::vector<std::int32_t> cover_cube;
  std::vector<double> cover_psi;

  std::vector<std::vector<std::int32_t>> bump_neighbors;  // A_i, includes i

  int clamped_count() const {
    int c = 0;
    for (const auto& q : cubes) c += q.clamped ? 1 : 0;
    return c;
  }
  bool has_pou() const { return !cover_start.empty(); }
};

// Whitney cover of the open set given as a cell mask (nonzero = in O).
// Out-of-box space counts as complement. Selection uses the exact squared
// distance transform at cell centers; cubes of the same shell are merged
// into maximal dyadic cubes. Deterministic: integer geometry, fixed orders.
WhitneyCover decompose(Dims dims, double h, const std::vector<std::uint8_t>& open_mask);

// assemble a cover from an explicit cube list (tests use synthetic tilings)
WhitneyCover make_cover(Dims dims, double h, std::vector<DyadicCube> cubes);

// A_i: all j whose bump is positive somewhere on closed Q_i; superset of the
// touching cubes, includes i. Stored into cover.bump_neighbors and returned.
const std::vector<std::vector<std::int32_t>>& neighbors(WhitneyCover& cover);

// touching relation (closed cubes intersect), excludes i
std::vector<std::vector<std::int32_t>> touching_lists(const WhitneyCover& cover);

// Tensor-product quintic-smoothstep bumps scaled to 9/8 Q_i, normalized to
// sum to one over O at sampled cell centers. Fills the CSR in the cover.
void partition_of_unity(WhitneyCover& cover);

struct WhitneyReport {
  bool tiling_exact = false;          // every O-cell in exactly one cube, cubes inside O
  bool distance_ok = false;           // diam < dist <= 4 diam, tolerance h, unclamped cubes
  bool ratio_ok = false;              // touching sides within factor 2
  bool touch_count_ok = false;        // touching neighbors <= 56
  bool multiplicity_ok = false;       // {3/2 Q_i} overlap count <= 56
  bool pou_ok = false;                // sum psi = 1 on O, support bounds, gradient bound
  int cube_count = 0;
  int clamped = 0;
  int sub_resolution = 0;             // 1-cell fallback cubes
  int max_touching = 0;
  int max_multiplicity = 0;
  double min_dist_over_diam = 0.0;    // over unclamped cubes
  double max_dist_over_diam = 0.0;
  double pou_sum_err = 0.0;
  double pou_grad_const = 0.0;        // sup_i diam(Q_i) * max |grad psi_i|
  double pou_half_cube_min = 0.0;     // min psi_i over cells centered in Q_i/2
  bool all_pass() const {
    return tiling_exact && distance_ok && ratio_ok && touch_count_ok && multiplicity_ok && pou_ok;
  }
};

WhitneyReport validate(WhitneyCover& cover, const std::vector<std::uint8_t>& open_mask);

void write_cover_jsonl(const std::string& path, WhitneyCover& cover);
WhitneyCover read_cover_jsonl(const std::string& path);

// exact squared euclidean distance (cell units) to the nearest zero cell,
// computed per axis; used by the cover selection and by level-set geometry
std::vector<double> squared_distance_cells(Dims dims, const std::vector<std::uint8_t>& mask);

}  // namespace pstokes
