#include "pstokes/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

constexpr double kInf = 1e20;
constexpr double kSqrt3 = 1.7320508075688772;

// lower envelope of parabolas; exact squared distances along one line
void dt_line(int n, const double* f, double* d, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = double(q - v[k]) * (q - v[k]) + f[v[k]];
  }
}

void dt_axis(Dims dims, std::vector<double>& D, int axis) {
  const int n[3] = {dims.nx, dims.ny, dims.nz};
  const i64 stride[3] = {1, dims.nx, i64(dims.nx) * dims.ny};
  const int na = n[axis];
  const i64 sa = stride[axis];
  const int u = axis == 0 ? 1 : 0;
  const int w = axis == 2 ? 1 : 2;
  const i64 rows = i64(n[u]) * n[w];
  par_for(rows, [&](i64 r) {
    thread_local std::vector<double> f, d, z;
    thread_local std::vector<int> v;
    f.resize(na);
    d.resize(na);
    z.resize(na + 1);
    v.resize(na);
    int cu = int(r % n[u]);
    int cw = int(r / n[u]);
    i64 base = stride[u] * cu + stride[w] * cw;
    for (int q = 0; q < na; ++q) f[q] = D[base + sa * q];
    dt_line(na, f.data(), d.data(), v.data(), z.data());
    for (int q = 0; q < na; ++q) D[base + sa * q] = d[q];
  });
}

std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int floor_div16(int a) { return a >= 0 ? a / 16 : -((-a + 15) / 16); }

// closed-interval overlap in sixteenth-of-cell units
bool ivl_overlap(int lo1, int hi1, int lo2, int hi2) {
  return std::max(lo1, lo2) <= std::min(hi1, hi2);
}

// closed 9/8 Q_j against closed Q_k
bool bump_box_hits_cube(const DyadicCube& j, const DyadicCube& k) {
  int aj[3] = {j.ax, j.ay, j.az};
  int ak[3] = {k.ax, k.ay, k.az};
  for (int a = 0; a < 3; ++a) {
    int lo1 = 16 * aj[a] - j.side, hi1 = 16 * aj[a] + 17 * j.side;
    int lo2 = 16 * ak[a], hi2 = 16 * ak[a] + 16 * k.side;
    if (!ivl_overlap(lo1, hi1, lo2, hi2)) return false;
  }
  return true;
}

bool cubes_touch(const DyadicCube& a, const DyadicCube& b) {
  int pa[3] = {a.ax, a.ay, a.az};
  int pb[3] = {b.ax, b.ay, b.az};
  for (int d = 0; d < 3; ++d)
    if (!ivl_overlap(pa[d], pa[d] + a.side, pb[d], pb[d] + b.side)) return false;
  return true;
}

double quintic_profile(double xi) {
  double ax = std::fabs(xi);
  if (ax <= 0.25) return 1.0;
  if (ax >= 0.5625) return 0.0;
  double t = (0.5625 - ax) / 0.3125;
  return ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
}

double bump_value(const DyadicCube& q, int x, int y, int z) {
  double s = q.side;
  double out = 1.0;
  int a[3] = {q.ax, q.ay, q.az};
  int c[3] = {x, y, z};
  for (int d = 0; d < 3; ++d) {
    double xi = ((c[d] + 0.5) - (a[d] + 0.5 * s)) / s;
    out *= quintic_profile(xi);
    if (out == 0.0) return 0.0;
  }
  return out;
}

int cube_level_m(Dims dims, int side) {
  int j = 0;
  while ((1 << (j + 1)) <= side) ++j;
  int nx = dims.nx;
  bool pow2 = (nx & (nx - 1)) == 0;
  if (pow2) {
    int jx = 0;
    while ((1 << (jx + 1)) <= nx) ++jx;
    return jx - j;
  }
  return -j;
}

void sort_cubes(std::vector<DyadicCube>& cubes) {
  std::sort(cubes.begin(), cubes.end(), [](const DyadicCube& a, const DyadicCube& b) {
    if (a.m != b.m) return a.m < b.m;
    if (a.ax != b.ax) return a.ax < b.ax;
    if (a.ay != b.ay) return a.ay < b.ay;
    return a.az < b.az;
  });
}

void fill_cell_map(WhitneyCover& c) {
  c.cell_cube.assign(c.dims.cells(), -1);
  c.open_cells = 0;
  for (std::size_t i = 0; i < c.cubes.size(); ++i) {
    const DyadicCube& q = c.cubes[i];
    if (q.ax < 0 || q.ay < 0 || q.az < 0 || q.ax + q.side > c.dims.nx ||
        q.ay + q.side > c.dims.ny || q.az + q.side > c.dims.nz)
      throw std::invalid_argument("whitney: cube extends outside the box");
    for (int z = q.az; z < q.az + q.side; ++z)
      for (int y = q.ay; y < q.ay + q.side; ++y)
        for (int x = q.ax; x < q.ax + q.side; ++x) {
          i64 id = c.dims.idx(x, y, z);
          if (c.cell_cube[id] != -1)
            throw std::invalid_argument("whitney: cubes overlap");
          c.cell_cube[id] = std::int32_t(i);
          ++c.open_cells;
        }
  }
}

}  // namespace

std::vector<double> squared_distance_cells(Dims dims, const std::vector<std::uint8_t>& mask) {
  if (i64(mask.size()) != dims.cells())
    throw std::invalid_argument("squared_distance_cells: mask size mismatch");
  std::vector<double> D(mask.size());
  for (i64 i = 0; i < i64(mask.size()); ++i) D[i] = mask[i] ? kInf : 0.0;
  dt_axis(dims, D, 0);
  dt_axis(dims, D, 1);
  dt_axis(dims, D, 2);
  return D;
}

WhitneyCover decompose(Dims dims, double h, const std::vector<std::uint8_t>& open_mask) {
  if (i64(open_mask.size()) != dims.cells())
    throw std::invalid_argument("whitney: mask size mismatch");
  i64 open = 0;
  for (auto m : open_mask) open += m ? 1 : 0;
  if (open == 0) throw std::invalid_argument("whitney: open set is empty");
  if (open == dims.cells())
    throw std::invalid_argument("whitney: open set covers the whole box");

  std::vector<double> D2 = squared_distance_cells(dims, open_mask);

  int nmin = std::min(dims.nx, std::min(dims.ny, dims.nz));
  int jcap = 0;
  while ((1 << (jcap + 1)) <= nmin) ++jcap;
  const int jmax = jcap;

  // per-cell shell side, then candidate dyadic blocks per level
  std::vector<std::int8_t> levels(open_mask.size(), -1);
  std::vector<std::uint8_t> clamped_cell(open_mask.size(), 0);
  par_for(dims.nz, [&](i64 z) {
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        i64 id = dims.idx(x, int(y), int(z));
        if (!open_mask[id]) continue;
        double wall = std::min({x + 0.5, dims.nx - x - 0.5, y + 0.5, dims.ny - y - 0.5,
                                double(z) + 0.5, dims.nz - z - 0.5});
        double d = std::min(std::sqrt(D2[id]) - 0.5, wall);
        double lo = d / (4.0 * kSqrt3);
        int j = 0;
        if (lo > 1.0) j = std::min(30, int(std::ceil(std::log2(lo))));
        while (j > 0 && double(1 << j) >= 2.0 * lo) --j;
        while (j < 30 && double(1 << j) < lo) ++j;
        int jc = std::min(std::max(j, 1), jmax);
        levels[id] = std::int8_t(jc);
        clamped_cell[id] = jc != j ? 1 : 0;
      }
  });

  // candidate anchors per level, coded as cell index of the anchor corner
  std::vector<std::vector<i64>> cand(jmax + 1);
  for (i64 id = 0; id < dims.cells(); ++id) {
    if (levels[id] < 0) continue;
    int j = levels[id];
    int s = 1 << j;
    int x = int(id % dims.nx);
    int y = int((id / dims.nx) % dims.ny);
    int z = int(id / (i64(dims.nx) * dims.ny));
    cand[j].push_back(dims.idx(x / s * s, y / s * s, z / s * s));
  }
  for (auto& v : cand) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  // keep a candidate only if no strictly coarser candidate contains it
  std::vector<DyadicCube> cubes;
  for (int j = 1; j <= jmax; ++j) {
    for (i64 code : cand[j]) {
      int x = int(code % dims.nx);
      int y = int((code / dims.nx) % dims.ny);
      int z = int(code / (i64(dims.nx) * dims.ny));
      bool dominated = false;
      for (int jp = j + 1; jp <= jmax && !dominated; ++jp) {
        int sp = 1 << jp;
        i64 anc = dims.idx(x / sp * sp, y / sp * sp, z / sp * sp);
        dominated = std::binary_search(cand[jp].begin(), cand[jp].end(), anc);
      }
      if (!dominated) {
        DyadicCube q;
        q.side = 1 << j;
        q.ax = x;
        q.ay = y;
        q.az = z;
        cubes.push_back(q);
      }
    }
  }

  // purity: a clamped floor block may straddle the boundary of O (or the
  // box, for odd extents); demote such blocks to covered single cells
  std::vector<DyadicCube> final_cubes;
  final_cubes.reserve(cubes.size());
  for (const DyadicCube& q : cubes) {
    bool pure = q.ax + q.side <= dims.nx && q.ay + q.side <= dims.ny && q.az + q.side <= dims.nz;
    if (pure)
      for (int z = q.az; z < q.az + q.side && pure; ++z)
        for (int y = q.ay; y < q.ay + q.side && pure; ++y)
          for (int x = q.ax; x < q.ax + q.side; ++x)
            if (!open_mask[dims.idx(x, y, z)]) {
              pure = false;
              break;
            }
    if (pure) {
      final_cubes.push_back(q);
      continue;
    }
    for (int z = q.az; z < std::min(q.az + q.side, dims.nz); ++z)
      for (int y = q.ay; y < std::min(q.ay + q.side, dims.ny); ++y)
        for (int x = q.ax; x < std::min(q.ax + q.side, dims.nx); ++x)
          if (open_mask[dims.idx(x, y, z)]) {
            DyadicCube u;
            u.side = 1;
            u.ax = x;
            u.ay = y;
            u.az = z;
            u.clamped = true;
            final_cubes.push_back(u);
          }
  }

  for (DyadicCube& q : final_cubes) {
    q.m = cube_level_m(dims, q.side);
    if (q.side > 1) {
      bool cl = false;
      for (int z = q.az; z < q.az + q.side && !cl; ++z)
        for (int y = q.ay; y < q.ay + q.side && !cl; ++y)
          for (int x = q.ax; x < q.ax + q.side; ++x)
            if (clamped_cell[dims.idx(x, y, z)]) {
              cl = true;
              break;
            }
      q.clamped = q.clamped || cl;
    }
  }
  sort_cubes(final_cubes);

  WhitneyCover cover;
  cover.dims = dims;
  cover.h = h;
  cover.cubes = std::move(final_cubes);
  fill_cell_map(cover);
  if (cover.open_cells != open)
    throw std::logic_error("whitney: tiling does not cover the open set");
  for (i64 id = 0; id < dims.cells(); ++id)
    if ((cover.cell_cube[id] >= 0) != (open_mask[id] != 0))
      throw std::logic_error("whitney: tiling mismatch with the open set");
  return cover;
}

WhitneyCover make_cover(Dims dims, double h, std::vector<DyadicCube> cubes) {
  for (DyadicCube& q : cubes) q.m = cube_level_m(dims, q.side);
  sort_cubes(cubes);
  WhitneyCover cover;
  cover.dims = dims;
  cover.h = h;
  cover.cubes = std::move(cubes);
  fill_cell_map(cover);
  return cover;
}

const std::vector<std::vector<std::int32_t>>& neighbors(WhitneyCover& cover) {
  if (!cover.bump_neighbors.empty()) return cover.bump_neighbors;
  const Dims dims = cover.dims;
  const int nc = int(cover.cubes.size());
  std::vector<std::vector<std::int32_t>> A(nc);
  std::vector<std::int32_t> seen;
  for (int j = 0; j < nc; ++j) {
    const DyadicCube& qj = cover.cubes[j];
    int lo[3], hi[3];
    int aj[3] = {qj.ax, qj.ay, qj.az};
    int nn[3] = {dims.nx, dims.ny, dims.nz};
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max(0, floor_div16(16 * aj[d] - qj.side) - 1);
      hi[d] = std::min(nn[d] - 1, (16 * aj[d] + 17 * qj.side) / 16 + 1);
    }
    seen.clear();
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          std::int32_t k = cover.cell_cube[dims.idx(x, y, z)];
          if (k >= 0) seen.push_back(k);
        }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (std::int32_t k : seen)
      if (bump_box_hits_cube(qj, cover.cubes[k])) A[k].push_back(j);
  }
  for (auto& v : A) std::sort(v.begin(), v.end());
  cover.bump_neighbors = std::move(A);
  return cover.bump_neighbors;
}

std::vector<std::vector<std::int32_t>> touching_lists(const WhitneyCover& cover) {
  const Dims dims = cover.dims;
  const int nc = int(cover.cubes.size());
  std::vector<std::vector<std::int32_t>> T(nc);
  std::vector<std::int32_t> seen;
  for (int i = 0; i < nc; ++i) {
    const DyadicCube& qi = cover.cubes[i];
    seen.clear();
    for (int z = std::max(0, qi.az - 1); z <= std::min(dims.nz - 1, qi.az + qi.side); ++z)
      for (int y = std::max(0, qi.ay - 1); y <= std::min(dims.ny - 1, qi.ay + qi.side); ++y)
        for (int x = std::max(0, qi.ax - 1); x <= std::min(dims.nx - 1, qi.ax + qi.side); ++x) {
          std::int32_t k = cover.cell_cube[dims.idx(x, y, z)];
          if (k >= 0 && k != i) seen.push_back(k);
        }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (std::int32_t k : seen)
      if (cubes_touch(qi, cover.cubes[k])) T[i].push_back(k);
  }
  return T;
}

void partition_of_unity(WhitneyCover& cover) {
  if (cover.has_pou()) return;
  const Dims dims = cover.dims;
  const i64 cells = dims.cells();
  const int nc = int(cover.cubes.size());

  auto support_range = [&](const DyadicCube& q, int lo[3], int hi[3]) {
    int a[3] = {q.ax, q.ay, q.az};
    int nn[3] = {dims.nx, dims.ny, dims.nz};
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max(0, floor_div16(16 * a[d] - q.side) - 1);
      hi[d] = std::min(nn[d] - 1, (16 * a[d] + 17 * q.side) / 16 + 1);
    }
  };
  auto in_support = [](const DyadicCube& q, int x, int y, int z) {
    int a[3] = {q.ax, q.ay, q.az};
    int c[3] = {x, y, z};
    for (int d = 0; d < 3; ++d)
      if (std::abs(16 * c[d] + 8 - 16 * a[d] - 8 * q.side) >= 9 * q.side) return false;
    return true;
  };

  std::vector<std::int32_t> cnt(cells, 0);
  for (int i = 0; i < nc; ++i) {
    const DyadicCube& q = cover.cubes[i];
    int lo[3], hi[3];
    support_range(q, lo, hi);
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          i64 id = dims.idx(x, y, z);
          if (cover.cell_cube[id] >= 0 && in_support(q, x, y, z)) ++cnt[id];
        }
  }
  cover.cover_start.assign(cells + 1, 0);
  for (i64 c = 0; c < cells; ++c) cover.cover_start[c + 1] = cover.cover_start[c] + cnt[c];
  i64 total = cover.cover_start[cells];
  cover.cover_cube.assign(total, -1);
  cover.cover_psi.assign(total, 0.0);
  std::vector<i64> cursor(cover.cover_start.begin(), cover.cover_start.end() - 1);
  for (int i = 0; i < nc; ++i) {
    const DyadicCube& q = cover.cubes[i];
    int lo[3], hi[3];
    support_range(q, lo, hi);
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          i64 id = dims.idx(x, y, z);
          if (cover.cell_cube[id] < 0 || !in_support(q, x, y, z)) continue;
          i64 slot = cursor[id]++;
          cover.cover_cube[slot] = i;
          cover.cover_psi[slot] = bump_value(q, x, y, z);
        }
  }
  par_for(cells, [&](i64 id) {
    if (cover.cell_cube[id] < 0) return;
    double sigma = 0.0;
    for (i64 s = cover.cover_start[id]; s < cover.cover_start[id + 1]; ++s)
      sigma += cover.cover_psi[s];
    for (i64 s = cover.cover_start[id]; s < cover.cover_start[id + 1]; ++s)
      cover.cover_psi[s] /= sigma;
  });
}

namespace {

double psi_at(const WhitneyCover& c, int cube, int x, int y, int z) {
  if (x < 0 || y < 0 || z < 0 || x >= c.dims.nx || y >= c.dims.ny || z >= c.dims.nz) return 0.0;
  i64 id = c.dims.idx(x, y, z);
  i64 lo = c.cover_start[id], hi = c.cover_start[id + 1];
  const std::int32_t* base = c.cover_cube.data();
  const std::int32_t* it = std::lower_bound(base + lo, base + hi, std::int32_t(cube));
  if (it != base + hi && *it == cube) return c.cover_psi[it - base];
  return 0.0;
}

}  // namespace

WhitneyReport validate(WhitneyCover& cover, const std::vector<std::uint8_t>& open_mask) {
  const Dims dims = cover.dims;
  const double h = cover.h;
  WhitneyReport rep;
  rep.cube_count = int(cover.cubes.size());
  rep.clamped = cover.clamped_count();
  for (const auto& q : cover.cubes) rep.sub_resolution += q.side == 1 ? 1 : 0;

  // (a) exact tiling against the mask
  rep.tiling_exact = true;
  if (i64(open_mask.size()) != dims.cells()) throw std::invalid_argument("validate: mask size");
  for (i64 id = 0; id < dims.cells(); ++id)
    if ((cover.cell_cube[id] >= 0) != (open_mask[id] != 0)) {
      rep.tiling_exact = false;
      break;
    }

  // (b) diam < dist(Q, complement) <= 4 diam, exact region distances
  std::vector<double> D2 = squared_distance_cells(dims, open_mask);
  std::vector<i64> interface_cells;
  for (i64 id = 0; id < dims.cells(); ++id) {
    if (open_mask[id]) continue;
    int x = int(id % dims.nx);
    int y = int((id / dims.nx) % dims.ny);
    int z = int(id / (i64(dims.nx) * dims.ny));
    bool touch = false;
    for (int dz = -1; dz <= 1 && !touch; ++dz)
      for (int dy = -1; dy <= 1 && !touch; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          int xx = x + dx, yy = y + dy, zz = z + dz;
          if (xx < 0 || yy < 0 || zz < 0 || xx >= dims.nx || yy >= dims.ny || zz >= dims.nz)
            continue;
          if (open_mask[dims.idx(xx, yy, zz)]) {
            touch = true;
            break;
          }
        }
    if (touch) interface_cells.push_back(id);
  }
  const int B = 8;
  int nbx = (dims.nx + B - 1) / B, nby = (dims.ny + B - 1) / B, nbz = (dims.nz + B - 1) / B;
  std::vector<std::vector<std::int32_t>> buckets(i64(nbx) * nby * nbz);
  for (i64 id : interface_cells) {
    int x = int(id % dims.nx);
    int y = int((id / dims.nx) % dims.ny);
    int z = int(id / (i64(dims.nx) * dims.ny));
    buckets[(i64(z / B) * nby + y / B) * nbx + x / B].push_back(std::int32_t(id));
  }
  auto box_gap2 = [](const double lo1[3], const double hi1[3], const double lo2[3],
                     const double hi2[3]) {
    double g2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      double g = std::max(0.0, std::max(lo1[d] - hi2[d], lo2[d] - hi1[d]));
      g2 += g * g;
    }
    return g2;
  };

  rep.distance_ok = true;
  rep.min_dist_over_diam = kInf;
  rep.max_dist_over_diam = 0.0;
  int nc = int(cover.cubes.size());
  std::vector<double> dist_cells(nc, 0.0);
  par_for(nc, [&](i64 ci) {
    const DyadicCube& q = cover.cubes[ci];
    double qlo[3] = {double(q.ax), double(q.ay), double(q.az)};
    double qhi[3] = {double(q.ax + q.side), double(q.ay + q.side), double(q.az + q.side)};
    double best = std::min({qlo[0], qlo[1], qlo[2], dims.nx - qhi[0], dims.ny - qhi[1],
                            dims.nz - qhi[2]});
    best = std::max(best, 0.0);
    double best2 = best * best;
    double ub2 = kInf;
    for (int z = q.az; z < q.az + q.side; ++z)
      for (int y = q.ay; y < q.ay + q.side; ++y)
        for (int x = q.ax; x < q.ax + q.side; ++x)
          ub2 = std::min(ub2, D2[dims.idx(x, y, z)]);
    best2 = std::min(best2, ub2);
    for (int bz = 0; bz < nbz; ++bz)
      for (int by = 0; by < nby; ++by)
        for (int bx = 0; bx < nbx; ++bx) {
          const auto& lst = buckets[(i64(bz) * nby + by) * nbx + bx];
          if (lst.empty()) continue;
          double blo[3] = {double(bx) * B, double(by) * B, double(bz) * B};
          double bhi[3] = {std::min<double>(dims.nx, blo[0] + B),
                           std::min<double>(dims.ny, blo[1] + B),
                           std::min<double>(dims.nz, blo[2] + B)};
          if (box_gap2(qlo, qhi, blo, bhi) >= best2) continue;
          for (std::int32_t cid : lst) {
            int x = int(cid % dims.nx);
            int y = int((cid / dims.nx) % dims.ny);
            int z = int(cid / (i64(dims.nx) * dims.ny));
            double clo[3] = {double(x), double(y), double(z)};
            double chi[3] = {double(x + 1), double(y + 1), double(z + 1)};
            best2 = std::min(best2, box_gap2(qlo, qhi, clo, chi));
          }
        }
    dist_cells[ci] = std::sqrt(best2);
  });
  for (int ci = 0; ci < nc; ++ci) {
    const DyadicCube& q = cover.cubes[ci];
    if (q.clamped) continue;
    double dist = dist_cells[ci] * h;
    double diam = q.diam(h);
    rep.min_dist_over_diam = std::min(rep.min_dist_over_diam, dist / diam);
    rep.max_dist_over_diam = std::max(rep.max_dist_over_diam, dist / diam);
    if (!(dist > diam - h && dist <= 4.0 * diam + h)) rep.distance_ok = false;
  }
  if (rep.min_dist_over_diam == kInf) rep.min_dist_over_diam = 0.0;

  // (c) touching side ratios, (d) touching counts
  auto T = touching_lists(cover);
  rep.ratio_ok = true;
  rep.touch_count_ok = true;
  for (int i = 0; i < nc; ++i) {
    rep.max_touching = std::max(rep.max_touching, int(T[i].size()));
    if (int(T[i].size()) > 56) rep.touch_count_ok = false;
    if (cover.cubes[i].clamped) continue;
    for (std::int32_t j : T[i]) {
      if (cover.cubes[j].clamped) continue;
      int si = cover.cubes[i].side, sj = cover.cubes[j].side;
      if (si > 2 * sj || sj > 2 * si) rep.ratio_ok = false;
    }
  }

  // (e) multiplicity of the 3/2-dilated family at cell centers
  std::vector<std::int32_t> mult(dims.cells(), 0);
  for (const DyadicCube& q : cover.cubes) {
    int a[3] = {q.ax, q.ay, q.az};
    int nn[3] = {dims.nx, dims.ny, dims.nz};
    int lo[3], hi[3];
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max(0, floor_div16(16 * a[d] + 8 * q.side - 24 * q.side) - 1);
      hi[d] = std::min(nn[d] - 1, (16 * a[d] + 8 * q.side + 24 * q.side) / 16 + 1);
    }
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          int c[3] = {x, y, z};
          bool in = true;
          for (int d = 0; d < 3; ++d)
            if (std::abs(16 * c[d] + 8 - 16 * a[d] - 8 * q.side) > 24 * q.side) {
              in = false;
              break;
            }
          if (in) ++mult[dims.idx(x, y, z)];
        }
  }
  for (i64 id = 0; id < dims.cells(); ++id)
    rep.max_multiplicity = std::max(rep.max_multiplicity, int(mult[id]));
  rep.multiplicity_ok = rep.max_multiplicity <= 56;

  // (f) partition of unity: sum to one on O, support, gradient scaling,
  // full weight on the half cubes
  partition_of_unity(cover);
  double sum_err = 0.0;
  for (i64 id = 0; id < dims.cells(); ++id) {
    if (cover.cell_cube[id] < 0) {
      if (cover.cover_start[id + 1] != cover.cover_start[id]) sum_err = kInf;
      continue;
    }
    double s = 0.0;
    for (i64 k = cover.cover_start[id]; k < cover.cover_start[id + 1]; ++k)
      s += cover.cover_psi[k];
    sum_err = std::max(sum_err, std::fabs(s - 1.0));
  }
  rep.pou_sum_err = sum_err;

  std::vector<double> grad_const(nc, 0.0), half_min(nc, 1.0);
  par_for(nc, [&](i64 ci) {
    const DyadicCube& q = cover.cubes[ci];
    int a[3] = {q.ax, q.ay, q.az};
    int nn[3] = {dims.nx, dims.ny, dims.nz};
    int lo[3], hi[3];
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::max(0, floor_div16(16 * a[d] - q.side) - 2);
      hi[d] = std::min(nn[d] - 1, (16 * a[d] + 17 * q.side) / 16 + 2);
    }
    double gmax = 0.0;
    for (int z = lo[2]; z <= hi[2]; ++z)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int x = lo[0]; x <= hi[0]; ++x) {
          double gx = (psi_at(cover, int(ci), x + 1, y, z) - psi_at(cover, int(ci), x - 1, y, z));
          double gy = (psi_at(cover, int(ci), x, y + 1, z) - psi_at(cover, int(ci), x, y - 1, z));
          double gz = (psi_at(cover, int(ci), x, y, z + 1) - psi_at(cover, int(ci), x, y, z - 1));
          gmax = std::max(gmax, std::sqrt(gx * gx + gy * gy + gz * gz) / (2.0 * h));
        }
    grad_const[ci] = q.diam(h) * gmax;
    double hmin = 1.0;
    for (int z = q.az; z < q.az + q.side; ++z)
      for (int y = q.ay; y < q.ay + q.side; ++y)
        for (int x = q.ax; x < q.ax + q.side; ++x) {
          int c[3] = {x, y, z};
          bool in_half = true;
          for (int d = 0; d < 3; ++d)
            if (std::abs(16 * c[d] + 8 - 16 * a[d] - 8 * q.side) > 4 * q.side) {
              in_half = false;
              break;
            }
          if (in_half) hmin = std::min(hmin, psi_at(cover, int(ci), x, y, z));
        }
    half_min[ci] = hmin;
  });
  rep.pou_grad_const = 0.0;
  rep.pou_half_cube_min = 1.0;
  for (int ci = 0; ci < nc; ++ci) {
    rep.pou_grad_const = std::max(rep.pou_grad_const, grad_const[ci]);
    rep.pou_half_cube_min = std::min(rep.pou_half_cube_min, half_min[ci]);
  }
  rep.pou_ok = rep.pou_sum_err <= 1e-12 && rep.pou_grad_const <= 64.0 &&
               rep.pou_half_cube_min >= 1.0 - 1e-9;
  return rep;
}

void write_cover_jsonl(const std::string& path, WhitneyCover& cover) {
  neighbors(cover);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "{\"type\":\"whitney_cover\",\"dims\":[" << cover.dims.nx << "," << cover.dims.ny << ","
      << cover.dims.nz << "],\"h\":" << fmt_g17(cover.h) << ",\"cubes\":" << cover.cubes.size()
      << "}\n";
  for (std::size_t i = 0; i < cover.cubes.size(); ++i) {
    const DyadicCube& q = cover.cubes[i];
    out << "{\"m\":" << q.m << ",\"index\":[" << q.ax / q.side << "," << q.ay / q.side << ","
        << q.az / q.side << "],\"side\":" << fmt_g17(q.side_length(cover.h))
        << ",\"anchor_cells\":[" << q.ax << "," << q.ay << "," << q.az
        << "],\"side_cells\":" << q.side << ",\"clamped\":" << (q.clamped ? "true" : "false")
        << ",\"neighbors\":[";
    const auto& A = cover.bump_neighbors[i];
    for (std::size_t k = 0; k < A.size(); ++k) out << (k ? "," : "") << A[k];
    out << "]}\n";
  }
}

WhitneyCover read_cover_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty cover file " + path);
  nlohmann::json head = nlohmann::json::parse(line);
  if (head.value("type", "") != "whitney_cover")
    throw std::runtime_error("not a whitney cover file: " + path);
  Dims dims{head["dims"][0].get<int>(), head["dims"][1].get<int>(), head["dims"][2].get<int>()};
  double h = head["h"].get<double>();
  std::vector<DyadicCube> cubes;
  std::vector<std::vector<std::int32_t>> A;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    DyadicCube q;
    q.side = j["side_cells"].get<int>();
    q.ax = j["anchor_cells"][0].get<int>();
    q.ay = j["anchor_cells"][1].get<int>();
    q.az = j["anchor_cells"][2].get<int>();
    q.clamped = j["clamped"].get<bool>();
    cubes.push_back(q);
    A.push_back(j["neighbors"].get<std::vector<std::int32_t>>());
  }
  WhitneyCover cover = make_cover(dims, h, std::move(cubes));
  cover.bump_neighbors = std::move(A);
  return cover;
}

}  // namespace pstokes
