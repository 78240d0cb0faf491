#include "pstokes/field.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <queue>

namespace pstokes {

static void compute_layer(GridDomain& g) {
  const Dims d = g.dims;
  g.layer.assign(static_cast<std::size_t>(d.cells()), 0);
  g.interior_count = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const i64 i = d.idx(x, y, z);
        if (!g.interior[static_cast<std::size_t>(i)]) continue;
        ++g.interior_count;
        bool edge = false;
        const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                              {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
        for (auto& n : nb) {
          if (!d.in_box(n[0], n[1], n[2]) || !g.interior[static_cast<std::size_t>(d.idx(n[0], n[1], n[2]))]) {
            edge = true;
            break;
          }
        }
        if (edge) g.layer[static_cast<std::size_t>(i)] = 1;
      }
}

static void check_connected(const GridDomain& g, const char* what) {
  const Dims d = g.dims;
  if (g.interior_count == 0) throw std::invalid_argument(std::string(what) + ": empty interior");
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(d.cells()), 0);
  std::queue<i64> q;
  i64 start = -1;
  for (i64 i = 0; i < d.cells() && start < 0; ++i)
    if (g.interior[static_cast<std::size_t>(i)]) start = i;
  q.push(start);
  seen[static_cast<std::size_t>(start)] = 1;
  i64 cnt = 0;
  while (!q.empty()) {
    const i64 i = q.front();
    q.pop();
    ++cnt;
    const int x = static_cast<int>(i % d.nx);
    const int y = static_cast<int>((i / d.nx) % d.ny);
    const int z = static_cast<int>(i / (static_cast<i64>(d.nx) * d.ny));
    const int nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                          {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
    for (auto& n : nb) {
      if (!d.in_box(n[0], n[1], n[2])) continue;
      const i64 j = d.idx(n[0], n[1], n[2]);
      if (g.interior[static_cast<std::size_t>(j)] && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        q.push(j);
      }
    }
  }
  if (cnt != g.interior_count) throw std::invalid_argument(std::string(what) + ": interior not connected");
}

GridDomain GridDomain::box(Dims d, double h, int margin) {
  if (margin < 1) throw std::invalid_argument("box: margin must be >= 1");
  if (d.nx <= 2 * margin || d.ny <= 2 * margin || d.nz <= 2 * margin)
    throw std::invalid_argument("box: margin leaves no interior");
  GridDomain g;
  g.dims = d;
  g.h = h;
  g.interior.assign(static_cast<std::size_t>(d.cells()), 0);
  for (int z = margin; z < d.nz - margin; ++z)
    for (int y = margin; y < d.ny - margin; ++y)
      for (int x = margin; x < d.nx - margin; ++x)
        g.interior[static_cast<std::size_t>(d.idx(x, y, z))] = 1;
  compute_layer(g);
  check_connected(g, "box");
  return g;
}

GridDomain GridDomain::ball(Dims d, double h, std::array<double, 3> c, double r) {
  GridDomain g;
  g.dims = d;
  g.h = h;
  g.interior.assign(static_cast<std::size_t>(d.cells()), 0);
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double dx = (x + 0.5) * h - c[0];
        const double dy = (y + 0.5) * h - c[1];
        const double dz = (z + 0.5) * h - c[2];
        if (dx * dx + dy * dy + dz * dz < r * r)
          g.interior[static_cast<std::size_t>(d.idx(x, y, z))] = 1;
      }
  compute_layer(g);
  check_connected(g, "ball");
  return g;
}

GridDomain GridDomain::lshape(Dims d, double h, int margin) {
  GridDomain g = box(d, h, margin);
  // remove the upper quadrant in x-y, full z extent
  for (int z = 0; z < d.nz; ++z)
    for (int y = d.ny / 2; y < d.ny; ++y)
      for (int x = d.nx / 2; x < d.nx; ++x)
        g.interior[static_cast<std::size_t>(d.idx(x, y, z))] = 0;
  compute_layer(g);
  check_connected(g, "lshape");
  return g;
}

GridDomain GridDomain::from_mask(Dims d, double h, std::vector<std::uint8_t> mask) {
  if (static_cast<i64>(mask.size()) != d.cells()) throw std::invalid_argument("from_mask: size mismatch");
  GridDomain g;
  g.dims = d;
  g.h = h;
  g.interior = std::move(mask);
  compute_layer(g);
  check_connected(g, "from_mask");
  return g;
}

namespace {
constexpr char kMagic[8] = {'P', 'S', 'F', 'I', 'E', 'L', 'D', '1'};

struct SnapHeader {
  char magic[8];
  std::int32_t ncomp;
  std::int32_t staggering;
  std::int64_t nx, ny, nz;
  double h;
};
}  // namespace

template <int NC>
void write_snapshot(const std::string& path, const Field<NC>& f) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_snapshot: cannot open " + path);
  SnapHeader hd{};
  std::memcpy(hd.magic, kMagic, 8);
  hd.ncomp = NC;
  hd.staggering = f.staggering;
  hd.nx = f.dims.nx;
  hd.ny = f.dims.ny;
  hd.nz = f.dims.nz;
  hd.h = f.h;
  if (std::fwrite(&hd, sizeof hd, 1, fp) != 1 ||
      std::fwrite(f.v.data(), sizeof(double), f.v.size(), fp) != f.v.size()) {
    std::fclose(fp);
    throw std::runtime_error("write_snapshot: short write to " + path);
  }
  std::fclose(fp);
}

template <int NC>
Field<NC> read_snapshot(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_snapshot: cannot open " + path);
  SnapHeader hd{};
  if (std::fread(&hd, sizeof hd, 1, fp) != 1 || std::memcmp(hd.magic, kMagic, 8) != 0) {
    std::fclose(fp);
    throw std::runtime_error("read_snapshot: bad header in " + path);
  }
  if (hd.ncomp != NC) {
    std::fclose(fp);
    throw std::runtime_error("read_snapshot: component count mismatch in " + path);
  }
  Field<NC> f(Dims{static_cast<int>(hd.nx), static_cast<int>(hd.ny), static_cast<int>(hd.nz)}, hd.h);
  f.staggering = hd.staggering;
  if (std::fread(f.v.data(), sizeof(double), f.v.size(), fp) != f.v.size()) {
    std::fclose(fp);
    throw std::runtime_error("read_snapshot: short read from " + path);
  }
  std::fclose(fp);
  return f;
}

template void write_snapshot<1>(const std::string&, const Field<1>&);
template void write_snapshot<3>(const std::string&, const Field<3>&);
template void write_snapshot<9>(const std::string&, const Field<9>&);
template void write_snapshot<27>(const std::string&, const Field<27>&);
template Field<1> read_snapshot<1>(const std::string&);
template Field<3> read_snapshot<3>(const std::string&);
template Field<9> read_snapshot<9>(const std::string&);
template Field<27> read_snapshot<27>(const std::string&);

static void vtk_header(std::FILE* fp, const Dims& d, double h, const char* kind) {
  std::fprintf(fp, "# vtk DataFile Version 3.0\n%s\nASCII\nDATASET STRUCTURED_POINTS\n", kind);
  std::fprintf(fp, "DIMENSIONS %d %d %d\n", d.nx, d.ny, d.nz);
  std::fprintf(fp, "ORIGIN %.9g %.9g %.9g\n", 0.5 * h, 0.5 * h, 0.5 * h);
  std::fprintf(fp, "SPACING %.9g %.9g %.9g\n", h, h, h);
  std::fprintf(fp, "POINT_DATA %lld\n", static_cast<long long>(d.cells()));
}

void write_vtk(const std::string& path, const ScalarField& f, const std::string& name) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_vtk: cannot open " + path);
  vtk_header(fp, f.dims, f.h, "field export");
  std::fprintf(fp, "SCALARS %s double 1\nLOOKUP_TABLE default\n", name.c_str());
  for (i64 i = 0; i < f.cells(); ++i) std::fprintf(fp, "%.9g\n", f.at(0, i));
  std::fclose(fp);
}

void write_vtk(const std::string& path, const VectorField& f, const std::string& name) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw std::runtime_error("write_vtk: cannot open " + path);
  vtk_header(fp, f.dims, f.h, "field export");
  std::fprintf(fp, "VECTORS %s double\n", name.c_str());
  for (i64 i = 0; i < f.cells(); ++i)
    std::fprintf(fp, "%.9g %.9g %.9g\n", f.at(0, i), f.at(1, i), f.at(2, i));
  std::fclose(fp);
}

}  // namespace pstokes
