#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pstokes {

using i64 = std::int64_t;
using u8 = std::uint8_t;

struct Dims {
  int nx = 0, ny = 0, nz = 0;
  i64 cells() const { return static_cast<i64>(nx) * ny * nz; }
  bool operator==(const Dims& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
  bool operator!=(const Dims& o) const { return !(*this == o); }
  bool in_box(int x, int y, int z) const {
    return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
  }
  i64 idx(int x, int y, int z) const { return (static_cast<i64>(z) * ny + y) * nx + x; }
};

// Cell-centered domain on a uniform grid. The box is [0, nx*h] x [0, ny*h] x
// [0, nz*h]; cell (x,y,z) has center ((x+.5)h, (y+.5)h, (z+.5)h). interior
// marks cells of the open domain; layer marks interior cells with a face
// neighbor outside the domain (or outside the box). Zero-trace fields vanish
// on layer and exterior cells; exterior values of other fields are padding.
struct GridDomain {
  Dims dims;
  double h = 0.0;
  std::vector<std::uint8_t> interior;
  std::vector<std::uint8_t> layer;
  i64 interior_count = 0;

  bool is_interior(i64 i) const { return interior[static_cast<std::size_t>(i)] != 0; }
  bool is_layer(i64 i) const { return layer[static_cast<std::size_t>(i)] != 0; }
  // cells carrying velocity unknowns
  bool is_free(i64 i) const { return interior[static_cast<std::size_t>(i)] && !layer[static_cast<std::size_t>(i)]; }
  double volume() const { return static_cast<double>(interior_count) * h * h * h; }

  std::array<double, 3> center(int x, int y, int z) const {
    return {(x + 0.5) * h, (y + 0.5) * h, (z + 0.5) * h};
  }

  static GridDomain box(Dims d, double h, int margin);
  static GridDomain ball(Dims d, double h, std::array<double, 3> c, double r);
  static GridDomain lshape(Dims d, double h, int margin);
  // validates nonempty connected interior, recomputes the layer
  static GridDomain from_mask(Dims d, double h, std::vector<std::uint8_t> mask);
};

template <int NC>
struct Field {
  Dims dims;
  double h = 0.0;
  int staggering = 0;  // 0 = cell-centered; the only value in use
  std::vector<double> v;

  Field() = default;
  Field(Dims d, double h_, int stag = 0)
      : dims(d), h(h_), staggering(stag), v(static_cast<std::size_t>(NC) * d.cells(), 0.0) {}

  static constexpr int ncomp = NC;
  i64 cells() const { return dims.cells(); }

  double& at(int c, i64 i) { return v[static_cast<std::size_t>(c) * cells() + i]; }
  double at(int c, i64 i) const { return v[static_cast<std::size_t>(c) * cells() + i]; }
  double& at(int c, int x, int y, int z) { return at(c, dims.idx(x, y, z)); }
  double at(int c, int x, int y, int z) const { return at(c, dims.idx(x, y, z)); }
  double* comp(int c) { return v.data() + static_cast<std::size_t>(c) * cells(); }
  const double* comp(int c) const { return v.data() + static_cast<std::size_t>(c) * cells(); }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

using ScalarField = Field<1>;
using VectorField = Field<3>;
// t(i,j) = component 3*i+j; gradient convention t(i,j) = d_j u_i
using TensorField = Field<9>;
// third-order stack: component 9*i+3*j+k = d_k d_j w_i
using Tensor3Field = Field<27>;

template <int NC>
void check_same_layout(const Field<NC>& f, const GridDomain& dom, const char* where = "field") {
  if (f.dims != dom.dims) throw std::invalid_argument(std::string(where) + ": field/domain dims mismatch");
  if (f.staggering != 0) throw std::invalid_argument(std::string(where) + ": mismatched staggering");
}

// Binary snapshot: fixed little-endian header (magic, ncomp, staggering,
// dims, h) then component-major row-major float64 payload, x fastest.
template <int NC>
void write_snapshot(const std::string& path, const Field<NC>& f);
template <int NC>
Field<NC> read_snapshot(const std::string& path);

// Legacy ASCII VTK structured-points export (scalars or vectors).
void write_vtk(const std::string& path, const ScalarField& f, const std::string& name);
void write_vtk(const std::string& path, const VectorField& f, const std::string& name);

}  // namespace pstokes
