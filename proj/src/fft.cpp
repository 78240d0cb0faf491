#include "pstokes/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>

#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

struct FftwBuf {
  double* p = nullptr;
  explicit FftwBuf(i64 n) : p(fftw_alloc_real(std::size_t(n))) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwBuf() { fftw_free(p); }
  FftwBuf(const FftwBuf&) = delete;
  FftwBuf& operator=(const FftwBuf&) = delete;
};

struct FftwCBuf {
  fftw_complex* p = nullptr;
  explicit FftwCBuf(i64 n) : p(fftw_alloc_complex(std::size_t(n))) {
    if (!p) throw std::bad_alloc();
  }
  ~FftwCBuf() { fftw_free(p); }
  FftwCBuf(const FftwCBuf&) = delete;
  FftwCBuf& operator=(const FftwCBuf&) = delete;
};

}  // namespace

struct BallAverager::Impl {
  Dims dims;
  double h = 0.0;
  int px = 0, py = 0, pz = 0, pxc = 0;
  std::vector<double> ladder;
  std::map<long long, std::vector<double>> inv_counts;  // key: llround(r * 4096)

  i64 pcells() const { return i64(px) * py * pz; }
  i64 ccells() const { return i64(pxc) * py * pz; }

  i64 pidx(int x, int y, int z) const { return (i64(z) * py + y) * px + x; }

  void forward(const double* pad, fftw_complex* spec) const {
    fftw_plan plan = fftw_plan_dft_r2c_3d(pz, py, px, const_cast<double*>(pad), spec,
                                          FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  void backward(fftw_complex* spec, double* pad) const {
    fftw_plan plan = fftw_plan_dft_c2r_3d(pz, py, px, spec, pad, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  void fill_kernel(double r, double* pad) const {
    i64 n = pcells();
    par_for(n, [&](i64 i) { pad[i] = 0.0; });
    double r2 = r * r;
    int mx = std::min(dims.nx - 1, int(std::floor(r)));
    int my = std::min(dims.ny - 1, int(std::floor(r)));
    int mz = std::min(dims.nz - 1, int(std::floor(r)));
    for (int dz = -mz; dz <= mz; ++dz)
      for (int dy = -my; dy <= my; ++dy)
        for (int dx = -mx; dx <= mx; ++dx) {
          double d2 = double(dx) * dx + double(dy) * dy + double(dz) * dz;
          if (d2 >= r2) continue;
          int wx = dx >= 0 ? dx : dx + px;
          int wy = dy >= 0 ? dy : dy + py;
          int wz = dz >= 0 ? dz : dz + pz;
          pad[pidx(wx, wy, wz)] = 1.0;
        }
  }

  void embed(const ScalarField& g, double* pad) const {
    i64 n = pcells();
    par_for(n, [&](i64 i) { pad[i] = 0.0; });
    par_for(dims.nz, [&](i64 z) {
      for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x)
          pad[pidx(x, y, int(z))] = g.at(0, x, y, int(z));
    });
  }

  // spec_out = spec_a * spec_b / pcells
  void convolve(const fftw_complex* a, const fftw_complex* b, fftw_complex* out) const {
    double scale = 1.0 / double(pcells());
    par_for(ccells(), [&](i64 i) {
      double re = a[i][0] * b[i][0] - a[i][1] * b[i][1];
      double im = a[i][0] * b[i][1] + a[i][1] * b[i][0];
      out[i][0] = re * scale;
      out[i][1] = im * scale;
    });
  }

  const std::vector<double>& counts_for(double r, const fftw_complex* kspec,
                                        const fftw_complex* ones_spec, double* pad,
                                        fftw_complex* work) {
    long long key = llround(r * 4096.0);
    auto it = inv_counts.find(key);
    if (it != inv_counts.end()) return it->second;
    convolve(kspec, ones_spec, work);
    backward(work, pad);
    std::vector<double> inv(std::size_t(dims.cells()));
    par_for(dims.nz, [&](i64 z) {
      for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x) {
          long long c = llround(pad[pidx(x, y, int(z))]);
          if (c < 1) c = 1;
          inv[std::size_t(dims.idx(x, y, int(z)))] = 1.0 / double(c);
        }
    });
    return inv_counts.emplace(key, std::move(inv)).first->second;
  }
};

BallAverager::BallAverager(Dims dims, double h) : impl(new Impl) {
  if (dims.nx < 2 || dims.ny < 2 || dims.nz < 2)
    throw std::invalid_argument("ball averager: box too small");
  impl->dims = dims;
  impl->h = h;
  impl->px = 2 * dims.nx;
  impl->py = 2 * dims.ny;
  impl->pz = 2 * dims.nz;
  impl->pxc = impl->px / 2 + 1;
  double diag = std::sqrt(double(dims.nx) * dims.nx + double(dims.ny) * dims.ny +
                          double(dims.nz) * dims.nz);
  double r = 1.0;
  for (;;) {
    impl->ladder.push_back(r);
    if (r >= diag) break;
    r *= 2.0;
  }
}

BallAverager::~BallAverager() = default;

const std::vector<double>& BallAverager::radii_cells() const { return impl->ladder; }

std::vector<ScalarField> BallAverager::averages(const ScalarField& g) {
  return averages_at(g, impl->ladder);
}

std::vector<ScalarField> BallAverager::averages_at(const ScalarField& g,
                                                   const std::vector<double>& radii) {
  const Dims dims = impl->dims;
  if (g.dims.nx != dims.nx || g.dims.ny != dims.ny || g.dims.nz != dims.nz)
    throw std::invalid_argument("ball averager: field shape mismatch");
  for (double r : radii)
    if (!(r >= 1.0)) throw std::invalid_argument("ball averager: radius below one cell");

  FftwBuf pad(impl->pcells());
  FftwCBuf gspec(impl->ccells()), kspec(impl->ccells()), ones_spec(impl->ccells()),
      work(impl->ccells());

  impl->embed(g, pad.p);
  impl->forward(pad.p, gspec.p);

  bool need_ones = false;
  for (double r : radii)
    if (!impl->inv_counts.count(llround(r * 4096.0))) need_ones = true;
  if (need_ones) {
    ScalarField ones(dims, impl->h);
    ones.fill(1.0);
    impl->embed(ones, pad.p);
    impl->forward(pad.p, ones_spec.p);
  }

  std::vector<ScalarField> out;
  out.reserve(radii.size());
  for (double r : radii) {
    impl->fill_kernel(r, pad.p);
    impl->forward(pad.p, kspec.p);
    const std::vector<double>& inv = impl->counts_for(r, kspec.p, ones_spec.p, pad.p, work.p);
    impl->convolve(kspec.p, gspec.p, work.p);
    impl->backward(work.p, pad.p);
    ScalarField avg(dims, impl->h);
    par_for(dims.nz, [&](i64 z) {
      for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x) {
          i64 id = dims.idx(x, y, int(z));
          avg.v[std::size_t(id)] = pad.p[impl->pidx(x, y, int(z))] * inv[std::size_t(id)];
        }
    });
    out.push_back(std::move(avg));
  }
  return out;
}

ScalarField BallAverager::average_reference(const ScalarField& g, double r) const {
  const Dims dims = impl->dims;
  ScalarField out(dims, impl->h);
  double r2 = r * r;
  int m = int(std::floor(r));
  par_for(dims.nz, [&](i64 z) {
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        double sum = 0.0;
        long long cnt = 0;
        for (int dz = -m; dz <= m; ++dz) {
          int zz = int(z) + dz;
          if (zz < 0 || zz >= dims.nz) continue;
          for (int dy = -m; dy <= m; ++dy) {
            int yy = y + dy;
            if (yy < 0 || yy >= dims.ny) continue;
            for (int dx = -m; dx <= m; ++dx) {
              int xx = x + dx;
              if (xx < 0 || xx >= dims.nx) continue;
              double d2 = double(dx) * dx + double(dy) * dy + double(dz) * dz;
              if (d2 >= r2) continue;
              sum += g.at(0, xx, yy, zz);
              ++cnt;
            }
          }
        }
        out.at(0, x, y, int(z)) = cnt ? sum / double(cnt) : 0.0;
      }
  });
  return out;
}

BallAverager& shared_averager(Dims dims, double h) {
  static std::map<std::tuple<int, int, int, long long>, std::unique_ptr<BallAverager>> cache;
  auto key = std::make_tuple(dims.nx, dims.ny, dims.nz, llround(h * 281474976710656.0));
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<BallAverager>(dims, h)).first;
  return *it->second;
}

ScalarField poisson_zero_dirichlet(const ScalarField& rhs) {
  const Dims dims = rhs.dims;
  const double h = rhs.h;
  const i64 n = dims.cells();
  FftwBuf in(n), out(n);
  for (i64 i = 0; i < n; ++i) in.p[i] = rhs.v[std::size_t(i)];
  fftw_plan fwd = fftw_plan_r2r_3d(dims.nz, dims.ny, dims.nx, in.p, out.p, FFTW_RODFT00,
                                   FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  const double pi = 3.14159265358979323846;
  std::vector<double> lx(dims.nx), ly(dims.ny), lz(dims.nz);
  for (int k = 0; k < dims.nx; ++k)
    lx[k] = (2.0 - 2.0 * std::cos(pi * (k + 1) / (dims.nx + 1))) / (h * h);
  for (int k = 0; k < dims.ny; ++k)
    ly[k] = (2.0 - 2.0 * std::cos(pi * (k + 1) / (dims.ny + 1))) / (h * h);
  for (int k = 0; k < dims.nz; ++k)
    lz[k] = (2.0 - 2.0 * std::cos(pi * (k + 1) / (dims.nz + 1))) / (h * h);
  double scale = 1.0 / (8.0 * (dims.nx + 1.0) * (dims.ny + 1.0) * (dims.nz + 1.0));
  par_for(dims.nz, [&](i64 z) {
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        i64 id = dims.idx(x, y, int(z));
        out.p[id] *= scale / (lx[x] + ly[y] + lz[int(z)]);
      }
  });
  fftw_plan bwd = fftw_plan_r2r_3d(dims.nz, dims.ny, dims.nx, out.p, in.p, FFTW_RODFT00,
                                   FFTW_RODFT00, FFTW_RODFT00, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  ScalarField u(dims, h, rhs.staggering);
  for (i64 i = 0; i < n; ++i) u.v[std::size_t(i)] = in.p[i];
  return u;
}

}  // namespace pstokes
