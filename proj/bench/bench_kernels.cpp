// Wall-clock comparison between the production kernels and the serial
// reference paths kept for testing, plus agreement checks between the two.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "CLI11.hpp"
#include "pstokes/fft.hpp"
#include "pstokes/field.hpp"
#include "pstokes/maxweight.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/parallel.hpp"
#include "pstokes/rng.hpp"

using namespace pstokes;

namespace {

double time_best(int repeats, const std::function<void()>& body) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

ScalarField random_scalar(const Dims& d, double h, std::uint64_t seed) {
  ScalarField g(d, h);
  Rng rng(seed);
  for (double& x : g.v) x = rng.uniform(0.0, 1.0);
  return g;
}

VectorField random_vector(const Dims& d, double h, std::uint64_t seed) {
  VectorField v(d, h);
  Rng rng(seed);
  for (double& x : v.v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void row(const std::string& name, const std::string& size, double t_ref, double t_fast,
         double diff) {
  std::printf("%-28s %-6s %10.4gs %10.4gs %8.1fx   %.3g\n", name.c_str(), size.c_str(), t_ref,
              t_fast, t_ref / t_fast, diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel timings: serial reference vs production path"};
  int threads = 0;
  int repeats = 3;
  app.add_option("--threads", threads, "thread pool size (0 = default)");
  app.add_option("--repeats", repeats, "repetitions per timing (best is kept)");
  CLI11_PARSE(app, argc, argv);
  set_threads(threads);

  std::printf("%-28s %-6s %11s %11s %9s   %s\n", "kernel", "size", "reference", "production",
              "speedup", "max rel diff");

  {
    const Dims d{24, 24, 24};
    const ScalarField g = random_scalar(d, 1.0 / 24, 11);
    ScalarField fast(d, g.h), ref(d, g.h);
    const double t_fast = time_best(repeats, [&] { fast = maximal(g); });
    const double t_ref = time_best(1, [&] { ref = maximal_reference(g); });
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.v.size(); ++i)
      diff = std::max(diff, std::fabs(fast.v[i] - ref.v[i]) / ref.v[i]);
    row("maximal", "24^3", t_ref, t_fast, diff);
  }

  {
    const Dims d{32, 32, 32};
    const ScalarField g = random_scalar(d, 1.0 / 32, 12);
    BallAverager av(d, g.h);
    const double r = av.radii_cells()[3];
    std::vector<ScalarField> fast;
    ScalarField ref(d, g.h);
    const double t_fast = time_best(repeats, [&] { fast = av.averages(g); });
    const double t_ref = time_best(1, [&] { ref = av.average_reference(g, r); });
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.v.size(); ++i)
      diff = std::max(diff, std::fabs(fast[3].v[i] - ref.v[i]) / ref.v[i]);
    row("ball averages (ladder)", "32^3", t_ref, t_fast, diff);
  }

  {
    const Dims d{64, 64, 64};
    const GridDomain dom = GridDomain::box(d, 1.0 / 64, 2);
    TensorField f(d, dom.h);
    Rng rng(13);
    for (double& x : f.v) x = rng.uniform(-1.0, 1.0);
    NormSpec spec;
    spec.q = 1.8;
    double fast = 0.0, ref = 0.0;
    const double t_fast = time_best(repeats, [&] { fast = power_integral(f, dom, spec); });
    const double t_ref = time_best(repeats, [&] {
      const double h3 = dom.h * dom.h * dom.h;
      const i64 cells = d.cells();
      double s = 0.0;
      for (i64 i = 0; i < cells; ++i) {
        if (!dom.is_interior(i)) continue;
        double m2 = 0.0;
        for (int c = 0; c < 9; ++c) m2 += f.at(c, i) * f.at(c, i);
        s += std::pow(std::sqrt(m2), spec.q) * h3;
      }
      ref = s;
    });
    row("power integral q=1.8", "64^3", t_ref, t_fast, std::fabs(fast - ref) / ref);
  }

  {
    const Dims d{64, 64, 64};
    const VectorField v = random_vector(d, 1.0 / 64, 14);
    TensorField fast(d, v.h), ref(d, v.h);
    const double t_fast = time_best(repeats, [&] { fast = gradient(v); });
    set_threads(1);
    const double t_ref = time_best(repeats, [&] { ref = gradient(v); });
    set_threads(threads);
    double diff = 0.0;
    for (std::size_t i = 0; i < ref.v.size(); ++i)
      diff = std::max(diff, std::fabs(fast.v[i] - ref.v[i]));
    row("gradient (1 thread ref)", "64^3", t_ref, t_fast, diff);
  }

  return 0;
}
