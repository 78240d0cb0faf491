// Command line front end: reads a scenario, runs one subcommand, and drops
// CSV/JSON artifacts (plus optional VTK fields and a gnuplot script) into the
// output directory. Every CSV row is stamped with the scenario hash, and all
// numeric output is formatted to round-trip, so reruns of the same scenario
// and seed produce identical bytes at any thread count.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pstokes/field.hpp"
#include "pstokes/norms.hpp"
#include "pstokes/ops.hpp"
#include "pstokes/scenario.hpp"
#include "pstokes/solver.hpp"
#include "pstokes/truncation.hpp"
#include "pstokes/verify.hpp"
#include "pstokes/whitney.hpp"

namespace {

using namespace pstokes;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("scenario: cannot read file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, (comma == std::string::npos ? text.size() : comma) - pos);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size())
      throw std::runtime_error("scenario: cannot parse ladder override '" + what + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void apply_override(Scenario& s, const std::string& ov) {
  const std::size_t eq = ov.find('=');
  if (eq == std::string::npos) throw std::runtime_error("scenario: ladder override needs key=v1,v2,...");
  const std::string key = ov.substr(0, eq);
  const std::vector<double> vals = parse_list(ov.substr(eq + 1), ov);
  if (key == "k") {
    s.k_ladder = vals;
  } else if (key == "q") {
    s.q_ladder = vals;
  } else if (key == "lambda") {
    s.lambda_ladder = vals;
  } else if (key == "n") {
    s.n_ladder.clear();
    for (const double v : vals) s.n_ladder.push_back(static_cast<int>(std::lround(v)));
  } else if (key == "nodes") {
    if (vals.size() != 1) throw std::runtime_error("scenario: nodes override takes one value");
    s.lambda_nodes = static_cast<int>(std::lround(vals[0]));
  } else {
    throw std::runtime_error("scenario: ladder override key must be k, q, n, lambda, or nodes");
  }
}

std::string resolve_out(const Scenario& s, const std::string& flag, const std::string& sub,
                        const std::string& hash) {
  if (!flag.empty()) return flag;
  if (!s.out_dir.empty()) return s.out_dir;
  const char* root = std::getenv("PSTOKES_OUT");
  return (root ? std::string(root) : std::string(".")) + "/" + sub + "-" + hash.substr(0, 8);
}

std::string vtk_text(const VectorField& u, const ScalarField& pi, const GridDomain& dom) {
  const Dims d = dom.dims;
  std::string out;
  out.reserve(static_cast<std::size_t>(d.cells()) * 60);
  out += "# vtk DataFile Version 3.0\ncell-centered velocity and pressure\nASCII\n";
  out += "DATASET STRUCTURED_POINTS\n";
  out += "DIMENSIONS " + std::to_string(d.nx) + " " + std::to_string(d.ny) + " " +
         std::to_string(d.nz) + "\n";
  const std::string half = g17(0.5 * dom.h);
  const std::string hh = g17(dom.h);
  out += "ORIGIN " + half + " " + half + " " + half + "\n";
  out += "SPACING " + hh + " " + hh + " " + hh + "\n";
  out += "POINT_DATA " + std::to_string(d.cells()) + "\n";
  out += "VECTORS u double\n";
  for (i64 i = 0; i < d.cells(); ++i)
    out += g17(u.at(0, i)) + " " + g17(u.at(1, i)) + " " + g17(u.at(2, i)) + "\n";
  out += "SCALARS pi double 1\nLOOKUP_TABLE default\n";
  for (i64 i = 0; i < d.cells(); ++i) out += g17(pi.at(0, i)) + "\n";
  return out;
}

std::string solve_csv(const Solution& sol, const char* id) {
  std::string s = "id,converged,residual_rel,div_rel,delta_used,newton,uzawa,picard,energy_monotone\n";
  s += std::string(id) + "," + (sol.converged ? "1" : "0") + "," + g17(sol.residual_rel) + "," +
       g17(sol.div_rel) + "," + g17(sol.delta_used) + "," + std::to_string(sol.newton_total) + "," +
       std::to_string(sol.uzawa_total) + "," + std::to_string(sol.picard_total) + "," +
       (sol.energy_monotone ? "1" : "0") + "\n";
  return s;
}

std::string history_csv(const Solution& sol) {
  std::string s = "step,residual\n";
  for (std::size_t i = 0; i < sol.residual_history.size(); ++i)
    s += std::to_string(i) + "," + g17(sol.residual_history[i]) + "\n";
  return s;
}

Solution run_solver(const Scenario& s, const TensorField& f, const GridDomain& dom) {
  const StressModel model = make_model(s);
  const SolverConfig cfg = make_config(s);
  return s.navier ? solve_navier_stokes(model, f, dom, cfg) : solve_stokes(model, f, dom, cfg);
}

int run_whitney(const Scenario& s, const std::string& dir, const std::string& hash) {
  const GridDomain dom = make_domain(s);
  std::vector<u8> mask(static_cast<std::size_t>(dom.dims.cells()), 0);
  for (i64 i = 0; i < dom.dims.cells(); ++i) mask[static_cast<std::size_t>(i)] = dom.is_interior(i) ? 1 : 0;
  WhitneyCover cover = decompose(dom.dims, dom.h, mask);
  const WhitneyReport r = validate(cover, mask);
  std::string csv =
      "cubes,clamped,sub_resolution,max_touching,max_multiplicity,min_dist_over_diam,"
      "max_dist_over_diam,pou_sum_err,pou_grad_const,tiling,distance,ratio,touch_count,"
      "multiplicity,pou,all_pass\n";
  csv += std::to_string(r.cube_count) + "," + std::to_string(r.clamped) + "," +
         std::to_string(r.sub_resolution) + "," + std::to_string(r.max_touching) + "," +
         std::to_string(r.max_multiplicity) + "," + g17(r.min_dist_over_diam) + "," +
         g17(r.max_dist_over_diam) + "," + g17(r.pou_sum_err) + "," + g17(r.pou_grad_const);
  for (const bool b : {r.tiling_exact, r.distance_ok, r.ratio_ok, r.touch_count_ok,
                       r.multiplicity_ok, r.pou_ok, r.all_pass()})
    csv += b ? ",1" : ",0";
  csv += "\n";
  write_file(dir + "/whitney.csv", stamp_rows(csv, hash));
  write_cover_jsonl(dir + "/cover.jsonl", cover);
  std::printf("whitney: %d cubes (%d clamped), all_pass=%s\n", r.cube_count, r.clamped,
              r.all_pass() ? "true" : "false");
  std::printf("wrote %s/whitney.csv and cover.jsonl\n", dir.c_str());
  return r.all_pass() ? 0 : 1;
}

int run_truncate(const Scenario& s, const std::string& dir, const std::string& hash) {
  const GridDomain dom = make_domain(s);
  const TensorField f = make_forcing(s, dom);
  const Solution sol = run_solver(s, f, dom);
  write_file(dir + "/solve.csv", stamp_rows(solve_csv(sol, s.navier ? "navier" : "stokes"), hash));
  if (!sol.converged) {
    std::fprintf(stderr, "error in truncate: solve failed: %s\n", sol.message.c_str());
    return 1;
  }
  std::vector<double> lambdas = s.lambda_ladder;
  if (lambdas.empty())
    for (int e = 0; e <= 8; ++e) lambdas.push_back(std::ldexp(1.0, e));
  const std::vector<double> qs = s.q_ladder.empty() ? std::vector<double>{s.q} : s.q_ladder;
  const TruncationReport rep = verify_truncation(sol.u, dom, s.p, lambdas, qs, nullptr);
  write_file(dir + "/truncation.csv", stamp_rows(rep.csv(), hash));
  std::string gp =
      "set datafile separator ','\nset logscale x\nset xlabel 'lambda'\n"
      "set ylabel 'ratio'\nset terminal pngcairo size 900,600\nset output 'truncation.png'\n"
      "plot 'truncation.csv' using 2:4 with linespoints title 'grad sup / lambda', \\\n"
      "     'truncation.csv' using 2:3 with linespoints title 'bad measure'\n";
  write_file(dir + "/plot.gp", gp);
  std::printf("truncate: %zu levels, sup |grad|/lambda = %s\n", rep.rows.size(),
              g17(rep.sup_linf_ratio).c_str());
  std::printf("wrote %s/truncation.csv and plot.gp\n", dir.c_str());
  return 0;
}

int run_solve(const Scenario& s, const std::string& dir, const std::string& hash, bool vtk) {
  const GridDomain dom = make_domain(s);
  const TensorField f = make_forcing(s, dom);
  const Solution sol = run_solver(s, f, dom);
  write_file(dir + "/solve.csv", stamp_rows(solve_csv(sol, s.navier ? "navier" : "stokes"), hash));
  write_file(dir + "/history.csv", stamp_rows(history_csv(sol), hash));
  if (vtk) write_file(dir + "/fields.vtk", vtk_text(sol.u, sol.pi, dom));
  std::printf("solve: converged=%s residual=%s div=%s\n", sol.converged ? "true" : "false",
              g17(sol.residual_rel).c_str(), g17(sol.div_rel).c_str());
  std::printf("wrote %s/solve.csv and history.csv%s\n", dir.c_str(), vtk ? " and fields.vtk" : "");
  if (!sol.converged) {
    std::fprintf(stderr, "error in solve: %s\n", sol.message.c_str());
    return 1;
  }
  return 0;
}

int run_verify(const Scenario& s, const std::string& dir, const std::string& hash) {
  const GridDomain dom = make_domain(s);
  const TensorField f = make_forcing(s, dom);
  const StressModel model = make_model(s);
  const Solution sol = run_solver(s, f, dom);
  if (!sol.converged) {
    write_file(dir + "/solve.csv", stamp_rows(solve_csv(sol, s.navier ? "navier" : "stokes"), hash));
    std::fprintf(stderr, "error in verify: solve failed: %s\n", sol.message.c_str());
    return 1;
  }
  const bool singular = s.forcing_kind == "singular";
  std::vector<EstimateReport> reports;
  reports.push_back(verify_mt1(sol, f, dom, s.p, s.q));
  reports.push_back(verify_mt2(sol, f, dom, s.p, s.q));
  if (s.navier) reports.push_back(verify_ns_estimate(sol, f, dom, model, s.q));
  ScalarField g = magnitude(f);
  for (double& v : g.v) v += 1.0;
  reports.push_back(layer_cake_identity(sol.u, g, dom, s.p, 0.1, s.lambda_nodes));
  {
    EstimateReport korn;
    korn.id = "korn";
    korn.lhs = korn.ratio = korn_constant(dom, s.p);
    korn.rhs = 1.0;
    korn.p = s.p;
    korn.h = dom.h;
    reports.push_back(korn);
  }
  if (s.p < 3.0) {
    ScalarField ones(dom.dims, dom.h);
    for (double& v : ones.v) v = 1.0;
    reports.push_back(embedding_check(sol.u, dom, s.p, ones, s.q));
  }
  for (EstimateReport& r : reports)
    if (singular) r.forcing_a = s.a;

  // each ladder point runs on the pool; slots keep the output in ladder order
  const std::size_t nk = s.k_ladder.size();
  std::vector<std::vector<EstimateReport>> slots(nk);
  #pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < nk; ++j) {
    const double k = s.k_ladder[j];
    const TensorField fk = approximate_forcing(f, k);
    const Solution solk = run_solver(s, fk, dom);
    std::vector<EstimateReport> rows;
    EstimateReport r1 = solk.converged ? verify_mt1(solk, fk, dom, s.p, s.q) : EstimateReport{};
    EstimateReport r2 = solk.converged ? verify_mt2(solk, fk, dom, s.p, s.q) : EstimateReport{};
    if (!solk.converged) {
      const double nan = std::nan("");
      r1.id = "mt1";
      r2.id = "mt2";
      r1.lhs = r1.rhs = r1.ratio = nan;
      r2.lhs = r2.rhs = r2.ratio = nan;
      r1.p = r2.p = s.p;
      r1.q = r2.q = s.q;
      r1.h = r2.h = dom.h;
    }
    for (EstimateReport* r : {&r1, &r2}) {
      r->ladder = {k};
      if (singular) r->forcing_a = s.a;
    }
    rows.push_back(r1);
    rows.push_back(r2);
    if (s.navier && solk.converged) {
      EstimateReport rn = verify_ns_estimate(solk, fk, dom, model, s.q);
      rn.ladder = {k};
      if (singular) rn.forcing_a = s.a;
      rows.push_back(rn);
    }
    slots[j] = std::move(rows);
  }
  std::string dat;
  for (std::size_t j = 0; j < nk; ++j) {
    dat += g17(s.k_ladder[j]);
    for (const EstimateReport& r : slots[j]) dat += " " + g17(r.ratio);
    dat += "\n";
    for (EstimateReport& r : slots[j]) reports.push_back(std::move(r));
  }

  write_file(dir + "/reports.csv", stamp_rows(reports_csv(reports), hash));
  write_file(dir + "/reports.json", reports_json(reports));
  write_file(dir + "/ladder.dat", dat);
  std::string gp =
      "set logscale x\nset xlabel 'clamp level k'\nset ylabel 'estimate ratio'\n"
      "set terminal pngcairo size 900,600\nset output 'ratios.png'\n"
      "plot 'ladder.dat' using 1:2 with linespoints title 'mt1', \\\n"
      "     'ladder.dat' using 1:3 with linespoints title 'mt2'";
  if (s.navier) gp += ", \\\n     'ladder.dat' using 1:4 with linespoints title 'transport'";
  gp += "\n";
  write_file(dir + "/plot.gp", gp);
  std::printf("verify: mt1 ratio=%s mt2 ratio=%s over %zu ladder points\n",
              g17(reports[0].ratio).c_str(), g17(reports[1].ratio).c_str(), nk);
  std::printf("wrote %s/reports.csv, reports.json, ladder.dat, plot.gp\n", dir.c_str());
  return 0;
}

int run_scan(const Scenario& s, const std::string& dir, const std::string& hash) {
  const GridDomain dom = make_domain(s);
  const TensorField f = make_forcing(s, dom);
  const StressModel model = make_model(s);
  const std::vector<double> qs = s.q_ladder.empty() ? std::vector<double>{s.q} : s.q_ladder;
  const ScanTable table = scan_epsilon0(model, dom, f, s.k_ladder, qs, make_config(s), s.navier);
  write_file(dir + "/scan.csv", stamp_rows(scan_csv(table), hash));
  std::string gp =
      "set datafile separator ','\nset xlabel 'q'\nset ylabel 'gap'\n"
      "set terminal pngcairo size 900,600\nset output 'scan.png'\n"
      "plot 'scan.csv' using 2:3 with linespoints title 'stable gap'\n";
  write_file(dir + "/plot.gp", gp);
  int stable = 0;
  for (const ScanRow& r : table.rows) stable += r.stable ? 1 : 0;
  std::printf("scan: eps0=%s, %d of %zu rows stable\n", g17(table.eps0).c_str(), stable,
              table.rows.size());
  std::printf("wrote %s/scan.csv and plot.gp\n", dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uniform-grid experiments for shear-dependent flow estimates"};
  app.require_subcommand(1);

  std::string scen_path;
  std::string out_flag;
  int threads = 0;
  unsigned long long seed_flag = 0;
  std::vector<std::string> overrides;
  bool vtk = false;

  const char* names[] = {"whitney", "truncate", "solve", "verify", "scan"};
  const char* blurbs[] = {"decompose the domain interior and validate the cover",
                          "sweep the gradient truncation over a lambda ladder",
                          "run the flow solver and export diagnostics",
                          "run the estimate suite over the forcing ladder",
                          "scan the stability gap over a q grid"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--scenario", scen_path, "scenario file (JSON or TOML)")->required();
    sub->add_option("--out", out_flag, "output directory");
    sub->add_option("--threads", threads, "worker threads");
    sub->add_option("--seed", seed_flag, "override the scenario seed");
    sub->add_option("--ladder-override", overrides, "replace a ladder, e.g. k=1,4,16");
    if (std::string(names[i]) == "solve") sub->add_flag("--vtk", vtk, "also write fields.vtk");
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  Scenario s;
  try {
    s = parse_scenario(read_file(scen_path));
    for (const std::string& ov : overrides) apply_override(s, ov);
    if (sub->count("--seed") > 0) s.seed = seed_flag;
    s = parse_scenario(canonical_json(s));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  if (threads > 0) omp_set_num_threads(threads);
  const std::string hash = hash_hex(scenario_hash(s));
  const std::string dir = resolve_out(s, out_flag, name, hash);

  try {
    std::filesystem::create_directories(dir);
    if (name == "whitney") return run_whitney(s, dir, hash);
    if (name == "truncate") return run_truncate(s, dir, hash);
    if (name == "solve") return run_solve(s, dir, hash, vtk);
    if (name == "verify") return run_verify(s, dir, hash);
    return run_scan(s, dir, hash);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error in %s: %s\n", name.c_str(), e.what());
    return 1;
  }
}
