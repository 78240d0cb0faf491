#pragma once

// A Scenario bundles everything a command-line run needs: the domain shape,
// the stress model, the forcing, the estimate exponent, the refinement
// ladders, and output/run settings. Scenarios are read from JSON or from a
// small TOML subset; both forms converge to the same struct. The canonical
// serialization is JSON with sorted keys, and the scenario hash is computed
// over those bytes, so equal scenarios hash equally no matter which syntax
// they arrived in.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pstokes/field.hpp"
#include "pstokes/solver.hpp"
#include "pstokes/stress.hpp"

namespace pstokes {

struct Scenario {
  // domain
  std::string domain_kind = "box";  // box | ball | lshape
  std::array<int, 3> dims = {16, 16, 16};
  double h = 1.0 / 16.0;
  int margin = 1;
  std::array<double, 3> center = {0.5, 0.5, 0.5};
  double radius = 0.35;

  // model
  std::string model_kind = "power";  // power | crossover
  double p = 2.0;
  double nu = 1.0;
  double nu0 = 2.0;
  double K = 1.0;
  double carreau = 1.6;

  // forcing
  std::string forcing_kind = "wave";  // wave | singular
  double amplitude = 0.5;
  double a = 1.0;
  std::array<double, 3> x0 = {0.5, 0.5, 0.5};
  std::array<double, 9> direction = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  // estimate
  double q = 1.9;
  bool navier = false;

  // ladders
  std::vector<double> k_ladder = {6.0, 12.0, 40.0};
  std::vector<double> q_ladder = {};
  std::vector<int> n_ladder = {};
  std::vector<double> lambda_ladder = {};
  int lambda_nodes = 400;

  // run
  std::string out_dir = "";
  std::uint64_t seed = 1;
  double tol = 1e-8;
  double div_tol = 1e-9;

  bool operator==(const Scenario&) const = default;
};

// Parses JSON (first non-space byte '{') or the TOML subset: [section]
// headers, key = value lines, numbers, booleans, quoted strings, flat arrays,
// and # comments. Unknown fields, type mismatches, and out-of-range exponents
// all throw std::runtime_error with a message naming the offending field.
Scenario parse_scenario(const std::string& text);

// Canonical JSON bytes: sorted keys, every field present. Parsing this text
// reproduces the scenario exactly.
std::string canonical_json(const Scenario& s);

// FNV-1a over the canonical JSON bytes.
std::uint64_t scenario_hash(const Scenario& s);
std::string hash_hex(std::uint64_t v);

// Domain construction. The second form re-meshes the same physical region
// with n cells along the first axis, keeping box size, ball geometry, and
// wall thickness fixed in physical units.
GridDomain make_domain(const Scenario& s);
GridDomain make_domain(const Scenario& s, int n);

TensorField make_forcing(const Scenario& s, const GridDomain& dom);
StressModel make_model(const Scenario& s);
SolverConfig make_config(const Scenario& s);

// Prepends a "scenario" provenance column holding the hash to a CSV table.
std::string stamp_rows(const std::string& csv, const std::string& hash);

}  // namespace pstokes
