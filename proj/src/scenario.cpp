#include "pstokes/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "pstokes/parallel.hpp"

namespace pstokes {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("scenario: " + msg); }

double as_num(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 2e9) return static_cast<int>(d);
  }
  fail(path + " must be an integer");
}

std::string as_str(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path + " must be a boolean");
  return v.get<bool>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
    fail(path + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

template <std::size_t N>
std::array<double, N> as_arr(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != N) fail(path + " must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = as_num(v[i], path);
  return out;
}

std::array<int, 3> as_dims(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 3) fail(path + " must be an array of 3 integers");
  std::array<int, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) out[i] = as_int(v[i], path);
  return out;
}

std::vector<double> as_vec(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_num(e, path));
  return out;
}

std::vector<int> as_vec_int(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path + " must be an array of integers");
  std::vector<int> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_int(e, path));
  return out;
}

void strip_comment(std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) {
      line.erase(i);
      return;
    }
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// [section] headers plus key = value lines, where the value is any JSON
// scalar or flat array. That covers quoted strings, numbers, booleans, and
// number lists, which is all a scenario file uses.
json toml_to_json(const std::string& text) {
  json root = json::object();
  std::string section;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, (nl == std::string::npos ? text.size() : nl) - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    strip_comment(line);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail("cannot parse section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section header");
      if (!root.contains(section)) root[section] = json::object();
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("cannot parse line '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("cannot parse line '" + line + "'");
    json parsed = json::parse(val, nullptr, false);
    if (parsed.is_discarded()) fail("cannot parse value '" + val + "' for key " + key);
    if (section.empty()) root[key] = parsed;
    else root[section][key] = parsed;
  }
  return root;
}

void read_domain(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "kind") s.domain_kind = as_str(v, "domain.kind");
    else if (key == "dims") s.dims = as_dims(v, "domain.dims");
    else if (key == "h") s.h = as_num(v, "domain.h");
    else if (key == "margin") s.margin = as_int(v, "domain.margin");
    else if (key == "center") s.center = as_arr<3>(v, "domain.center");
    else if (key == "radius") s.radius = as_num(v, "domain.radius");
    else fail("unknown field domain." + key);
  }
}

void read_model(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "kind") s.model_kind = as_str(v, "model.kind");
    else if (key == "p") s.p = as_num(v, "model.p");
    else if (key == "nu") s.nu = as_num(v, "model.nu");
    else if (key == "nu0") s.nu0 = as_num(v, "model.nu0");
    else if (key == "K") s.K = as_num(v, "model.K");
    else if (key == "carreau") s.carreau = as_num(v, "model.carreau");
    else fail("unknown field model." + key);
  }
}

void read_forcing(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "kind") s.forcing_kind = as_str(v, "forcing.kind");
    else if (key == "amplitude") s.amplitude = as_num(v, "forcing.amplitude");
    else if (key == "a") s.a = as_num(v, "forcing.a");
    else if (key == "x0") s.x0 = as_arr<3>(v, "forcing.x0");
    else if (key == "direction") s.direction = as_arr<9>(v, "forcing.direction");
    else fail("unknown field forcing." + key);
  }
}

void read_estimate(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "q") s.q = as_num(v, "estimate.q");
    else if (key == "navier") s.navier = as_bool(v, "estimate.navier");
    else fail("unknown field estimate." + key);
  }
}

void read_ladders(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "k") s.k_ladder = as_vec(v, "ladders.k");
    else if (key == "q") s.q_ladder = as_vec(v, "ladders.q");
    else if (key == "n") s.n_ladder = as_vec_int(v, "ladders.n");
    else if (key == "lambda") s.lambda_ladder = as_vec(v, "ladders.lambda");
    else if (key == "lambda_nodes") s.lambda_nodes = as_int(v, "ladders.lambda_nodes");
    else fail("unknown field ladders." + key);
  }
}

void read_run(const json& sec, Scenario& s) {
  for (const auto& [key, v] : sec.items()) {
    if (key == "out") s.out_dir = as_str(v, "run.out");
    else if (key == "seed") s.seed = as_seed(v, "run.seed");
    else if (key == "tol") s.tol = as_num(v, "run.tol");
    else if (key == "div_tol") s.div_tol = as_num(v, "run.div_tol");
    else fail("unknown field run." + key);
  }
}

void check_q(double q, double p, const std::string& path) {
  const double pc = p / (p - 1.0);
  if (!(q > 1.0) || !(q <= pc + 1e-12)) fail(path + " must lie in (1, p']");
}

void validate(const Scenario& s) {
  if (s.domain_kind != "box" && s.domain_kind != "ball" && s.domain_kind != "lshape")
    fail("domain.kind must be box, ball, or lshape");
  for (const int n : s.dims)
    if (n < 4) fail("domain.dims entries must be at least 4");
  if (!(s.h > 0.0) || !std::isfinite(s.h)) fail("domain.h must be positive");
  if (s.margin < 1) fail("domain.margin must be at least 1");
  if (s.domain_kind == "ball" && !(s.radius > 0.0)) fail("domain.radius must be positive");
  if (s.model_kind != "power" && s.model_kind != "crossover") fail("model.kind must be power or crossover");
  if (!(s.p > 1.0) || !std::isfinite(s.p)) fail("model.p must exceed 1");
  if (s.model_kind == "crossover") {
    if (!(s.nu > 0.0)) fail("model.nu must be positive");
    if (!(s.nu0 > 0.0)) fail("model.nu0 must be positive");
    if (!(s.K > 0.0)) fail("model.K must be positive");
    if (!(s.carreau > 1.0)) fail("model.carreau must exceed 1");
  }
  if (s.forcing_kind != "wave" && s.forcing_kind != "singular") fail("forcing.kind must be wave or singular");
  if (!std::isfinite(s.amplitude)) fail("forcing.amplitude must be finite");
  if (s.forcing_kind == "singular") {
    if (!(s.a >= 0.0)) fail("forcing.a must be nonnegative");
    double d2 = 0.0;
    for (const double v : s.direction) d2 += v * v;
    if (!(d2 > 0.0)) fail("forcing.direction must be nonzero");
  }
  check_q(s.q, s.p, "estimate.q");
  if (s.navier && s.model_kind == "power" && !(s.p > 2.0))
    fail("estimate.navier needs model.p above 2 for a power law");
  for (const double k : s.k_ladder)
    if (!(k > 0.0) || !std::isfinite(k)) fail("ladders.k entries must be positive");
  for (const double q : s.q_ladder) check_q(q, s.p, "ladders.q entries");
  for (const int n : s.n_ladder)
    if (n < 4) fail("ladders.n entries must be at least 4");
  for (const double lam : s.lambda_ladder)
    if (!(lam > 0.0) || !std::isfinite(lam)) fail("ladders.lambda entries must be positive");
  if (s.lambda_nodes < 2) fail("ladders.lambda_nodes must be at least 2");
  if (!(s.tol > 0.0)) fail("run.tol must be positive");
  if (!(s.div_tol > 0.0)) fail("run.div_tol must be positive");
}

void decode(const Dims& d, i64 i, int& x, int& y, int& z) {
  const i64 plane = static_cast<i64>(d.nx) * d.ny;
  z = static_cast<int>(i / plane);
  const i64 r = i % plane;
  y = static_cast<int>(r / d.nx);
  x = static_cast<int>(r % d.nx);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  std::size_t b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) fail("empty input");
  json j;
  if (text[b] == '{') {
    j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail("malformed JSON");
  } else {
    j = toml_to_json(text);
  }
  if (!j.is_object()) fail("top level must be an object");
  Scenario s;
  for (const auto& [key, v] : j.items()) {
    if (!v.is_object()) fail(key + " must be a section");
    if (key == "domain") read_domain(v, s);
    else if (key == "model") read_model(v, s);
    else if (key == "forcing") read_forcing(v, s);
    else if (key == "estimate") read_estimate(v, s);
    else if (key == "ladders") read_ladders(v, s);
    else if (key == "run") read_run(v, s);
    else fail("unknown field " + key);
  }
  validate(s);
  return s;
}

std::string canonical_json(const Scenario& s) {
  json j;
  j["domain"] = {{"kind", s.domain_kind}, {"dims", s.dims},     {"h", s.h},
                 {"margin", s.margin},    {"center", s.center}, {"radius", s.radius}};
  j["model"] = {{"kind", s.model_kind}, {"p", s.p}, {"nu", s.nu},
                {"nu0", s.nu0},         {"K", s.K}, {"carreau", s.carreau}};
  j["forcing"] = {{"kind", s.forcing_kind},
                  {"amplitude", s.amplitude},
                  {"a", s.a},
                  {"x0", s.x0},
                  {"direction", s.direction}};
  j["estimate"] = {{"q", s.q}, {"navier", s.navier}};
  j["ladders"] = {{"k", s.k_ladder},
                  {"q", s.q_ladder},
                  {"n", s.n_ladder},
                  {"lambda", s.lambda_ladder},
                  {"lambda_nodes", s.lambda_nodes}};
  j["run"] = {{"out", s.out_dir}, {"seed", s.seed}, {"tol", s.tol}, {"div_tol", s.div_tol}};
  return j.dump();
}

std::uint64_t scenario_hash(const Scenario& s) {
  const std::string bytes = canonical_json(s);
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

GridDomain make_domain(const Scenario& s) {
  const Dims d{s.dims[0], s.dims[1], s.dims[2]};
  if (s.domain_kind == "ball") return GridDomain::ball(d, s.h, s.center, s.radius);
  if (s.domain_kind == "lshape") return GridDomain::lshape(d, s.h, s.margin);
  return GridDomain::box(d, s.h, s.margin);
}

GridDomain make_domain(const Scenario& s, int n) {
  if (n < 4) throw std::invalid_argument("make_domain: n must be at least 4");
  const double scale = static_cast<double>(n) / s.dims[0];
  const Dims d{n, static_cast<int>(std::lround(s.dims[1] * scale)),
               static_cast<int>(std::lround(s.dims[2] * scale))};
  const double hh = s.dims[0] * s.h / n;
  const int m = std::max(1, static_cast<int>(std::lround(s.margin * scale)));
  if (s.domain_kind == "ball") return GridDomain::ball(d, hh, s.center, s.radius);
  if (s.domain_kind == "lshape") return GridDomain::lshape(d, hh, m);
  return GridDomain::box(d, hh, m);
}

TensorField make_forcing(const Scenario& s, const GridDomain& dom) {
  if (s.forcing_kind == "singular") {
    Mat3 dir{};
    for (int c = 0; c < 9; ++c) dir[static_cast<std::size_t>(c)] = s.direction[static_cast<std::size_t>(c)];
    return singular_forcing(dom, s.x0, s.a, dir, s.amplitude);
  }
  const Dims d = dom.dims;
  TensorField f(d, dom.h);
  const double amp = s.amplitude;
  const double two_pi = 2.0 * 3.14159265358979323846;
  par_for(d.cells(), [&](i64 i) {
    if (!dom.is_interior(i)) return;
    int x, y, z;
    decode(d, i, x, y, z);
    const double tx = two_pi * (x + 0.5) / d.nx;
    const double ty = two_pi * (y + 0.5) / d.ny;
    const double tz = two_pi * (z + 0.5) / d.nz;
    f.at(0, i) = amp * std::sin(tx) * std::cos(ty);
    f.at(1, i) = amp * std::cos(ty) * std::sin(tz);
    f.at(2, i) = amp * std::sin(tz) * std::cos(tx);
    f.at(3, i) = amp * std::cos(tx) * std::sin(ty);
    f.at(4, i) = amp * std::sin(ty) * std::cos(tz);
    f.at(5, i) = amp * std::cos(tz) * std::sin(tx);
    f.at(6, i) = amp * std::sin(tx + ty);
    f.at(7, i) = amp * std::cos(ty + tz);
    f.at(8, i) = amp * std::sin(tz + tx);
  });
  return f;
}

StressModel make_model(const Scenario& s) {
  if (s.model_kind == "crossover") return StressModel::linear_at_infinity(s.nu, s.nu0, s.K, s.carreau);
  return StressModel::power_law(s.p);
}

SolverConfig make_config(const Scenario& s) {
  SolverConfig cfg;
  cfg.tol = s.tol;
  cfg.div_tol = s.div_tol;
  return cfg;
}

std::string stamp_rows(const std::string& csv, const std::string& hash) {
  std::string out;
  out.reserve(csv.size() + 24 * (1 + std::count(csv.begin(), csv.end(), '\n')));
  std::size_t pos = 0;
  bool header = true;
  while (pos < csv.size()) {
    std::size_t nl = csv.find('\n', pos);
    const std::size_t end = (nl == std::string::npos) ? csv.size() : nl;
    if (end > pos) {
      out += header ? "scenario" : hash;
      out += ',';
      header = false;
    }
    out.append(csv, pos, end - pos);
    if (nl != std::string::npos) out += '\n';
    pos = (nl == std::string::npos) ? csv.size() : nl + 1;
  }
  return out;
}

}  // namespace pstokes
