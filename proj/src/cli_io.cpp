// Copyright 2026 The linfel Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "linfel/cli_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "linfel/errors.hpp"
#include "linfel/version.hpp"

namespace linfel {
namespace fs = std::filesystem;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kSolve: return "solve";
    case RunMode::kCertify: return "certify";
    case RunMode::kDiagnose: return "diagnose";
    case RunMode::kOracle1D: return "oracle1d";
  }
  return "solve";
}

std::string format_number(double value) {
  if (std::isnan(value)) return ".nan";
  if (std::isinf(value)) return value > 0 ? ".inf" : "-.inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool RunConfig::operator==(const RunConfig& o) const {
  return mode == o.mode && seed == o.seed && output == o.output && problem == o.problem && grid == o.grid &&
         boundary == o.boundary && solver == o.solver && diagnostics == o.diagnostics && oracle == o.oracle;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

[[noreturn]] void fail(const std::string& field, const YAML::Node& node, const std::string& what) {
  const int line = line_of(node);
  std::string msg = "config: " + field + ": " + what;
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(msg, field, line);
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(path.empty() ? "<root>" : path, node, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, kv.first, "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(field, node, "expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(field, node, "cannot read '" + node.Scalar() + "'");
  }
}

double number(const YAML::Node& node, const std::string& field) {
  const double v = scalar<double>(node, field);
  if (!std::isfinite(v)) fail(field, node, "must be finite");
  return v;
}

std::vector<double> number_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) fail(field, node, "expected a list");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], field));
  return out;
}

std::vector<int> int_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) fail(field, node, "expected a list");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar<int>(node[i], field));
  return out;
}

void require(bool ok, const YAML::Node& node, const std::string& field, const std::string& what) {
  if (!ok) fail(field, node, what);
}

const std::map<std::string, std::pair<std::size_t, std::size_t>> kCoefficientArity{
    {"identity", {0, 0}}, {"constant", {3, 3}}, {"affine", {9, 9}}};
const std::map<std::string, std::pair<std::size_t, std::size_t>> kReactionArity{
    {"zero", {0, 0}}, {"linear", {2, 4}}, {"cubic", {0, 0}},
    {"power", {1, 2}}, {"sine", {0, 1}}, {"polynomial", {1, 16}}};
const std::map<std::string, std::pair<std::size_t, std::size_t>> kBoundaryArity{
    {"zero", {0, 0}}, {"hermite", {2, 2}}, {"harmonic", {0, 0}},
    {"exp_sin", {1, 1}}, {"sine", {1, 1}}, {"nodal", {0, 0}}};

void check_name(const std::map<std::string, std::pair<std::size_t, std::size_t>>& table, const std::string& name,
                std::size_t count, const YAML::Node& name_node, const YAML::Node& params_node,
                const std::string& field) {
  const auto it = table.find(name);
  if (it == table.end()) fail(field, name_node, "unknown name '" + name + "'");
  if (count < it->second.first || count > it->second.second) {
    fail(field, params_node ? params_node : name_node,
         "'" + name + "' takes " + std::to_string(it->second.first) + " to " + std::to_string(it->second.second) +
             " parameters");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config: malformed YAML: " + e.msg + " (line " + std::to_string(e.mark.line + 1) + ")",
                      "<root>", e.mark.line + 1);
  }
  RunConfig c;
  c.base_dir = base_dir;
  check_keys(root, "", {"mode", "seed", "output", "problem", "grid", "boundary", "solver", "diagnostics", "oracle"});

  if (!root["mode"]) fail("mode", root, "required");
  {
    const std::string m = scalar<std::string>(root["mode"], "mode");
    if (m == "solve") {
      c.mode = RunMode::kSolve;
    } else if (m == "certify") {
      c.mode = RunMode::kCertify;
    } else if (m == "diagnose") {
      c.mode = RunMode::kDiagnose;
    } else if (m == "oracle1d") {
      c.mode = RunMode::kOracle1D;
    } else {
      fail("mode", root["mode"], "expected solve, certify, diagnose or oracle1d");
    }
  }
  if (!root["seed"]) fail("seed", root, "required");
  c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["output"]) c.output = scalar<std::string>(root["output"], "output");

  if (!root["grid"]) fail("grid", root, "required");
  {
    const YAML::Node g = root["grid"];
    check_keys(g, "grid", {"extent", "nodes"});
    require(g["extent"] && g["nodes"], g, "grid", "needs extent and nodes");
    c.grid.extent = number_list(g["extent"], "grid.extent");
    c.grid.nodes = int_list(g["nodes"], "grid.nodes");
    require(c.grid.extent.size() == 1 || c.grid.extent.size() == 2, g["extent"], "grid.extent", "dimension 1 or 2");
    require(c.grid.nodes.size() == c.grid.extent.size(), g["nodes"], "grid.nodes", "one count per axis");
    for (double e : c.grid.extent) require(e > 0.0, g["extent"], "grid.extent", "must be positive");
    for (int n : c.grid.nodes) require(n >= 5 && n <= 100001, g["nodes"], "grid.nodes", "between 5 and 100001");
  }
  const int dim = static_cast<int>(c.grid.extent.size());

  if (const YAML::Node p = root["problem"]) {
    check_keys(p, "problem", {"coefficients", "coefficient_parameters", "reaction", "reaction_parameters"});
    if (p["coefficients"]) c.problem.coefficients = scalar<std::string>(p["coefficients"], "problem.coefficients");
    if (p["coefficient_parameters"]) {
      c.problem.coefficient_parameters = number_list(p["coefficient_parameters"], "problem.coefficient_parameters");
    }
    if (p["reaction"]) c.problem.reaction = scalar<std::string>(p["reaction"], "problem.reaction");
    if (p["reaction_parameters"]) {
      c.problem.reaction_parameters = number_list(p["reaction_parameters"], "problem.reaction_parameters");
    }
    check_name(kCoefficientArity, c.problem.coefficients, c.problem.coefficient_parameters.size(),
               p["coefficients"] ? p["coefficients"] : p, p["coefficient_parameters"], "problem.coefficients");
    check_name(kReactionArity, c.problem.reaction, c.problem.reaction_parameters.size(),
               p["reaction"] ? p["reaction"] : p, p["reaction_parameters"], "problem.reaction");
    if (c.problem.reaction == "linear") {
      require(c.problem.reaction_parameters.size() == static_cast<std::size_t>(2 + dim), p["reaction_parameters"],
              "problem.reaction_parameters", "linear takes c0, cy and one cz per axis");
    }
  }

  if (const YAML::Node b = root["boundary"]) {
    check_keys(b, "boundary", {"preset", "parameters", "table"});
    if (b["preset"]) c.boundary.preset = scalar<std::string>(b["preset"], "boundary.preset");
    if (b["parameters"]) c.boundary.parameters = number_list(b["parameters"], "boundary.parameters");
    if (b["table"]) c.boundary.table = scalar<std::string>(b["table"], "boundary.table");
    check_name(kBoundaryArity, c.boundary.preset, c.boundary.parameters.size(), b["preset"] ? b["preset"] : b,
               b["parameters"], "boundary.preset");
    require(c.boundary.preset != "hermite" || dim == 1, b, "boundary.preset", "hermite data is one-dimensional");
    require((c.boundary.preset == "nodal") == !c.boundary.table.empty(), b, "boundary.table",
            "a table is given exactly when the preset is nodal");
  }

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver", {"p_start", "p_max", "tolerance", "max_iterations", "early_stop", "stop_tolerance",
                             "sigma", "p0", "zero_threshold"});
    SolverConfig& o = c.solver;
    if (s["p_start"]) o.p_start = number(s["p_start"], "solver.p_start");
    if (s["p_max"]) o.p_max = number(s["p_max"], "solver.p_max");
    if (s["tolerance"]) o.tolerance = number(s["tolerance"], "solver.tolerance");
    if (s["max_iterations"]) o.max_iterations = scalar<int>(s["max_iterations"], "solver.max_iterations");
    if (s["early_stop"]) o.early_stop = scalar<bool>(s["early_stop"], "solver.early_stop");
    if (s["stop_tolerance"]) o.stop_tolerance = number(s["stop_tolerance"], "solver.stop_tolerance");
    if (s["sigma"]) o.sigma = number(s["sigma"], "solver.sigma");
    if (s["p0"]) o.p0 = number(s["p0"], "solver.p0");
    if (s["zero_threshold"]) o.zero_threshold = number(s["zero_threshold"], "solver.zero_threshold");
    require(o.p_start >= 2.0, s["p_start"], "solver.p_start", "must be at least 2");
    require(o.p_max >= o.p_start && o.p_max <= 4096.0, s["p_max"] ? s["p_max"] : s, "solver.p_max",
            "must lie in [p_start, 4096]");
    require(o.tolerance > 0.0 && o.tolerance < 1.0, s["tolerance"], "solver.tolerance", "must lie in (0, 1)");
    require(o.max_iterations >= 1, s["max_iterations"], "solver.max_iterations", "must be positive");
    require(o.stop_tolerance > 0.0, s["stop_tolerance"], "solver.stop_tolerance", "must be positive");
    require(!o.sigma || *o.sigma > 0.0, s["sigma"], "solver.sigma", "must be positive");
    require(!o.p0 || *o.p0 > dim, s["p0"], "solver.p0", "must exceed the dimension");
    require(o.zero_threshold >= 0.0, s["zero_threshold"], "solver.zero_threshold", "must be nonnegative");
  }

  if (const YAML::Node d = root["diagnostics"]) {
    check_keys(d, "diagnostics", {"mc_trials", "amplitudes", "run_mc", "energy_identities", "el1", "flatness", "el2",
                                  "normalization", "duality"});
    DiagnosticsConfig& o = c.diagnostics;
    if (d["mc_trials"]) o.mc_trials = scalar<int>(d["mc_trials"], "diagnostics.mc_trials");
    if (d["amplitudes"]) o.amplitudes = number_list(d["amplitudes"], "diagnostics.amplitudes");
    if (d["run_mc"]) o.run_mc = scalar<bool>(d["run_mc"], "diagnostics.run_mc");
    if (d["energy_identities"]) o.energy_identities = scalar<bool>(d["energy_identities"], "diagnostics.energy_identities");
    const std::pair<const char*, double*> thresholds[] = {{"el1", &o.el1},
                                                          {"flatness", &o.flatness},
                                                          {"el2", &o.el2},
                                                          {"normalization", &o.normalization},
                                                          {"duality", &o.duality}};
    for (const auto& [key, target] : thresholds) {
      if (!d[key]) continue;
      *target = number(d[key], std::string("diagnostics.") + key);
      require(*target >= 0.0, d[key], std::string("diagnostics.") + key, "must be nonnegative");
    }
    require(o.mc_trials >= 1 && o.mc_trials <= 100000, d["mc_trials"], "diagnostics.mc_trials",
            "between 1 and 100000");
    require(!o.amplitudes.empty(), d["amplitudes"], "diagnostics.amplitudes", "must not be empty");
    for (double a : o.amplitudes) require(a > 0.0 && a <= 1.0, d["amplitudes"], "diagnostics.amplitudes", "in (0, 1]");
  }

  if (const YAML::Node o = root["oracle"]) {
    check_keys(o, "oracle", {"a", "b", "brute_force_cells", "brute_force_starts"});
    if (o["a"]) c.oracle.a = number(o["a"], "oracle.a");
    if (o["b"]) c.oracle.b = number(o["b"], "oracle.b");
    if (o["brute_force_cells"]) c.oracle.brute_force_cells = scalar<int>(o["brute_force_cells"], "oracle.brute_force_cells");
    if (o["brute_force_starts"]) {
      c.oracle.brute_force_starts = scalar<int>(o["brute_force_starts"], "oracle.brute_force_starts");
    }
    require(c.oracle.brute_force_cells >= 2, o, "oracle.brute_force_cells", "at least 2");
    require(c.oracle.brute_force_starts >= 1, o, "oracle.brute_force_starts", "at least 1");
  }
  if (c.mode == RunMode::kOracle1D) {
    require(dim == 1 && c.grid.extent[0] == 1.0, root["grid"], "grid", "oracle1d runs on the unit interval");
    require(c.oracle.a != 0.0 || c.oracle.b != 0.0, root["oracle"] ? root["oracle"] : root, "oracle",
            "(a, b) must not both vanish");
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string(), "<file>");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

namespace {

void emit_numbers(YAML::Emitter& out, const std::vector<double>& values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : values) out << format_number(v);
  out << YAML::EndSeq;
}

void emit_config(YAML::Emitter& out, const RunConfig& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << to_string(c.mode);
  out << YAML::Key << "seed" << YAML::Value << std::to_string(c.seed);
  if (!c.output.empty()) out << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
  out << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "coefficients" << YAML::Value << c.problem.coefficients;
  if (!c.problem.coefficient_parameters.empty()) {
    out << YAML::Key << "coefficient_parameters" << YAML::Value;
    emit_numbers(out, c.problem.coefficient_parameters);
  }
  out << YAML::Key << "reaction" << YAML::Value << c.problem.reaction;
  if (!c.problem.reaction_parameters.empty()) {
    out << YAML::Key << "reaction_parameters" << YAML::Value;
    emit_numbers(out, c.problem.reaction_parameters);
  }
  out << YAML::EndMap;
  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "extent" << YAML::Value;
  emit_numbers(out, c.grid.extent);
  out << YAML::Key << "nodes" << YAML::Value << YAML::Flow << c.grid.nodes;
  out << YAML::EndMap;
  out << YAML::Key << "boundary" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << c.boundary.preset;
  if (!c.boundary.parameters.empty()) {
    out << YAML::Key << "parameters" << YAML::Value;
    emit_numbers(out, c.boundary.parameters);
  }
  if (!c.boundary.table.empty()) out << YAML::Key << "table" << YAML::Value << YAML::DoubleQuoted << c.boundary.table;
  out << YAML::EndMap;
  const SolverConfig& s = c.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "p_start" << YAML::Value << format_number(s.p_start);
  out << YAML::Key << "p_max" << YAML::Value << format_number(s.p_max);
  out << YAML::Key << "tolerance" << YAML::Value << format_number(s.tolerance);
  out << YAML::Key << "max_iterations" << YAML::Value << s.max_iterations;
  out << YAML::Key << "early_stop" << YAML::Value << (s.early_stop ? "true" : "false");
  out << YAML::Key << "stop_tolerance" << YAML::Value << format_number(s.stop_tolerance);
  if (s.sigma) out << YAML::Key << "sigma" << YAML::Value << format_number(*s.sigma);
  if (s.p0) out << YAML::Key << "p0" << YAML::Value << format_number(*s.p0);
  out << YAML::Key << "zero_threshold" << YAML::Value << format_number(s.zero_threshold);
  out << YAML::EndMap;
  const DiagnosticsConfig& d = c.diagnostics;
  out << YAML::Key << "diagnostics" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mc_trials" << YAML::Value << d.mc_trials;
  out << YAML::Key << "amplitudes" << YAML::Value;
  emit_numbers(out, d.amplitudes);
  out << YAML::Key << "run_mc" << YAML::Value << (d.run_mc ? "true" : "false");
  out << YAML::Key << "energy_identities" << YAML::Value << (d.energy_identities ? "true" : "false");
  out << YAML::Key << "el1" << YAML::Value << format_number(d.el1);
  out << YAML::Key << "flatness" << YAML::Value << format_number(d.flatness);
  out << YAML::Key << "el2" << YAML::Value << format_number(d.el2);
  out << YAML::Key << "normalization" << YAML::Value << format_number(d.normalization);
  out << YAML::Key << "duality" << YAML::Value << format_number(d.duality);
  out << YAML::EndMap;
  out << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "a" << YAML::Value << format_number(c.oracle.a);
  out << YAML::Key << "b" << YAML::Value << format_number(c.oracle.b);
  out << YAML::Key << "brute_force_cells" << YAML::Value << c.oracle.brute_force_cells;
  out << YAML::Key << "brute_force_starts" << YAML::Value << c.oracle.brute_force_starts;
  out << YAML::EndMap;
  out << YAML::EndMap;
}

}  // namespace

std::string to_yaml(const RunConfig& config) {
  YAML::Emitter out;
  emit_config(out, config);
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Problem assembly

namespace {

Matrix2 symmetric(const std::vector<double>& p, std::size_t at) {
  Matrix2 m;
  m << p[at], p[at + 1], p[at + 1], p[at + 2];
  return m;
}

ScalarField read_nodal_table(const GridPtr& grid, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: boundary.table: cannot read " + path.string(), "boundary.table");
  std::string line;
  std::getline(in, line);
  const int dim = grid->dim();
  Vector values(grid->size());
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= grid->size()) throw ConfigError("config: boundary.table: more rows than grid nodes", "boundary.table");
    std::vector<double> cells;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      double v = 0.0;
      const auto res = std::from_chars(line.data() + start, line.data() + end, v);
      if (res.ec != std::errc()) {
        throw ConfigError("config: boundary.table: bad number on row " + std::to_string(row + 2), "boundary.table",
                          row + 2);
      }
      cells.push_back(v);
      start = end + 1;
    }
    if (static_cast<int>(cells.size()) != dim + 1) {
      throw ConfigError("config: boundary.table: expected x[,y],value on row " + std::to_string(row + 2),
                        "boundary.table", row + 2);
    }
    const Point x = grid->point(row);
    for (int a = 0; a < dim; ++a) {
      if (std::abs(cells[a] - x[a]) > 1e-9 * (1.0 + std::abs(x[a]))) {
        throw ConfigError("config: boundary.table: coordinates do not match the grid on row " +
                              std::to_string(row + 2),
                          "boundary.table", row + 2);
      }
    }
    values[row++] = cells[dim];
  }
  if (row != grid->size()) throw ConfigError("config: boundary.table: fewer rows than grid nodes", "boundary.table");
  return ScalarField(grid, std::move(values));
}

}  // namespace

ProblemSpec build_problem(const RunConfig& c) {
  const GridPtr grid = Grid::create(c.grid.extent, c.grid.nodes);
  const int dim = grid->dim();
  const auto& cp = c.problem.coefficient_parameters;
  CoefficientField a;
  try {
    if (c.problem.coefficients == "identity") {
      a = CoefficientField::identity(grid);
    } else if (c.problem.coefficients == "constant") {
      a = CoefficientField::constant(grid, symmetric(cp, 0));
    } else {
      a = CoefficientField::affine(grid, symmetric(cp, 0), symmetric(cp, 3), symmetric(cp, 6));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: problem.coefficients: ") + e.what(), "problem.coefficients");
  }

  const auto& rp = c.problem.reaction_parameters;
  ReactionFamily b = ReactionFamily::zero();
  try {
    const std::string& r = c.problem.reaction;
    if (r == "linear") {
      Vector2 cz = Vector2::Zero();
      for (int k = 0; k < dim; ++k) cz[k] = rp[2 + k];
      b = ReactionFamily::linear(rp[0], rp[1], cz);
    } else if (r == "cubic") {
      b = ReactionFamily::cubic();
    } else if (r == "power") {
      b = ReactionFamily::power(rp[0], rp.size() > 1 ? rp[1] : 1.0);
    } else if (r == "sine") {
      b = ReactionFamily::sine(rp.empty() ? 1.0 : rp[0]);
    } else if (r == "polynomial") {
      b = ReactionFamily::polynomial(rp);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: problem.reaction: ") + e.what(), "problem.reaction");
  }

  const auto& bp = c.boundary.parameters;
  const std::string& preset = c.boundary.preset;
  BoundaryData data;
  if (preset == "hermite") {
    data = BoundaryData::hermite_1d(grid, bp[0], bp[1]);
  } else if (preset == "zero") {
    data = BoundaryData::from_function(
        grid, [](const Point&) { return 0.0; }, [](const Point&) { return Vector2(0.0, 0.0); }, "zero");
  } else if (preset == "harmonic") {
    if (dim == 1) {
      data = BoundaryData::from_function(
          grid, [](const Point& x) { return x[0]; }, [](const Point&) { return Vector2(1.0, 0.0); }, "harmonic");
    } else {
      data = BoundaryData::from_function(
          grid, [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; },
          [](const Point& x) { return Vector2(2.0 * x[0], -2.0 * x[1]); }, "harmonic");
    }
  } else if (preset == "exp_sin") {
    const double k = bp[0];
    if (dim == 1) {
      data = BoundaryData::from_function(
          grid, [k](const Point& x) { return std::exp(x[0]) * std::sin(k * x[0]); },
          [k](const Point& x) {
            return Vector2(std::exp(x[0]) * (std::sin(k * x[0]) + k * std::cos(k * x[0])), 0.0);
          },
          "exp_sin");
    } else {
      data = BoundaryData::from_function(
          grid, [k](const Point& x) { return std::exp(x[0]) * std::sin(k * x[1]); },
          [k](const Point& x) {
            return Vector2(std::exp(x[0]) * std::sin(k * x[1]), k * std::exp(x[0]) * std::cos(k * x[1]));
          },
          "exp_sin");
    }
  } else if (preset == "sine") {
    const double k = bp[0];
    const double wx = k * std::numbers::pi / grid->extent(0);
    const double wy = dim == 2 ? k * std::numbers::pi / grid->extent(1) : 0.0;
    data = BoundaryData::from_function(
        grid,
        [=](const Point& x) { return std::sin(wx * x[0]) * (dim == 2 ? std::sin(wy * x[1]) : 1.0); },
        [=](const Point& x) {
          if (dim == 1) return Vector2(wx * std::cos(wx * x[0]), 0.0);
          return Vector2(wx * std::cos(wx * x[0]) * std::sin(wy * x[1]), wy * std::sin(wx * x[0]) * std::cos(wy * x[1]));
        },
        "sine");
  } else {
    fs::path table = c.boundary.table;
    if (table.is_relative() && !c.base_dir.empty()) table = c.base_dir / table;
    data = BoundaryData::from_nodal(read_nodal_table(grid, table), "nodal");
  }
  return ProblemSpec::create(std::move(a), std::move(b), std::move(data));
}

// ---------------------------------------------------------------------------
// Output

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string field_csv(const ScalarField& field) {
  const Grid& g = *field.grid();
  std::string s = g.dim() == 1 ? "x,value\n" : "x,y,value\n";
  for (int k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    s += format_number(x[0]);
    if (g.dim() == 2) s += "," + format_number(x[1]);
    s += "," + format_number(field[k]) + "\n";
  }
  return s;
}

namespace {

std::string history_csv(const ContinuationState& st) {
  std::string s = "p,e_p,a_p,grad_norm,iters\n";
  for (const LevelRecord& r : st.history) {
    s += format_number(r.p) + "," + format_number(r.energy.e_p) + "," + format_number(r.energy.a) + "," +
         format_number(r.inner.grad_norm) + "," + std::to_string(r.inner.iterations) + "\n";
  }
  return s;
}

void kv(YAML::Emitter& out, const char* key, double value) {
  out << YAML::Key << key << YAML::Value << format_number(value);
}
void kv(YAML::Emitter& out, const char* key, int value) { out << YAML::Key << key << YAML::Value << value; }
void kv(YAML::Emitter& out, const char* key, bool value) {
  out << YAML::Key << key << YAML::Value << (value ? "true" : "false");
}
void kv(YAML::Emitter& out, const char* key, const std::string& value) {
  out << YAML::Key << key << YAML::Value << value;
}

void emit_history(YAML::Emitter& out, const ContinuationState& st) {
  out << YAML::Key << "history" << YAML::Value << YAML::BeginSeq;
  for (const LevelRecord& r : st.history) {
    out << YAML::BeginMap;
    kv(out, "p", r.p);
    kv(out, "energy", r.energy.total);
    kv(out, "e_p", r.energy.e_p);
    kv(out, "a_p", r.energy.a);
    kv(out, "e_sup", r.e_sup);
    kv(out, "converged", r.inner.converged);
    kv(out, "stationary_at_rounding", r.inner.stationary_at_rounding);
    kv(out, "iterations", r.inner.iterations);
    kv(out, "accepted_steps", r.inner.accepted_steps);
    kv(out, "gradient_steps", r.inner.gradient_steps);
    kv(out, "grad_norm", r.inner.grad_norm);
    kv(out, "tolerance", r.inner.tolerance);
    kv(out, "el2_mismatch", r.inner.el2_mismatch);
    kv(out, "warm_start_energy", r.warm_start_energy);
    kv(out, "cold_start_energy", r.cold_start_energy);
    kv(out, "normalization_residual", r.normalization_residual);
    kv(out, "duality_residual", r.duality_residual);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void emit_el(YAML::Emitter& out, const ElCheck& el) {
  kv(out, "e", el.e);
  kv(out, "el1_residual", el.el1_residual);
  kv(out, "flatness", el.flatness);
  kv(out, "el2_residual", el.el2_residual);
  kv(out, "sign_violations", el.sign_violations);
  kv(out, "support_nodes", el.support_nodes);
  kv(out, "boundary_layer_mass", el.boundary_layer_mass);
  kv(out, "degenerate", el.degenerate);
}

void emit_certificate(YAML::Emitter& out, const CertificateReport& c) {
  out << YAML::Key << "certificate" << YAML::Value << YAML::BeginMap;
  kv(out, "e_infty_estimate", c.e_infty_estimate);
  kv(out, "e_sup", c.e_sup);
  emit_el(out, c.el);
  kv(out, "normalization_residual", c.normalization_residual);
  kv(out, "duality_residual", c.duality_residual);
  kv(out, "aronsson_residual", c.aronsson_residual);
  if (c.almost_min) {
    const AlmostMinimiserStats& m = *c.almost_min;
    out << YAML::Key << "almost_minimiser" << YAML::Value << YAML::BeginMap;
    kv(out, "trials", m.trials);
    kv(out, "evaluations", m.evaluations);
    kv(out, "violations", m.violations);
    kv(out, "fitted_M", m.fitted_m);
    kv(out, "C2_bound", m.c2_bound);
    kv(out, "M_theory", m.m_theory);
    kv(out, "noise_floor", m.noise_floor);
    kv(out, "amplitude_stable", m.amplitude_stable);
    out << YAML::Key << "per_amplitude" << YAML::Value << YAML::BeginSeq;
    for (const AmplitudeStats& a : m.per_amplitude) {
      out << YAML::Flow << YAML::BeginMap;
      kv(out, "amplitude", a.amplitude);
      kv(out, "max_D", a.max_d);
      kv(out, "violations", a.violations);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  if (!c.energy_identity_residuals.empty()) {
    out << YAML::Key << "energy_identities" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, r] : c.energy_identity_residuals) kv(out, name.c_str(), r);
    out << YAML::EndMap;
  }
  out << YAML::Key << "verdicts" << YAML::Value << YAML::BeginMap;
  for (const Verdict& v : c.verdicts) {
    out << YAML::Key << v.name << YAML::Value << YAML::Flow << YAML::BeginMap;
    kv(out, "value", v.value);
    kv(out, "threshold", v.threshold);
    kv(out, "pass", v.pass);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  kv(out, "pass", c.pass());
  out << YAML::EndMap;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CertificateOptions certificate_options(const RunConfig& c, bool with_mc) {
  CertificateOptions o;
  o.thresholds = {c.diagnostics.el1, c.diagnostics.flatness, c.diagnostics.el2, c.diagnostics.normalization,
                  c.diagnostics.duality};
  o.run_mc = with_mc && c.diagnostics.run_mc;
  o.mc.trials = c.diagnostics.mc_trials;
  o.mc.amplitudes = c.diagnostics.amplitudes;
  o.mc.seed = c.seed;
  o.run_energy_identities = c.diagnostics.energy_identities;
  return o;
}

ContinuationOptions continuation_options(const RunConfig& c) {
  ContinuationOptions o;
  o.p_start = c.solver.p_start;
  o.p_max = c.solver.p_max;
  o.stop_tolerance = c.solver.stop_tolerance;
  o.early_stop = c.solver.early_stop;
  o.inner.tolerance = c.solver.tolerance;
  o.inner.max_iterations = c.solver.max_iterations;
  o.sigma = c.solver.sigma;
  o.p0 = c.solver.p0;
  o.zero_threshold = c.solver.zero_threshold;
  return o;
}

struct Sensitivity {
  double sigma = 0.0;
  double e_p = 0.0;
  double e_p_doubled = 0.0;
  double relative_change = 0.0;
};

}  // namespace

RunArtifact run(const RunConfig& config, const fs::path& out_dir) {
  RunArtifact art;
  art.directory = out_dir;
  fs::create_directories(out_dir);
  const ProblemSpec spec = build_problem(config);
  const GridPtr& grid = spec.grid();

  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "provenance" << YAML::Value << YAML::BeginMap;
  kv(out, "program", std::string("linfel"));
  kv(out, "version", std::string(kVersion));
  out << YAML::Key << "seed" << YAML::Value << std::to_string(config.seed);
  kv(out, "mode", to_string(config.mode));
  kv(out, "generated", utc_timestamp());
  out << YAML::EndMap;
  out << YAML::Key << "config" << YAML::Value;
  emit_config(out, config);

  std::vector<std::string> failures;
  bool not_converged = false;
  try {
    if (config.mode == RunMode::kOracle1D) {
      const Oracle1DSolution o = oracle_1d(config.oracle.a, config.oracle.b);
      art.oracle = o;
      const BruteForce1D bf =
          oracle_1d_brute_force(o.a, o.b, config.oracle.brute_force_cells, config.oracle.brute_force_starts, config.seed);
      const ScalarField u = o.sample_u(grid);
      const ScalarField f = o.sample_f(grid);
      const Vector s = o.sample_d2u(grid);
      const ElCheck el = check_el_system(spec, u, s, f, o.e_infty);
      out << YAML::Key << "result" << YAML::Value << YAML::BeginMap;
      kv(out, "e_infty", o.e_infty);
      if (o.switch_point) {
        kv(out, "switch", *o.switch_point);
      } else {
        kv(out, "switch", std::string("none"));
      }
      kv(out, "sign", o.sign);
      kv(out, "boundary_residual", o.boundary_residual());
      kv(out, "brute_force_e_infty", bf.e_infty);
      kv(out, "brute_force_relative_gap", std::abs(bf.e_infty - o.e_infty) / o.e_infty);
      out << YAML::Key << "el_check" << YAML::Value << YAML::BeginMap;
      emit_el(out, el);
      out << YAML::EndMap << YAML::EndMap;
      write_text(out_dir / "u.csv", field_csv(u));
      write_text(out_dir / "S.csv", field_csv(ScalarField(grid, s)));
      write_text(out_dir / "f.csv", field_csv(f));
    } else {
      const ContinuationOptions opts = continuation_options(config);
      ContinuationState st = run_continuation(spec, ContinuationMode::kConstruct, opts);
      std::optional<Sensitivity> sens;
      if (config.mode == RunMode::kCertify) {
        ContinuationOptions copts = opts;
        copts.anchor = st.u;
        ContinuationState cs = run_continuation(spec, ContinuationMode::kCertify, copts);
        EnergyParams doubled{cs.history.back().p, 2.0 * cs.sigma, cs.anchor, cs.p0};
        const InnerResult r = minimize_inner(spec, doubled, cs.u, opts.inner);
        Sensitivity s;
        s.sigma = cs.sigma;
        s.e_p = cs.history.back().energy.e_p;
        s.e_p_doubled = r.report.energy.e_p;
        s.relative_change = s.e_p > 0.0 ? std::abs(s.e_p_doubled - s.e_p) / s.e_p : 0.0;
        sens = s;
        st = std::move(cs);
      }
      not_converged = !st.all_converged;

      const LevelRecord& last = st.history.back();
      out << YAML::Key << "result" << YAML::Value << YAML::BeginMap;
      kv(out, "e_infty_estimate", last.energy.e_p);
      kv(out, "e_sup", last.e_sup);
      kv(out, "p_final", last.p);
      kv(out, "levels", static_cast<int>(st.history.size()));
      kv(out, "all_converged", st.all_converged);
      kv(out, "stopped_early", st.stopped_early);
      kv(out, "monotone", st.monotone);
      if (st.mode == ContinuationMode::kCertify) {
        kv(out, "sigma", st.sigma);
        kv(out, "p0", st.p0);
        kv(out, "penalty_decreasing", st.penalty_decreasing);
      }
      if (sens) {
        out << YAML::Key << "sigma_sensitivity" << YAML::Value << YAML::BeginMap;
        kv(out, "sigma", sens->sigma);
        kv(out, "e_p", sens->e_p);
        kv(out, "e_p_doubled_sigma", sens->e_p_doubled);
        kv(out, "relative_change", sens->relative_change);
        out << YAML::EndMap;
      }
      if (st.kernel) {
        const AdjointKernel& k = *st.kernel;
        double l1 = 0.0;
        for (int i = 0; i < grid->size(); ++i) l1 += grid->weights()[i] * std::abs(k.f[i]);
        out << YAML::Key << "adjoint_kernel" << YAML::Value << YAML::BeginMap;
        kv(out, "branch", std::string(k.branch == AdjointKernel::Branch::kBoundaryValue ? "boundary_value" : "kernel"));
        kv(out, "condition_estimate", k.condition_estimate);
        kv(out, "residual", k.residual);
        kv(out, "converged", k.converged);
        kv(out, "power_iterations", k.power_iterations);
        kv(out, "l1_norm", l1);
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
      emit_history(out, st);

      for (const LevelRecord& r : st.history) {
        if (last.energy.e_p > 0.0 && r.normalization_residual > config.diagnostics.normalization) {
          failures.push_back("normalisation identity broken at p = " + format_number(r.p));
        }
        if (r.duality_residual > config.diagnostics.duality) {
          failures.push_back("duality identity broken at p = " + format_number(r.p));
        }
      }

      MultiplierSet m = st.multipliers;
      if (st.kernel) {
        m.f = st.kernel->f;
        m.e_p = 0.0;
        m.degenerate = false;
        m.normalization_residual = 0.0;
      }
      const bool with_mc = config.mode != RunMode::kSolve;
      CertificateReport cert = certify(spec, st.u, m, certificate_options(config, with_mc));
      if (config.mode == RunMode::kDiagnose) {
        const ScalarField target(grid, assemble_linearization(spec, st.u).full * st.u.values());
        const CorrectorResult corr = boundary_corrector(spec, target, st.u);
        out << YAML::Key << "boundary_corrector" << YAML::Value << YAML::BeginMap;
        kv(out, "floor_nodes", corr.floor_nodes);
        out << YAML::Key << "collar" << YAML::Value << YAML::BeginSeq;
        for (const CollarError& c : corr.collar) {
          out << YAML::Flow << YAML::BeginMap;
          kv(out, "radius", c.radius);
          kv(out, "error", c.error);
          kv(out, "nodes", c.nodes);
          out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
        write_text(out_dir / "corrector.csv", field_csv(corr.v));
      }
      emit_certificate(out, cert);

      write_text(out_dir / "u.csv", field_csv(st.u));
      write_text(out_dir / "S.csv", field_csv(eval_S(spec, st.u)));
      write_text(out_dir / "f.csv", field_csv(m.f));
      if (st.mode == ContinuationMode::kCertify) write_text(out_dir / "phi.csv", field_csv(m.phi));
      write_text(out_dir / "history.csv", history_csv(st));
      art.certificate = std::move(cert);
      art.state = std::move(st);
    }
  } catch (const InvariantError& e) {
    failures.push_back(e.what());
  } catch (const DomainError& e) {
    art.exit_code = kExitNotConverged;
    art.message = e.what();
  }
  if (!failures.empty()) {
    art.exit_code = kExitInvariant;
    art.message = failures.front();
  } else if (art.exit_code == kExitOk && not_converged) {
    art.exit_code = kExitNotConverged;
    art.message = "inner solver did not converge at every level";
  }
  out << YAML::Key << "exit" << YAML::Value << YAML::BeginMap;
  kv(out, "code", art.exit_code);
  kv(out, "message", art.message.empty() ? std::string("ok") : art.message);
  out << YAML::EndMap;
  out << YAML::EndMap;
  write_text(out_dir / "report.yaml", std::string(out.c_str()) + "\n");
  return art;
}

// ---------------------------------------------------------------------------
// Compare

namespace {

struct Table {
  std::string header;
  std::vector<std::vector<double>> rows;
};

std::optional<Table> read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  Table t;
  std::getline(in, t.header);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t end = std::min(line.find(',', start), line.size());
      double v = std::numeric_limits<double>::quiet_NaN();
      std::from_chars(line.data() + start, line.data() + end, v);
      cells.push_back(v);
      start = end + 1;
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

YAML::Node load_report(const fs::path& dir) {
  try {
    return YAML::LoadFile((dir / "report.yaml").string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("compare: cannot read " + (dir / "report.yaml").string() + ": " + e.what(), "report");
  }
}

double report_e_infty(const YAML::Node& r) {
  const YAML::Node res = r["result"];
  if (!res) return std::numeric_limits<double>::quiet_NaN();
  if (res["e_infty_estimate"]) return res["e_infty_estimate"].as<double>();
  if (res["e_infty"]) return res["e_infty"].as<double>();
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

bool CompareReport::identical() const {
  if (e_infty_delta != 0.0 || history_linf != 0.0 || !verdict_changes.empty()) return false;
  for (const auto& [name, d] : fields) {
    if (d.linf != 0.0 || d.l1 != 0.0) return false;
  }
  return true;
}

bool CompareReport::pass() const {
  if (!(e_infty_delta <= tolerance) || !(history_linf <= tolerance) || !verdict_changes.empty()) return false;
  for (const auto& [name, d] : fields) {
    if (!(d.linf <= tolerance)) return false;
  }
  return true;
}

CompareReport compare(const fs::path& a, const fs::path& b, double tolerance) {
  const YAML::Node ra = load_report(a), rb = load_report(b);
  const RunConfig ca = parse_config(YAML::Dump(ra["config"]));
  const RunConfig cb = parse_config(YAML::Dump(rb["config"]));
  if (!(ca.problem == cb.problem) || !(ca.boundary == cb.boundary)) {
    throw ConfigError("compare: the artifacts solve different problems", "problem");
  }
  if (ca.grid.extent != cb.grid.extent) throw ConfigError("compare: grids differ", "grid");
  // Nested grids are compared on the coarse nodes.
  const bool a_coarse = ca.grid.nodes[0] <= cb.grid.nodes[0];
  const GridConfig& coarse = a_coarse ? ca.grid : cb.grid;
  const GridConfig& fine = a_coarse ? cb.grid : ca.grid;
  std::vector<int> stride(coarse.nodes.size());
  for (std::size_t k = 0; k < coarse.nodes.size(); ++k) {
    const int nc = coarse.nodes[k] - 1, nf = fine.nodes[k] - 1;
    if (nf % nc != 0 || (k > 0 && nf / nc != stride[0])) throw ConfigError("compare: grids are not nested", "grid");
    stride[k] = nf / nc;
  }
  const GridPtr grid = Grid::create(coarse.extent, coarse.nodes);

  CompareReport rep;
  rep.tolerance = tolerance;
  rep.e_infty_delta = std::abs(report_e_infty(ra) - report_e_infty(rb));
  if (std::isnan(rep.e_infty_delta) && std::isnan(report_e_infty(ra)) && std::isnan(report_e_infty(rb))) {
    rep.e_infty_delta = 0.0;
  }
  const double inf = std::numeric_limits<double>::infinity();
  for (const char* name : {"u", "S", "f", "phi", "corrector"}) {
    const auto ta = read_table(a / (std::string(name) + ".csv"));
    const auto tb = read_table(b / (std::string(name) + ".csv"));
    if (!ta && !tb) continue;
    FieldDistance d;
    if (!ta || !tb || ta->header != tb->header) {
      d = {inf, inf};
    } else {
      const Table& tc = a_coarse ? *ta : *tb;
      const Table& tf = a_coarse ? *tb : *ta;
      if (static_cast<int>(tc.rows.size()) != grid->size()) {
        d = {inf, inf};
      } else {
        for (int k = 0; k < grid->size(); ++k) {
          const auto ij = grid->multi_index(k);
          const int kf = grid->dim() == 1 ? ij[0] * stride[0]
                                          : ij[0] * stride[0] * fine.nodes[1] + ij[1] * stride[1];
          if (kf >= static_cast<int>(tf.rows.size())) {
            d = {inf, inf};
            break;
          }
          const double diff = std::abs(tc.rows[k].back() - tf.rows[kf].back());
          const double dd = std::isnan(diff) ? inf : diff;
          d.linf = std::max(d.linf, dd);
          d.l1 += grid->weights()[k] * dd;
        }
      }
    }
    rep.fields[name] = d;
  }
  {
    const auto ha = read_table(a / "history.csv"), hb = read_table(b / "history.csv");
    if (ha || hb) {
      if (!ha || !hb || ha->rows.size() != hb->rows.size()) {
        rep.history_linf = inf;
      } else {
        for (std::size_t i = 0; i < ha->rows.size(); ++i) {
          if (ha->rows[i].size() != hb->rows[i].size()) {
            rep.history_linf = inf;
            break;
          }
          for (std::size_t j = 0; j < ha->rows[i].size(); ++j) {
            rep.history_linf = std::max(rep.history_linf, std::abs(ha->rows[i][j] - hb->rows[i][j]));
          }
        }
      }
    }
  }
  const YAML::Node va = ra["certificate"] ? ra["certificate"]["verdicts"] : YAML::Node();
  const YAML::Node vb = rb["certificate"] ? rb["certificate"]["verdicts"] : YAML::Node();
  std::set<std::string> names;
  for (const YAML::Node& v : {va, vb}) {
    if (v && v.IsMap()) {
      for (const auto& kv2 : v) names.insert(kv2.first.as<std::string>());
    }
  }
  for (const std::string& n : names) {
    const bool pa = va && va[n] ? va[n]["pass"].as<bool>() : false;
    const bool pb = vb && vb[n] ? vb[n]["pass"].as<bool>() : false;
    const bool has_a = va && va[n], has_b = vb && vb[n];
    if (pa != pb || has_a != has_b) rep.verdict_changes.push_back(n);
  }
  return rep;
}

std::string to_yaml(const CompareReport& r) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "fields" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, d] : r.fields) {
    out << YAML::Key << name << YAML::Value << YAML::Flow << YAML::BeginMap;
    kv(out, "linf", d.linf);
    kv(out, "l1", d.l1);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  kv(out, "e_infty_delta", r.e_infty_delta);
  kv(out, "history_linf", r.history_linf);
  out << YAML::Key << "verdict_changes" << YAML::Value << YAML::Flow << r.verdict_changes;
  kv(out, "tolerance", r.tolerance);
  kv(out, "identical", r.identical());
  kv(out, "pass", r.pass());
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace linfel
