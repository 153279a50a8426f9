#include "rbdsdep/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rbdsdep/analysis.hpp"
#include "rbdsdep/error.hpp"
#include "rbdsdep/io.hpp"
#include "rbdsdep/parallel.hpp"
#include "rbdsdep/schemes.hpp"
#include "rbdsdep/solver.hpp"

namespace rbdsdep {
namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kVersion = "1.0.0";

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

struct RawEntry {
  std::string value;
  std::size_t line = 0;
};

enum class Kind { number, integer, boolean, text, expr, list, choice };

struct KeySpec {
  std::string_view name;  // "section.key"
  Kind kind;
  std::string_view fallback;  // empty: optional without default
  std::string_view choices = {};
};

// Every recognised key with its type and default.
constexpr KeySpec kKeys[] = {
    {"grid.horizon", Kind::number, "1"},
    {"grid.steps", Kind::integer, "4"},
    {"dims.d", Kind::integer, "1"},
    {"dims.marks", Kind::list, ""},
    {"dims.intensities", Kind::list, ""},
    {"drivers.paths", Kind::integer, "1000"},
    {"drivers.seed", Kind::integer, "1"},
    {"drivers.mode", Kind::choice, "gaussian", "gaussian|two-point"},
    {"drivers.exhaustive", Kind::boolean, "false"},
    {"problem.f", Kind::expr, "0"},
    {"problem.g", Kind::expr, "0"},
    {"problem.pi", Kind::expr, ""},
    {"problem.ft", Kind::expr, ""},
    {"problem.barrier", Kind::expr, "-10"},
    {"problem.terminal", Kind::expr, "0"},
    {"problem.growth_c", Kind::number, "1"},
    {"problem.alpha", Kind::number, "0.5"},
    {"scheme.solver", Kind::choice, "tree", "tree|lsmc"},
    {"scheme.basis", Kind::choice, "polynomial", "polynomial|indicator"},
    {"scheme.degree", Kind::integer, "2"},
    {"scheme.ridge", Kind::number, "1e-08"},
    {"scheme.condition_limit", Kind::number, "1000000000000"},
    {"scheme.max_steps", Kind::integer, "6"},
    {"scheme.node_budget", Kind::integer, "262144"},
    {"scheme.envelope_y", Kind::list, "-10,10"},
    {"scheme.envelope_z", Kind::list, "-10,10"},
    {"scheme.envelope_u", Kind::list, "-10,10"},
    {"scheme.grid_points", Kind::integer, "201"},
    {"scheme.indices", Kind::list, ""},
    {"scheme.iterations", Kind::integer, "5"},
    {"pipeline.run", Kind::choice, "solve", "solve|inf_sequence|bracketing|sup_sequence|compare|ito_check"},
    {"compare.f", Kind::expr, ""},
    {"compare.g", Kind::expr, ""},
    {"compare.barrier", Kind::expr, ""},
    {"compare.terminal", Kind::expr, ""},
    {"ito.initial", Kind::expr, "0"},
    {"ito.drift", Kind::expr, "0"},
    {"ito.backward", Kind::expr, "0"},
    {"ito.reflection", Kind::expr, "0"},
    {"ito.expected_second_moment", Kind::number, ""},
    {"output.directory", Kind::text, "out"},
};

const KeySpec* find_key(std::string_view name) {
  for (const KeySpec& k : kKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

// "ito.forwardK" / "ito.jumpK" with K >= 1.
bool indexed_key(std::string_view name, std::string_view prefix, std::size_t& index) {
  if (name.substr(0, prefix.size()) != prefix || name.size() == prefix.size()) return false;
  const std::string_view digits = name.substr(prefix.size());
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
  return ec == std::errc() && end == digits.data() + digits.size() && index >= 1;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, RawEntry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::string raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it != entries_.end()) return it->second.value;
    const KeySpec* spec = find_key(key);
    return spec ? std::string(spec->fallback) : std::string();
  }

  double number(const std::string& key) const {
    const std::string text = raw(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
      throw ConfigError(key + ": expected a finite number, got '" + text + "'");
    }
    return v;
  }

  std::uint64_t integer(const std::string& key) const {
    const std::string text = raw(key);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
      throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
    }
    return v;
  }

  bool boolean(const std::string& key) const {
    const std::string text = raw(key);
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    const std::string text = raw(key);
    if (trim(text).empty()) return out;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
      const std::string t = trim(item);
      double v = 0.0;
      const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) {
        throw ConfigError(key + ": expected a comma separated list of numbers, got '" + text + "'");
      }
      out.push_back(v);
    }
    return out;
  }

  Expr expr(const std::string& key) const {
    try {
      return parse_expr(raw(key));
    } catch (const ParseError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  }

  std::string choice(const std::string& key) const {
    const std::string text = raw(key);
    const KeySpec* spec = find_key(key);
    std::stringstream options{std::string(spec->choices)};
    std::string option;
    while (std::getline(options, option, '|')) {
      if (option == text) return text;
    }
    throw ConfigError(key + ": expected one of " + std::string(spec->choices) + ", got '" + text + "'");
  }

 private:
  std::map<std::string, RawEntry> entries_;
};

std::map<std::string, RawEntry> read_entries(std::string_view text) {
  std::map<std::string, RawEntry> entries;
  std::string section;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_number;
    std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#' || line.front() == ';') {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_number);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
    } else {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
      if (section.empty()) throw ConfigError(where + ": key outside any section");
      const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
      const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));
      std::size_t index = 0;
      if (!find_key(key) && !indexed_key(key, "ito.forward", index) && !indexed_key(key, "ito.jump", index)) {
        throw ConfigError(where + ": unknown key '" + key + "'");
      }
      if (!entries.emplace(key, RawEntry{value, line_number}).second) {
        throw ConfigError(where + ": duplicate key '" + key + "'");
      }
    }
    if (end == text.size()) break;
  }
  return entries;
}

std::string canonical_value(const Reader& r, const std::string& key, Kind kind) {
  switch (kind) {
    case Kind::number: return io::format_double(r.number(key));
    case Kind::integer: return std::to_string(r.integer(key));
    case Kind::boolean: return r.boolean(key) ? "true" : "false";
    case Kind::expr: return r.expr(key).to_string();
    case Kind::choice: return r.choice(key);
    case Kind::text: return r.raw(key);
    case Kind::list: {
      std::string out;
      for (double v : r.list(key)) out += (out.empty() ? "" : ",") + io::format_double(v);
      return out;
    }
  }
  return r.raw(key);
}

Interval interval_of(const Reader& r, const std::string& key) {
  const std::vector<double> v = r.list(key);
  if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError(key + ": expected 'lo, hi' with lo < hi");
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------------------------
// Pipelines

struct Outputs {
  std::filesystem::path directory;
  RunResult result;

  void write(const std::string& name, const std::string& contents) {
    const std::filesystem::path path = directory / name;
    io::write_atomic(path, contents);
    result.files.push_back(path);
  }

  void check(bool ok, const std::string& message) {
    result.messages.push_back(std::string(ok ? "PASS " : "FAIL ") + message);
    if (!ok) result.exit_code = 1;
  }
};

Solver make_solver(const ExperimentConfig& c) {
  const Problem& p = c.problem;
  if (c.solver == SolverKind::tree) {
    return Solver::tree(std::make_shared<const TreeModel>(p.grid, p.dim, p.marks, c.limits));
  }
  auto scenarios = std::make_shared<const ScenarioSet>(
      c.exhaustive ? enumerate_two_point(p.grid, p.dim, p.marks)
                   : simulate_scenarios(p.grid, p.dim, p.marks, c.paths, c.seed, c.mode));
  return Solver::lsmc(scenarios, c.scheme);
}

json norms_json(const NormReport& n) {
  return json{{"sup_Y_sq", n.sup_value_sq},
              {"Z_sq_dt", n.w_integrand_sq},
              {"U_sq_dt", n.jump_integrand_sq},
              {"K_T_sq", n.terminal_reflection_sq}};
}

json invariants_json(const InvariantReport& r) {
  return json{{"skorokhod", r.skorokhod},
              {"K0_abs_max", r.initial_reflection},
              {"min_dK", r.smallest_push},
              {"min_Y_minus_S", r.smallest_barrier_gap},
              {"pass", r.pass()}};
}

json solution_json(const SolutionGrid& s, const TimeGrid& grid, const MarkSpace& marks) {
  return json{{"Y0", s.root()},
              {"Y0_standard_error", s.root_standard_error},
              {"K_T_mean", s.mean_at(s.reflection, s.steps)},
              {"norms", norms_json(norm_report(s, grid, marks))},
              {"invariants", invariants_json(check_invariants(s))}};
}

std::string report_text(const ExperimentConfig& c, json body) {
  json out{{"schema", io::kReportSchema}, {"config_hash", c.hash}, {"pipeline", to_string(c.pipeline)}};
  for (auto& [k, v] : body.items()) out[k] = v;
  return out.dump(2) + "\n";
}

void check_invariants_of(Outputs& o, const SolutionGrid& s, const std::string& label) {
  const InvariantReport r = check_invariants(s);
  o.check(r.pass(), label + " invariants (Skorokhod " + io::format_double(r.skorokhod) + ", min dK " +
                        io::format_double(r.smallest_push) + ")");
}

void run_solve(const ExperimentConfig& c, const Solver& solver, Outputs& o) {
  const SolutionGrid s = solver.solve(c.problem);
  std::ostringstream csv;
  write_solution_csv(csv, s, c.problem.grid);
  o.write("solution.csv", csv.str());
  o.write("report.json", report_text(c, json{{"solution", solution_json(s, c.problem.grid, c.problem.marks)}}));
  check_invariants_of(o, s, "solution");
  o.result.messages.push_back("Y0 = " + io::format_double(s.root()));
}

void run_sequence(const ExperimentConfig& c, const Solver& solver, Outputs& o) {
  const Problem& p = c.problem;
  SequenceRun run;
  json body;
  if (c.pipeline == Pipeline::bracketing) {
    run = run_bracketing_sequence(p, solver, c.iterations);
    body["lower_anchor_Y0"] = run.lower_anchor->root();
    body["upper_anchor_Y0"] = run.upper_anchor->root();
  } else {
    const std::vector<double> ns = c.indices.empty() ? default_indices(p.generator.growth_c) : c.indices;
    const bool lower = c.pipeline == Pipeline::inf_sequence;
    run = lower ? run_inf_envelope_sequence(p, solver, c.envelope, ns)
                : run_sup_envelope_sequence(p, solver, c.envelope, ns);
    if (lower) {
      const SolutionGrid bound = solve_upper_bound(p, solver);
      double below = std::numeric_limits<double>::infinity();
      for (const SolutionGrid& s : run.solutions) {
        for (std::size_t j = 0; j < s.value.size(); ++j) below = std::min(below, bound.value[j] - s.value[j]);
      }
      body["V0"] = bound.root();
      body["min_V_minus_Y"] = below;
      o.check(below >= -kOrderingTolerance, "every envelope solution lies below V");
    }
  }
  std::ostringstream csv;
  write_sequence_csv(csv, run);
  o.write("sequence.csv", csv.str());
  body["mode"] = to_string(run.mode);
  body["indices"] = run.indices;
  body["Y0_series"] = run.root_series;
  body["early_stopped"] = run.early_stopped;
  body["ordering_holds"] = run.ordering_holds();
  body["violation"] = run.violation;
  o.write("report.json", report_text(c, body));
  o.check(run.ordering_holds(), std::string("sequence ordering") + (run.violation.empty() ? "" : ": " + run.violation));
  for (std::size_t j = 0; j < run.solutions.size(); ++j) {
    check_invariants_of(o, run.solutions[j], "member " + io::format_double(run.indices[j]));
  }
}

void run_compare(const ExperimentConfig& c, const Solver& solver, Outputs& o) {
  const ComparisonReport r = compare_solutions(c.problem, *c.second, solver);
  json body{{"verdict", to_string(r.verdict)},
            {"premises",
             {{"terminal_ordered", r.terminal_ordered},
              {"drift_ordered", r.drift_ordered},
              {"barrier_ordered", r.barrier_ordered},
              {"same_g", r.same_g},
              {"drift_samples", r.drift_samples}}},
            {"margin", r.margin},
            {"worst_step", r.worst_step},
            {"worst_path", r.worst_path},
            {"root_gap", r.root_gap}};
  o.write("report.json", report_text(c, body));
  o.check(r.verdict == Verdict::pass, std::string("comparison verdict ") + to_string(r.verdict));
}

void run_ito(const ExperimentConfig& c, Outputs& o) {
  const Problem& p = c.problem;
  const ScenarioSet scenarios = c.exhaustive ? enumerate_two_point(p.grid, p.dim, p.marks)
                                             : simulate_scenarios(p.grid, p.dim, p.marks, c.paths, c.seed, c.mode);
  ItoComponents components;
  components.initial = parse_expr(c.ito.initial);
  components.drift = parse_expr(c.ito.drift);
  components.backward = parse_expr(c.ito.backward);
  components.reflection = parse_expr(c.ito.reflection);
  for (const std::string& s : c.ito.forward) components.forward.push_back(parse_expr(s));
  for (const std::string& s : c.ito.jump) components.jump.push_back(parse_expr(s));
  const ItoReport r = ito_residual_check(scenarios, components);
  json body{{"paths", r.paths},
            {"max_residual", r.max_residual},
            {"martingale_mean", r.martingale_mean},
            {"martingale_standard_error", r.martingale_standard_error},
            {"second_moment", r.second_moment},
            {"second_moment_standard_error", r.second_moment_standard_error}};
  o.check(r.max_residual <= 1e-10, "discrete identity residual " + io::format_double(r.max_residual));
  o.check(std::fabs(r.martingale_mean) <= 5.0 * r.martingale_standard_error + 1e-14,
          "martingale terms mean zero within 5 SE");
  if (c.ito.expected_second_moment) {
    body["expected_second_moment"] = *c.ito.expected_second_moment;
    o.check(std::fabs(r.second_moment - *c.ito.expected_second_moment) <= 5.0 * r.second_moment_standard_error,
            "second moment within 5 SE of " + io::format_double(*c.ito.expected_second_moment));
  }
  o.write("report.json", report_text(c, body));
}

}  // namespace

const char* to_string(Pipeline pipeline) {
  switch (pipeline) {
    case Pipeline::solve: return "solve";
    case Pipeline::inf_sequence: return "inf_sequence";
    case Pipeline::bracketing: return "bracketing";
    case Pipeline::sup_sequence: return "sup_sequence";
    case Pipeline::compare: return "compare";
    case Pipeline::ito_check: return "ito_check";
  }
  return "solve";
}

ExperimentConfig parse_config(std::string_view text) {
  const std::map<std::string, RawEntry> entries = read_entries(text);
  const Reader r(entries);
  ExperimentConfig c;

  // Canonical text over every effective key, defaults included.
  std::vector<std::string> lines;
  for (const KeySpec& k : kKeys) {
    const std::string key(k.name);
    if (k.fallback.empty() && !r.has(key)) continue;
    lines.push_back(key + "=" + canonical_value(r, key, k.kind));
  }
  for (const auto& [key, entry] : entries) {
    if (!find_key(key)) lines.push_back(key + "=" + canonical_value(r, key, Kind::expr));
  }
  std::sort(lines.begin(), lines.end());
  for (const std::string& l : lines) c.canonical += l + "\n";
  c.hash = io::fnv1a_hex(c.canonical);

  const double horizon = r.number("grid.horizon");
  const std::uint64_t steps = r.integer("grid.steps");
  if (!(horizon > 0.0)) throw ConfigError("grid.horizon: must be > 0");
  if (steps == 0) throw ConfigError("grid.steps: must be >= 1");
  const std::uint64_t d = r.integer("dims.d");
  if (d == 0) throw ConfigError("dims.d: must be >= 1");
  const std::vector<double> marks = r.list("dims.marks");
  const std::vector<double> intensities = r.list("dims.intensities");
  if (marks.size() != intensities.size()) throw ConfigError("dims.marks / dims.intensities: lengths differ");
  try {
    c.problem.marks = MarkSpace(marks, intensities);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("dims.marks / dims.intensities: ") + e.what());
  }
  c.problem.grid = TimeGrid(horizon, steps);
  c.problem.dim = d;
  const std::size_t m = marks.size();

  c.paths = r.integer("drivers.paths");
  if (c.paths == 0) throw ConfigError("drivers.paths: must be >= 1");
  c.seed = r.integer("drivers.seed");
  c.mode = r.choice("drivers.mode") == "two-point" ? DriverMode::two_point : DriverMode::gaussian;
  c.exhaustive = r.boolean("drivers.exhaustive");
  const double dt = c.problem.grid.dt();
  if ((c.mode == DriverMode::two_point || c.exhaustive) && c.problem.marks.total_intensity() * dt >= 1.0) {
    throw ConfigError("dims.intensities: two-point drivers need total_intensity * dt < 1, got " +
                      io::format_double(c.problem.marks.total_intensity() * dt));
  }

  GeneratorSpec& g = c.problem.generator;
  g.f = r.expr("problem.f");
  g.g = r.expr("problem.g");
  if (r.has("problem.pi")) g.pi = r.expr("problem.pi");
  if (r.has("problem.ft")) g.ft = r.expr("problem.ft");
  g.growth_c = r.number("problem.growth_c");
  g.contraction_alpha = r.number("problem.alpha");
  if (!(g.growth_c > 0.0)) throw ConfigError("problem.growth_c: must be > 0");
  if (!(g.contraction_alpha > 0.0 && g.contraction_alpha < 1.0)) {
    throw ConfigError("problem.alpha: must satisfy 0 < alpha < 1 (strict contraction of g), got " +
                      io::format_double(g.contraction_alpha));
  }
  c.problem.barrier = r.expr("problem.barrier");
  c.problem.terminal = r.expr("problem.terminal");
  c.warnings = c.problem.validate();

  const std::string pipeline = r.choice("pipeline.run");
  const std::pair<std::string_view, Pipeline> pipelines[] = {
      {"solve", Pipeline::solve},           {"inf_sequence", Pipeline::inf_sequence},
      {"bracketing", Pipeline::bracketing}, {"sup_sequence", Pipeline::sup_sequence},
      {"compare", Pipeline::compare},       {"ito_check", Pipeline::ito_check}};
  for (const auto& [name, value] : pipelines) {
    if (name == pipeline) c.pipeline = value;
  }
  c.solver = r.choice("scheme.solver") == "lsmc" ? SolverKind::lsmc : SolverKind::tree;
  c.scheme.basis = r.choice("scheme.basis") == "indicator" ? BasisKind::indicator : BasisKind::polynomial;
  c.scheme.degree = static_cast<unsigned>(r.integer("scheme.degree"));
  c.scheme.ridge = r.number("scheme.ridge");
  c.scheme.condition_limit = r.number("scheme.condition_limit");
  try {
    c.scheme.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }
  c.limits.max_steps = r.integer("scheme.max_steps");
  c.limits.node_budget = r.integer("scheme.node_budget");
  const bool solves = c.pipeline != Pipeline::ito_check;
  if (solves && c.solver == SolverKind::tree) {
    if (steps > c.limits.max_steps) {
      throw ConfigError("grid.steps: tree solver allows at most scheme.max_steps=" + std::to_string(c.limits.max_steps));
    }
    const std::size_t bits = (d + m + 1) * steps;
    if (bits >= 63 || (std::size_t{1} << bits) > c.limits.node_budget) {
      throw ConfigError("scheme.node_budget: tree with 2^" + std::to_string(bits) + " leaves exceeds the budget");
    }
    if (c.problem.marks.total_intensity() * dt >= 1.0) {
      throw ConfigError("dims.intensities: tree solver needs total_intensity * dt < 1");
    }
  }
  if (solves && c.solver == SolverKind::lsmc && c.scheme.basis == BasisKind::indicator && c.mode != DriverMode::two_point &&
      !c.exhaustive) {
    throw ConfigError("scheme.basis: indicator basis needs drivers.mode = two-point");
  }

  c.envelope.y = interval_of(r, "scheme.envelope_y");
  c.envelope.z = interval_of(r, "scheme.envelope_z");
  c.envelope.u = interval_of(r, "scheme.envelope_u");
  c.envelope.grid_points = r.integer("scheme.grid_points");
  c.envelope.n = g.growth_c;
  c.indices = r.list("scheme.indices");
  c.iterations = r.integer("scheme.iterations");

  if (c.pipeline == Pipeline::inf_sequence || c.pipeline == Pipeline::sup_sequence) {
    for (double n : c.indices.empty() ? default_indices(g.growth_c) : c.indices) {
      EnvelopeParams params = c.envelope;
      params.n = n;
      try {
        params.validate(g.growth_c);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("scheme.indices / envelope: ") + e.what());
      }
    }
  }
  if (c.pipeline == Pipeline::bracketing) {
    if (!g.pi) throw ConfigError("problem.pi: required by the bracketing pipeline");
    if (!g.ft) throw ConfigError("problem.ft: required by the bracketing pipeline");
    if (c.iterations == 0) throw ConfigError("scheme.iterations: must be >= 1");
  }
  if (c.pipeline == Pipeline::compare) {
    Problem second = c.problem;
    if (r.has("compare.f")) second.generator.f = r.expr("compare.f");
    if (r.has("compare.g")) second.generator.g = r.expr("compare.g");
    if (r.has("compare.barrier")) second.barrier = r.expr("compare.barrier");
    if (r.has("compare.terminal")) second.terminal = r.expr("compare.terminal");
    second.validate();
    c.second = std::move(second);
  }

  c.ito.initial = r.raw("ito.initial");
  c.ito.drift = r.raw("ito.drift");
  c.ito.backward = r.raw("ito.backward");
  c.ito.reflection = r.raw("ito.reflection");
  c.ito.forward.assign(d, "0");
  c.ito.jump.assign(m, "0");
  for (const auto& [key, entry] : entries) {
    std::size_t index = 0;
    if (indexed_key(key, "ito.forward", index)) {
      if (index > d) throw ConfigError(key + ": index exceeds dims.d");
      c.ito.forward[index - 1] = entry.value;
    } else if (indexed_key(key, "ito.jump", index)) {
      if (index > m) throw ConfigError(key + ": index exceeds the mark count");
      c.ito.jump[index - 1] = entry.value;
    }
  }
  if (r.has("ito.expected_second_moment")) c.ito.expected_second_moment = r.number("ito.expected_second_moment");
  if (c.pipeline == Pipeline::ito_check) {
    for (const char* key : {"ito.initial", "ito.drift", "ito.backward", "ito.reflection"}) r.expr(key);
    for (const auto& [key, entry] : entries) {
      if (key.rfind("ito.forward", 0) == 0 || key.rfind("ito.jump", 0) == 0) r.expr(key);
    }
  }
  c.output_directory = r.raw("output.directory");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_directory) {
  const auto started = std::chrono::steady_clock::now();
  Outputs o;
  o.directory = output_directory;
  std::filesystem::create_directories(output_directory);
  for (const std::string& w : config.warnings) o.result.messages.push_back("WARN " + w);

  if (config.pipeline == Pipeline::ito_check) {
    run_ito(config, o);
  } else {
    const Solver solver = make_solver(config);
    switch (config.pipeline) {
      case Pipeline::solve: run_solve(config, solver, o); break;
      case Pipeline::compare: run_compare(config, solver, o); break;
      default: run_sequence(config, solver, o); break;
    }
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const auto now = std::chrono::system_clock::now();
  json manifest{{"schema", io::kManifestSchema},
                {"config_hash", config.hash},
                {"seed", config.seed},
                {"pipeline", to_string(config.pipeline)},
                {"version", kVersion},
                {"threads", thread_count()},
                {"wall_time_seconds", seconds},
                {"timestamp_unix", std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()},
                {"exit_code", o.result.exit_code},
                {"validators", o.result.messages}};
  json files = json::array();
  for (const auto& f : o.result.files) files.push_back(f.filename().string());
  manifest["files"] = files;
  o.write("manifest.json", manifest.dump(2) + "\n");
  return o.result;
}

std::string_view config_grammar() {
  return R"GRAMMAR(Config grammar (one experiment per file)

  file    := { line }
  line    := blank | comment | "[" section "]" | key "=" value
  comment := "#" ... | ";" ...
  value   := text to end of line; surrounding double quotes are stripped
  lists   := numbers separated by ","

Keys (defaults in parentheses)
  [grid]      horizon (1)  steps (4)
  [dims]      d (1)  marks (empty list)  intensities (empty list, same length as marks)
  [drivers]   paths (1000)  seed (1)  mode (gaussian | two-point)  exhaustive (false)
  [problem]   f (0)  g (0)  pi  ft  barrier (-10)  terminal (0)  growth_c (1)  alpha (0.5)
  [scheme]    solver (tree | lsmc)  basis (polynomial | indicator)  degree (2)
              ridge (1e-8)  condition_limit (1e12)  max_steps (6)  node_budget (262144)
              envelope_y / envelope_z / envelope_u (-10, 10)  grid_points (201)
              indices (1, 2, 4, 8, 16 clipped to >= growth_c)  iterations (5)
  [pipeline]  run (solve | inf_sequence | bracketing | sup_sequence | compare | ito_check)
  [compare]   f  g  barrier  terminal   (second problem; unset keys copy [problem])
  [ito]       initial drift backward reflection (0)  forward1..forwardd  jump1..jumpm (0)
              expected_second_moment
  [output]    directory (out)

Expressions use the grammar printed above. Unknown keys, duplicate keys, type mismatches and
violated preconditions are errors that name the key. The canonical form lists every effective
key as "section.key=value" in sorted order; its FNV-1a 64 hash is embedded in every output.
)GRAMMAR";
}

}  // namespace rbdsdep
