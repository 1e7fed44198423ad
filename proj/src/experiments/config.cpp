#include "rwad/experiments/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "rwad/errors.hpp"
#include "rwad/experiments/expression.hpp"

namespace rwad::experiments {

namespace pt = boost::property_tree;

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::chirp: return "chirp";
    case Kind::stirap: return "stirap";
    case Kind::rate_sweep: return "rate-sweep";
    case Kind::ensemble_sweep: return "ensemble-sweep";
    case Kind::crossings: return "crossings";
    case Kind::oscillatory_order: return "oscillatory-order";
  }
  return "?";
}

std::optional<Kind> parse_kind(std::string_view s) {
  for (Kind k : {Kind::chirp, Kind::stirap, Kind::rate_sweep, Kind::ensemble_sweep, Kind::crossings,
                 Kind::oscillatory_order})
    if (kind_name(k) == s) return k;
  return std::nullopt;
}

std::string_view schedule_name(ScheduleKind k) { return k == ScheduleKind::chirp ? "chirp" : "stirap"; }

QuantumSystem SystemSpec::build(double delta) const { return QuantumSystem(energies, delta * coupling); }

std::vector<double> EnsembleSpec::deltas() const {
  std::vector<double> d(samples);
  if (samples == 1) {
    d[0] = delta_min;
    return d;
  }
  for (int i = 0; i < samples; ++i) d[i] = delta_min + (delta_max - delta_min) * i / (samples - 1);
  d.back() = delta_max;
  return d;
}

namespace {

double parse_double(std::string_view text, std::string_view key) {
  std::string s(boost::algorithm::trim_copy(std::string(text)));
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  return v;
}

long long parse_int(std::string_view text, std::string_view key) {
  std::string s(boost::algorithm::trim_copy(std::string(text)));
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(std::string(text)));
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::string strip_comments(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.find_first_of(";#");
    if (cut != std::string::npos) line.erase(cut);
    boost::algorithm::trim(line);
    out += line;
    out += '\n';
  }
  return out;
}

const std::map<std::string, std::set<std::string>, std::less<>>& known_keys() {
  static const std::map<std::string, std::set<std::string>, std::less<>> keys{
      {"experiment", {"kind", "name", "seed", "long"}},
      {"system", {"energies", "chain", "matrix", "file"}},
      {"schedule",
       {"type", "levels", "initial", "target", "amplitude", "phase", "detunings", "tau1", "tau2", "margin"}},
      {"pulse", {"epsilon", "alpha", "subcritical"}},
      {"integrator", {"frame", "method", "rho", "max_step", "rel_tol", "reference_method", "reference_rho"}},
      {"output", {"grid", "dir", "svg_width", "svg_height"}},
      {"ensemble", {"delta_min", "delta_max", "samples"}},
      {"crossings", {"sizes", "w_max", "plot_points"}},
      {"rate", {"gap_floor"}},
      {"check",
       {"min_transfer", "min_drop", "compare_chirp", "slope_tolerance", "slope_mode", "max_error_ratio",
        "max_residual", "slope_margin", "max_drift"}},
  };
  return keys;
}

const std::set<std::string>& case_keys() {
  static const std::set<std::string> keys{"a", "h", "beta", "alpha"};
  return keys;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError(fmt::format("key '{}' appears outside any section", section));
      const std::set<std::string>* allowed = nullptr;
      if (section.rfind("case:", 0) == 0) {
        allowed = &case_keys();
      } else {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ConfigError(fmt::format("unknown section [{}]", section));
        allowed = &it->second;
      }
      for (const auto& [key, value] : body)
        if (!allowed->contains(key)) throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, section));
    }
  }

  std::optional<std::string> get(std::string_view section, std::string_view key) const {
    auto s = tree_.get_child_optional(pt::ptree::path_type(std::string(section), '\0'));
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(pt::ptree::path_type(std::string(key), '\0'));
    if (!v) return std::nullopt;
    return boost::algorithm::trim_copy(*v);
  }

  std::string label(std::string_view section, std::string_view key) const {
    return fmt::format("[{}] {}", section, key);
  }

  void read(std::string_view section, std::string_view key, double& out) const {
    if (auto v = get(section, key)) out = parse_double(*v, label(section, key));
  }
  void read(std::string_view section, std::string_view key, std::optional<double>& out) const {
    if (auto v = get(section, key)) out = parse_double(*v, label(section, key));
  }
  void read(std::string_view section, std::string_view key, int& out) const {
    if (auto v = get(section, key)) out = static_cast<int>(parse_int(*v, label(section, key)));
  }
  void read(std::string_view section, std::string_view key, bool& out) const {
    if (auto v = get(section, key)) out = parse_bool(*v, label(section, key));
  }
  void read(std::string_view section, std::string_view key, std::vector<double>& out) const {
    if (auto v = get(section, key)) out = parse_list(*v, label(section, key));
  }

  const pt::ptree& tree() const { return tree_; }

 private:
  const pt::ptree& tree_;
};

pt::ptree parse_tree(std::string_view text) {
  std::istringstream in(strip_comments(text));
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config (line {}): {}", e.line(), e.message()));
  }
  return tree;
}

CMat parse_matrix(std::string_view text) {
  std::vector<std::string> rows;
  boost::algorithm::split(rows, text, boost::algorithm::is_any_of("|"));
  const int n = static_cast<int>(rows.size());
  if (n < 1 || n > kMaxDim) throw ConfigError(fmt::format("[system] matrix must have 1..{} rows", kMaxDim));
  CMat m(n, n);
  for (int j = 0; j < n; ++j) {
    const auto row = parse_list(rows[j], "[system] matrix");
    if (static_cast<int>(row.size()) != n)
      throw ConfigError(fmt::format("[system] matrix row {} has {} entries, expected {}", j + 1, row.size(), n));
    for (int k = 0; k < n; ++k) m(j, k) = row[k];
  }
  return m;
}

SystemSpec read_system(const Reader& r, const std::filesystem::path& base_dir, int depth = 0) {
  if (auto file = r.get("system", "file")) {
    if (r.get("system", "energies") || r.get("system", "chain") || r.get("system", "matrix"))
      throw ConfigError("[system] file cannot be combined with inline energies or couplings");
    if (depth > 4) throw ConfigError("[system] file references nest too deeply");
    std::filesystem::path p(*file);
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw ConfigError(fmt::format("cannot read system file {}", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    const pt::ptree tree = parse_tree(ss.str());
    for (const auto& [section, body] : tree)
      if (section != "system") throw ConfigError(fmt::format("system file {} may only contain [system]", p.string()));
    return read_system(Reader(tree), p.parent_path(), depth + 1);
  }
  SystemSpec s;
  auto energies = r.get("system", "energies");
  if (!energies) throw ConfigError("[system] energies is required");
  s.energies = parse_list(*energies, "[system] energies");
  const int n = s.dim();
  if (n < 2 || n > kMaxDim) throw ConfigError(fmt::format("[system] needs 2..{} levels", kMaxDim));
  auto chain = r.get("system", "chain");
  auto matrix = r.get("system", "matrix");
  if (chain && matrix) throw ConfigError("[system] chain and matrix are mutually exclusive");
  if (matrix) {
    s.coupling = parse_matrix(*matrix);
    if (s.coupling.rows() != n) throw ConfigError("[system] matrix size does not match energies");
  } else {
    std::vector<double> links(n - 1, 1.0);
    if (chain) links = parse_list(*chain, "[system] chain");
    if (static_cast<int>(links.size()) != n - 1)
      throw ConfigError(fmt::format("[system] chain needs {} link strengths", n - 1));
    s.coupling = CMat::Zero(n, n);
    for (int j = 0; j + 1 < n; ++j) s.coupling(j, j + 1) = s.coupling(j + 1, j) = links[j];
  }
  if (hermitian_defect(s.coupling) > HermitianMatrix::kHermitianTol)
    throw ConfigError("[system] coupling matrix is not symmetric");
  return s;
}

Method read_method(const Reader& r, std::string_view key, Method fallback) {
  auto v = r.get("integrator", key);
  if (!v) return fallback;
  auto m = parse_method(*v);
  if (!m) throw ConfigError(fmt::format("[integrator] {}: unknown method '{}'", key, *v));
  return *m;
}

ScalarFn read_function(const std::string& text, std::string_view key) {
  try {
    return parse_function(text);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

void validate(ExperimentConfig& c) {
  auto need_system = [&] {
    if (c.system.dim() == 0) throw ConfigError(fmt::format("{} runs need a [system] section", kind_name(c.kind)));
  };
  for (double a : c.alphas) {
    if (!(a > 0.0)) throw ConfigError(fmt::format("[pulse] alpha {} must be positive", a));
    if (a <= 1.0 && !c.subcritical && c.kind != Kind::oscillatory_order)
      throw ConfigError(fmt::format("[pulse] alpha {} <= 1 requires subcritical = true", a));
  }
  for (double e : c.epsilons)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError(fmt::format("[pulse] epsilon {} must lie in (0, 1)", e));
  if (c.epsilons.empty() || c.alphas.empty()) throw ConfigError("[pulse] epsilon and alpha need at least one value");
  if (c.grid_points < 2) throw ConfigError("[output] grid needs at least 2 points");
  if (c.svg_width < 200 || c.svg_height < 150) throw ConfigError("[output] svg size is too small");
  if (!(c.integrator.rho > 0.0) || !(c.reference.rho > 0.0)) throw ConfigError("[integrator] rho must be positive");
  if (c.integrator.max_step < 0.0) throw ConfigError("[integrator] max_step must be nonnegative");
  if (!(c.integrator.rel_tol > 0.0)) throw ConfigError("[integrator] rel_tol must be positive");

  switch (c.kind) {
    case Kind::chirp:
    case Kind::stirap:
    case Kind::rate_sweep:
    case Kind::ensemble_sweep: {
      need_system();
      if (c.levels == 0) c.levels = c.system.dim();
      if (c.levels < 2 || c.levels > c.system.dim())
        throw ConfigError(fmt::format("[schedule] levels must lie in 2..{}", c.system.dim()));
      if (c.target_level == 0) c.target_level = c.levels;
      for (int l : {c.initial_level, c.target_level})
        if (l < 1 || l > c.system.dim()) throw ConfigError(fmt::format("[schedule] level {} out of range", l));
      if (c.frame == Frame::reference) throw ConfigError("[integrator] frame must be lab or rotating");
      if (c.schedule == ScheduleKind::stirap) {
        if (c.stirap.detunings.empty())
          for (int j = 1; j <= c.levels; ++j) c.stirap.detunings.push_back(j);
        if (static_cast<int>(c.stirap.detunings.size()) != c.levels)
          throw ConfigError(fmt::format("[schedule] detunings needs {} values", c.levels));
        if (!(0.0 < c.stirap.tau1 && c.stirap.tau1 < c.stirap.tau2 && c.stirap.tau2 < 1.0))
          throw ConfigError("[schedule] needs 0 < tau1 < tau2 < 1");
        if (!(c.stirap.margin > 1.0)) throw ConfigError("[schedule] margin must exceed 1");
      } else {
        c.chirp.amplitude = read_function(c.chirp.amplitude_text, "[schedule] amplitude");
        c.chirp.phase = read_function(c.chirp.phase_text, "[schedule] phase");
      }
      break;
    }
    case Kind::crossings:
      if (c.crossings.sizes.empty()) throw ConfigError("[crossings] sizes is empty");
      for (int m : c.crossings.sizes)
        if (m < 2 || m > kMaxDim) throw ConfigError(fmt::format("[crossings] size {} out of range", m));
      if (c.crossings.w_max < 0.0) throw ConfigError("[crossings] w_max must be nonnegative");
      if (c.crossings.plot_points < 2) throw ConfigError("[crossings] plot_points must be at least 2");
      break;
    case Kind::oscillatory_order:
      if (c.cases.empty()) throw ConfigError("oscillatory-order runs need at least one [case:NAME] section");
      if (c.epsilons.size() < 2) throw ConfigError("[pulse] epsilon needs at least two values");
      break;
  }

  if (c.kind == Kind::rate_sweep) {
    if (c.epsilons.size() < 4) throw ConfigError("rate sweeps need at least 4 epsilon values");
    const auto [lo, hi] = std::minmax_element(c.epsilons.begin(), c.epsilons.end());
    if (std::log10(*hi / *lo) < 0.45)
      throw ConfigError(fmt::format("rate sweep epsilons span {:.3f} decades; at least 0.45 required",
                                    std::log10(*hi / *lo)));
    if (!(c.gap_floor > 0.0)) throw ConfigError("[rate] gap_floor must be positive");
  }
  if (c.kind == Kind::ensemble_sweep) {
    const EnsembleSpec& e = c.ensemble;
    if (e.samples < 1) throw ConfigError("[ensemble] samples must be at least 1");
    if (!(e.delta_min > 0.0)) throw ConfigError("[ensemble] the delta range must exclude 0");
    if (e.samples == 1 ? e.delta_max != e.delta_min : !(e.delta_min < e.delta_max))
      throw ConfigError("[ensemble] needs delta_min < delta_max (equal for a single sample)");
  }
  if (c.kind == Kind::chirp || c.kind == Kind::stirap) {
    if (c.epsilons.size() != 1) throw ConfigError("chirp and stirap runs take a single epsilon");
  }
  if (c.kind == Kind::ensemble_sweep && (c.epsilons.size() != 1 || c.alphas.size() != 1))
    throw ConfigError("ensemble sweeps take a single epsilon and alpha");
}

}  // namespace

std::vector<double> parse_list(std::string_view text, std::string_view key) {
  std::vector<std::string> parts;
  std::string s(text);
  boost::algorithm::trim(s);
  if (s.empty()) return {};
  boost::algorithm::split(parts, s, boost::algorithm::is_any_of(","));
  std::vector<double> out;
  out.reserve(parts.size());
  for (const std::string& p : parts) out.push_back(parse_double(p, key));
  return out;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  const pt::ptree tree = parse_tree(text);
  const Reader r(tree);
  ExperimentConfig c;

  auto kind = r.get("experiment", "kind");
  if (!kind) throw ConfigError("[experiment] kind is required");
  auto k = parse_kind(*kind);
  if (!k) throw ConfigError(fmt::format("[experiment] unknown kind '{}'", *kind));
  c.kind = *k;
  if (auto v = r.get("experiment", "name")) c.name = *v;
  if (c.name.empty() || c.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError("[experiment] name must be a non-empty word without slashes or spaces");
  if (auto v = r.get("experiment", "seed")) {
    const long long s = parse_int(*v, "[experiment] seed");
    if (s < 0) throw ConfigError("[experiment] seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  r.read("experiment", "long", c.long_run);

  if (tree.get_child_optional(pt::ptree::path_type("system", '\0'))) c.system = read_system(r, base_dir);

  c.schedule = c.kind == Kind::stirap || c.kind == Kind::ensemble_sweep ? ScheduleKind::stirap : ScheduleKind::chirp;
  if (auto v = r.get("schedule", "type")) {
    if (*v == "chirp") c.schedule = ScheduleKind::chirp;
    else if (*v == "stirap") c.schedule = ScheduleKind::stirap;
    else throw ConfigError(fmt::format("[schedule] type: unknown schedule '{}'", *v));
    if ((c.kind == Kind::chirp && c.schedule != ScheduleKind::chirp) ||
        (c.kind == Kind::stirap && c.schedule != ScheduleKind::stirap))
      throw ConfigError("[schedule] type contradicts the experiment kind");
  }
  r.read("schedule", "levels", c.levels);
  r.read("schedule", "initial", c.initial_level);
  r.read("schedule", "target", c.target_level);
  if (auto v = r.get("schedule", "amplitude")) c.chirp.amplitude_text = *v;
  if (auto v = r.get("schedule", "phase")) c.chirp.phase_text = *v;
  r.read("schedule", "detunings", c.stirap.detunings);
  r.read("schedule", "tau1", c.stirap.tau1);
  r.read("schedule", "tau2", c.stirap.tau2);
  r.read("schedule", "margin", c.stirap.margin);

  r.read("pulse", "epsilon", c.epsilons);
  r.read("pulse", "alpha", c.alphas);
  r.read("pulse", "subcritical", c.subcritical);

  if (auto v = r.get("integrator", "frame")) {
    if (*v == "lab") c.frame = Frame::lab;
    else if (*v == "rotating") c.frame = Frame::rotating;
    else throw ConfigError(fmt::format("[integrator] frame: unknown frame '{}'", *v));
  } else if (c.kind == Kind::rate_sweep || c.kind == Kind::ensemble_sweep) {
    c.frame = Frame::rotating;
  }
  if (c.kind == Kind::rate_sweep || c.kind == Kind::ensemble_sweep) c.integrator.method = Method::magnus4;
  c.integrator.method = read_method(r, "method", c.integrator.method);
  r.read("integrator", "rho", c.integrator.rho);
  r.read("integrator", "max_step", c.integrator.max_step);
  r.read("integrator", "rel_tol", c.integrator.rel_tol);
  c.reference.method = read_method(r, "reference_method", c.reference.method);
  r.read("integrator", "reference_rho", c.reference.rho);

  r.read("output", "grid", c.grid_points);
  if (auto v = r.get("output", "dir")) c.out_dir = *v;
  r.read("output", "svg_width", c.svg_width);
  r.read("output", "svg_height", c.svg_height);

  r.read("ensemble", "delta_min", c.ensemble.delta_min);
  r.read("ensemble", "delta_max", c.ensemble.delta_max);
  r.read("ensemble", "samples", c.ensemble.samples);

  if (auto v = r.get("crossings", "sizes")) {
    c.crossings.sizes.clear();
    for (double x : parse_list(*v, "[crossings] sizes")) {
      if (x != std::floor(x)) throw ConfigError("[crossings] sizes must be integers");
      c.crossings.sizes.push_back(static_cast<int>(x));
    }
  }
  r.read("crossings", "w_max", c.crossings.w_max);
  r.read("crossings", "plot_points", c.crossings.plot_points);
  r.read("rate", "gap_floor", c.gap_floor);

  for (const auto& [section, body] : tree) {
    if (section.rfind("case:", 0) != 0) continue;
    OscillatoryCase oc;
    oc.name = section.substr(5);
    if (oc.name.empty()) throw ConfigError("[case:NAME] needs a name");
    auto a = r.get(section, "a");
    auto h = r.get(section, "h");
    auto beta = r.get(section, "beta");
    auto alpha = r.get(section, "alpha");
    if (!a || !h || !beta || !alpha) throw ConfigError(fmt::format("[{}] needs a, h, beta and alpha", section));
    oc.a_text = *a;
    oc.h_text = *h;
    oc.a = read_function(*a, fmt::format("[{}] a", section));
    oc.h = read_function(*h, fmt::format("[{}] h", section));
    oc.beta = parse_double(*beta, fmt::format("[{}] beta", section));
    oc.alpha = parse_double(*alpha, fmt::format("[{}] alpha", section));
    if (!(oc.alpha > 0.0)) throw ConfigError(fmt::format("[{}] alpha must be positive", section));
    if (oc.beta == 0.0) throw ConfigError(fmt::format("[{}] beta must be nonzero", section));
    c.cases.push_back(std::move(oc));
  }
  std::sort(c.cases.begin(), c.cases.end(), [](const auto& x, const auto& y) { return x.name < y.name; });

  r.read("check", "min_transfer", c.checks.min_transfer);
  r.read("check", "min_drop", c.checks.min_drop);
  r.read("check", "compare_chirp", c.checks.compare_chirp);
  r.read("check", "slope_tolerance", c.checks.slope_tolerance);
  if (auto v = r.get("check", "slope_mode")) {
    if (*v == "within") c.checks.two_sided_slope = true;
    else if (*v == "at-least") c.checks.two_sided_slope = false;
    else throw ConfigError(fmt::format("[check] slope_mode: expected within or at-least, got '{}'", *v));
  }
  r.read("check", "max_error_ratio", c.checks.max_error_ratio);
  r.read("check", "max_residual", c.checks.max_residual);
  r.read("check", "slope_margin", c.checks.slope_margin);
  r.read("check", "max_drift", c.checks.max_drift);

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

}  // namespace rwad::experiments
