#include "svilab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "svilab/error.hpp"

namespace svi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

std::optional<double> parse_number(const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || first == last) return std::nullopt;
  return v;
}

std::optional<std::string> parse_string(const std::string& tok) {
  if (tok.size() < 2 || tok.front() != '"' || tok.back() != '"') return std::nullopt;
  const std::string inner = tok.substr(1, tok.size() - 2);
  if (inner.find('"') != std::string::npos) return std::nullopt;
  return inner;
}

std::vector<std::string> split_list(const std::string& body) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

ConfigValue parse_value(const std::string& key, const std::string& raw) {
  if (raw.empty()) throw ConfigError(key, "missing value");
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '"') {
    if (auto s = parse_string(raw)) return *s;
    throw ConfigError(key, "malformed string " + raw);
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError(key, "unterminated list");
    const auto items = split_list(raw.substr(1, raw.size() - 2));
    if (items.empty()) return std::vector<double>{};
    if (items.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& it : items) {
        auto s = parse_string(it);
        if (!s) throw ConfigError(key, "malformed list element " + it);
        out.push_back(*s);
      }
      return out;
    }
    std::vector<double> out;
    for (const auto& it : items) {
      auto v = parse_number(it);
      if (!v) throw ConfigError(key, "malformed list element '" + it + "'");
      out.push_back(*v);
    }
    return out;
  }
  if (auto v = parse_number(raw)) return *v;
  throw ConfigError(key, "cannot parse value '" + raw + "'");
}

double as_number(const std::string& key, const ConfigValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ConfigError(key, "expected a number");
}

long as_integer(const std::string& key, const ConfigValue& v, double lo, double hi) {
  const double d = as_number(key, v);
  if (d != std::floor(d) || d < lo || d > hi) throw ConfigError(key, "expected an integer");
  return static_cast<long>(d);
}

std::string as_string(const std::string& key, const ConfigValue& v) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw ConfigError(key, "expected a quoted string");
}

std::vector<double> as_numbers(const std::string& key, const ConfigValue& v) {
  if (const auto* l = std::get_if<std::vector<double>>(&v)) return *l;
  throw ConfigError(key, "expected a list of numbers");
}

std::vector<std::string> as_strings(const std::string& key, const ConfigValue& v) {
  if (const auto* l = std::get_if<std::vector<std::string>>(&v)) return *l;
  if (const auto* l = std::get_if<std::vector<double>>(&v); l && l->empty()) return {};
  throw ConfigError(key, "expected a list of strings");
}

constexpr double kMaxCount = 1e12;
constexpr double kMaxSeed = 9007199254740992.0;  // 2^53

using Setter = std::function<void(ExperimentConfig&, const std::string&, const ConfigValue&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"instance", [](auto& c, auto& k, auto& v) { c.instance = as_string(k, v); }},
      {"schedule.c", [](auto& c, auto& k, auto& v) { c.schedule_c = as_number(k, v); }},
      {"schedule.gamma", [](auto& c, auto& k, auto& v) { c.schedule_gamma = as_number(k, v); }},
      {"K", [](auto& c, auto& k, auto& v) { c.K = as_integer(k, v, -kMaxCount, kMaxCount); }},
      {"R", [](auto& c, auto& k, auto& v) { c.R = static_cast<int>(as_integer(k, v, -1e9, 1e9)); }},
      {"seed", [](auto& c, auto& k, auto& v) {
         c.seed = static_cast<std::uint64_t>(as_integer(k, v, 0, kMaxSeed));
       }},
      {"burn_in", [](auto& c, auto& k, auto& v) { c.burn_in = as_integer(k, v, -kMaxCount, kMaxCount); }},
      {"diagnostics", [](auto& c, auto& k, auto& v) { c.diagnostics = as_strings(k, v); }},
      {"output_dir", [](auto& c, auto& k, auto& v) { c.output_dir = as_string(k, v); }},
      {"tol.active", [](auto& c, auto& k, auto& v) { c.tol.active = as_number(k, v); }},
      {"tol.sc_warn", [](auto& c, auto& k, auto& v) { c.tol.sc_warn = as_number(k, v); }},
      {"tol.sosc_warn", [](auto& c, auto& k, auto& v) { c.tol.sosc_warn = as_number(k, v); }},
      {"tol.mc_samples", [](auto& c, auto& k, auto& v) { c.mc_samples = as_integer(k, v, -kMaxCount, kMaxCount); }},
      {"saa.k", [](auto& c, auto& k, auto& v) { c.saa_k = as_integer(k, v, -kMaxCount, kMaxCount); }},
      {"saa.R", [](auto& c, auto& k, auto& v) { c.saa_R = static_cast<int>(as_integer(k, v, -1e9, 1e9)); }},
      {"saa.tol", [](auto& c, auto& k, auto& v) { c.saa_tol = as_number(k, v); }},
      {"decay.k0", [](auto& c, auto& k, auto& v) { c.decay_k0 = as_integer(k, v, -kMaxCount, kMaxCount); }},
      {"decay.delta", [](auto& c, auto& k, auto& v) { c.decay_delta = as_number(k, v); }},
      {"decay.R", [](auto& c, auto& k, auto& v) { c.decay_R = static_cast<int>(as_integer(k, v, -1e9, 1e9)); }},
      {"regularity.N", [](auto& c, auto& k, auto& v) {
         c.regularity_N = static_cast<int>(as_integer(k, v, -1e9, 1e9));
       }},
      {"regularity.delta", [](auto& c, auto& k, auto& v) { c.regularity_delta = as_number(k, v); }},
      {"regularity.min_distance", [](auto& c, auto& k, auto& v) { c.regularity_min_distance = as_number(k, v); }},
      {"regularity.alpha", [](auto& c, auto& k, auto& v) { c.regularity_alpha = as_number(k, v); }},
      {"quadratic.mu", [](auto& c, auto& k, auto& v) { c.quadratic_mu = as_numbers(k, v); }},
      {"box_linear.c", [](auto& c, auto& k, auto& v) { c.box_c = as_numbers(k, v); }},
      {"nlp.dim", [](auto& c, auto& k, auto& v) { c.nlp.dim = static_cast<int>(as_integer(k, v, -1e9, 1e9)); }},
      {"nlp.linear", [](auto& c, auto& k, auto& v) { c.nlp.linear = as_numbers(k, v); }},
      {"nlp.quadratic", [](auto& c, auto& k, auto& v) { c.nlp.quadratic = as_numbers(k, v); }},
      {"nlp.noise_scale", [](auto& c, auto& k, auto& v) { c.nlp.noise_scale = as_number(k, v); }},
      {"nlp.solution", [](auto& c, auto& k, auto& v) { c.nlp.solution = as_numbers(k, v); }},
      {"nlp.chart_radius", [](auto& c, auto& k, auto& v) { c.nlp.chart_radius = as_number(k, v); }},
  };
  return table;
}

// nlp.constraint.<n>.<field>, n >= 1.
bool set_constraint_key(ExperimentConfig& c, const std::string& key, const ConfigValue& v) {
  static const std::string prefix = "nlp.constraint.";
  if (key.rfind(prefix, 0) != 0) return false;
  const std::string rest = key.substr(prefix.size());
  const auto dot = rest.find('.');
  if (dot == std::string::npos) return false;
  int idx = 0;
  const auto res = std::from_chars(rest.data(), rest.data() + dot, idx);
  if (res.ec != std::errc() || res.ptr != rest.data() + dot || idx < 1 || idx > 10000) return false;
  const std::string field = rest.substr(dot + 1);
  if (static_cast<int>(c.nlp.constraints.size()) < idx) c.nlp.constraints.resize(static_cast<std::size_t>(idx));
  InlineConstraint& ic = c.nlp.constraints[static_cast<std::size_t>(idx - 1)];
  if (field == "kind") {
    const std::string kind = as_string(key, v);
    if (kind == "ball") ic.shape = ConstraintShape::kBall;
    else if (kind == "box") ic.shape = ConstraintShape::kBox;
    else if (kind == "halfspace") ic.shape = ConstraintShape::kHalfspace;
    else throw ConfigError(key, "unknown constraint kind '" + kind + "'");
  } else if (field == "center") {
    ic.center = as_numbers(key, v);
  } else if (field == "radius") {
    ic.radius = as_number(key, v);
  } else if (field == "lo") {
    ic.lo = as_numbers(key, v);
  } else if (field == "hi") {
    ic.hi = as_numbers(key, v);
  } else if (field == "normal") {
    ic.normal = as_numbers(key, v);
  } else if (field == "offset") {
    ic.offset = as_number(key, v);
  } else {
    return false;
  }
  return true;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s + "]";
}

std::string fmt_strings(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", \"" : "\"") + v[i] + "\"";
  return s + "]";
}

}  // namespace

ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[' && s.find('=') == std::string::npos) {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno), "malformed section");
      section = trim(s.substr(1, s.size() - 2));
      if (!section.empty() && !valid_key(section))
        throw ConfigError(section, "invalid section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected key = value");
    const std::string k = trim(s.substr(0, eq));
    if (!valid_key(k)) throw ConfigError(k, "invalid key on line " + std::to_string(lineno));
    const std::string full = section.empty() ? k : section + "." + k;
    if (table.count(full)) throw ConfigError(full, "duplicate key");
    table.emplace(full, parse_value(full, trim(s.substr(eq + 1))));
  }
  return table;
}

const std::vector<std::string>& known_diagnostics() {
  static const std::vector<std::string> names{"kkt", "clt", "saa", "decay", "shadow", "regularity"};
  return names;
}

ExperimentConfig config_from_table(const ConfigTable& table) {
  ExperimentConfig c;
  for (const auto& [key, value] : table) {
    const auto it = setters().find(key);
    if (it != setters().end()) {
      it->second(c, key, value);
      continue;
    }
    if (!set_constraint_key(c, key, value)) throw ConfigError(key, "unknown key");
  }
  c.validate();
  return c;
}

ExperimentConfig config_from_text(const std::string& text) {
  return config_from_table(parse_config_text(text));
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

void ExperimentConfig::validate() const {
  static const std::set<std::string> instances{"two_ball", "quadratic", "box_linear", "inline"};
  if (!instances.count(instance)) throw ConfigError("instance", "unknown instance '" + instance + "'");
  if (!(schedule_c > 0.0)) throw ConfigError("schedule.c", "must be positive");
  if (!(schedule_gamma > 0.5 && schedule_gamma <= 1.0))
    throw ConfigError("gamma", "schedule.gamma must lie in (0.5, 1], got " + fmt_double(schedule_gamma));
  if (K < 10) throw ConfigError("K", "must be at least 10");
  if (R < 1) throw ConfigError("R", "must be at least 1");
  if (burn_in < 1 || burn_in > K) throw ConfigError("burn_in", "must lie in [1, K]");
  for (const auto& d : diagnostics)
    if (std::find(known_diagnostics().begin(), known_diagnostics().end(), d) ==
        known_diagnostics().end())
      throw ConfigError("diagnostics", "unknown diagnostic '" + d + "'");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (!(tol.active >= 0.0)) throw ConfigError("tol.active", "must be nonnegative");
  if (!(tol.sc_warn >= 0.0)) throw ConfigError("tol.sc_warn", "must be nonnegative");
  if (!(tol.sosc_warn >= 0.0)) throw ConfigError("tol.sosc_warn", "must be nonnegative");
  if (mc_samples < 2) throw ConfigError("tol.mc_samples", "must be at least 2");
  if (saa_k < 1) throw ConfigError("saa.k", "must be at least 1");
  if (saa_R < 2) throw ConfigError("saa.R", "must be at least 2");
  if (!(saa_tol > 0.0)) throw ConfigError("saa.tol", "must be positive");
  const bool studies = std::find(diagnostics.begin(), diagnostics.end(), "decay") != diagnostics.end() ||
                       std::find(diagnostics.begin(), diagnostics.end(), "shadow") != diagnostics.end();
  if (decay_k0 < 1 || (studies && decay_k0 >= K))
    throw ConfigError("decay.k0", "must lie in [1, K) when decay or shadow is requested");
  if (!(decay_delta >= 0.0)) throw ConfigError("decay.delta", "must be nonnegative");
  if (decay_R < 1) throw ConfigError("decay.R", "must be at least 1");
  if (regularity_N < 100) throw ConfigError("regularity.N", "must be at least 100");
  if (!(regularity_min_distance > 0.0))
    throw ConfigError("regularity.min_distance", "must be positive");
  if (!(regularity_delta > regularity_min_distance))
    throw ConfigError("regularity.delta", "must exceed regularity.min_distance");
  if (!(regularity_alpha > 0.0)) throw ConfigError("regularity.alpha", "must be positive");
  if (quadratic_mu.empty()) throw ConfigError("quadratic.mu", "must not be empty");
  if (box_c.empty()) throw ConfigError("box_linear.c", "must not be empty");

  if (instance != "inline") return;
  const auto d = static_cast<std::size_t>(std::max(nlp.dim, 0));
  if (nlp.dim < 1) throw ConfigError("nlp.dim", "must be at least 1");
  if (nlp.linear.size() != d) throw ConfigError("nlp.linear", "needs nlp.dim entries");
  if (!nlp.quadratic.empty() && nlp.quadratic.size() != d)
    throw ConfigError("nlp.quadratic", "needs nlp.dim entries");
  if (!(nlp.noise_scale >= 0.0)) throw ConfigError("nlp.noise_scale", "must be nonnegative");
  if (nlp.solution.size() != d) throw ConfigError("nlp.solution", "needs nlp.dim entries");
  if (!(nlp.chart_radius > 0.0)) throw ConfigError("nlp.chart_radius", "must be positive");
  for (std::size_t i = 0; i < nlp.constraints.size(); ++i) {
    const auto& ic = nlp.constraints[i];
    const std::string k = "nlp.constraint." + std::to_string(i + 1);
    switch (ic.shape) {
      case ConstraintShape::kBall:
        if (ic.center.size() != d) throw ConfigError(k + ".center", "needs nlp.dim entries");
        if (!(ic.radius > 0.0)) throw ConfigError(k + ".radius", "must be positive");
        break;
      case ConstraintShape::kBox:
        if (ic.lo.size() != d) throw ConfigError(k + ".lo", "needs nlp.dim entries");
        if (ic.hi.size() != d) throw ConfigError(k + ".hi", "needs nlp.dim entries");
        for (std::size_t j = 0; j < d; ++j)
          if (!(ic.lo[j] <= ic.hi[j])) throw ConfigError(k + ".lo", "must not exceed hi");
        break;
      case ConstraintShape::kHalfspace:
        if (ic.normal.size() != d) throw ConfigError(k + ".normal", "needs nlp.dim entries");
        if (std::all_of(ic.normal.begin(), ic.normal.end(), [](double v) { return v == 0.0; }))
          throw ConfigError(k + ".normal", "must be nonzero");
        break;
    }
  }
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["instance"] = "\"" + instance + "\"";
  kv["schedule.c"] = fmt_double(schedule_c);
  kv["schedule.gamma"] = fmt_double(schedule_gamma);
  kv["K"] = std::to_string(K);
  kv["R"] = std::to_string(R);
  kv["seed"] = std::to_string(seed);
  kv["burn_in"] = std::to_string(burn_in);
  kv["diagnostics"] = fmt_strings(diagnostics);
  kv["tol.active"] = fmt_double(tol.active);
  kv["tol.sc_warn"] = fmt_double(tol.sc_warn);
  kv["tol.sosc_warn"] = fmt_double(tol.sosc_warn);
  kv["tol.mc_samples"] = std::to_string(mc_samples);
  kv["saa.k"] = std::to_string(saa_k);
  kv["saa.R"] = std::to_string(saa_R);
  kv["saa.tol"] = fmt_double(saa_tol);
  kv["decay.k0"] = std::to_string(decay_k0);
  kv["decay.delta"] = fmt_double(decay_delta);
  kv["decay.R"] = std::to_string(decay_R);
  kv["regularity.N"] = std::to_string(regularity_N);
  kv["regularity.delta"] = fmt_double(regularity_delta);
  kv["regularity.min_distance"] = fmt_double(regularity_min_distance);
  kv["regularity.alpha"] = fmt_double(regularity_alpha);
  if (instance == "quadratic") kv["quadratic.mu"] = fmt_list(quadratic_mu);
  if (instance == "box_linear") kv["box_linear.c"] = fmt_list(box_c);
  if (instance == "inline") {
    kv["nlp.dim"] = std::to_string(nlp.dim);
    kv["nlp.linear"] = fmt_list(nlp.linear);
    kv["nlp.quadratic"] = fmt_list(nlp.quadratic);
    kv["nlp.noise_scale"] = fmt_double(nlp.noise_scale);
    kv["nlp.solution"] = fmt_list(nlp.solution);
    kv["nlp.chart_radius"] = fmt_double(nlp.chart_radius);
    for (std::size_t i = 0; i < nlp.constraints.size(); ++i) {
      const auto& ic = nlp.constraints[i];
      const std::string k = "nlp.constraint." + std::to_string(i + 1) + ".";
      switch (ic.shape) {
        case ConstraintShape::kBall:
          kv[k + "kind"] = "\"ball\"";
          kv[k + "center"] = fmt_list(ic.center);
          kv[k + "radius"] = fmt_double(ic.radius);
          break;
        case ConstraintShape::kBox:
          kv[k + "kind"] = "\"box\"";
          kv[k + "lo"] = fmt_list(ic.lo);
          kv[k + "hi"] = fmt_list(ic.hi);
          break;
        case ConstraintShape::kHalfspace:
          kv[k + "kind"] = "\"halfspace\"";
          kv[k + "normal"] = fmt_list(ic.normal);
          kv[k + "offset"] = fmt_double(ic.offset);
          break;
      }
    }
  }
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace svi
