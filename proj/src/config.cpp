#include "speclab/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "speclab/error.hpp"

namespace speclab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string canonical_key(const std::string& k) {
  if (k == "\xCE\xB2") return "beta";  // β
  if (k == "\xCF\x86") return "phi";   // φ
  return k;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys{
      "command", "preset", "k", "J", "R", "r", "n", "t_max",
      "f", "V", "phi", "K", "u", "rim", "Fx", "Fy", "frame",
      "beta", "c", "bound", "formula", "chain",
      "n_t", "n_theta", "t0", "quad_order", "segments", "n_angle", "hole", "ell_max",
      "tol", "seed", "out", "sweep", "values"};
  return keys;
}

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string raw;
  std::size_t line_no = 0;
  const auto& keys = known_keys();
  while (std::getline(in, raw)) {
    ++line_no;
    // strip a comment outside quotes
    std::string line;
    bool quoted = false;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      line += ch;
    }
    if (quoted) throw ConfigError("unterminated quote", line_no);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') throw ConfigError("sections are not supported", line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line_no);
    const std::string key = canonical_key(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line_no);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown key '" + key + "'", line_no);
    }
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (value.find('"') != std::string::npos) {
      throw ConfigError("stray quote in value of '" + key + "'", line_no);
    }
    if (cfg.entries_.count(key)) {
      throw ConfigError("duplicate key '" + key + "' (first on line " +
                            std::to_string(cfg.entries_[key].line) + ")",
                        line_no);
    }
    cfg.entries_[key] = Entry{value, line_no};
  }
  if (!cfg.has("command")) throw ConfigError("missing key 'command'");
  return cfg;
}

RunConfig RunConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse(in);
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::size_t RunConfig::line(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second.text;
}

std::string RunConfig::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double RunConfig::number(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(text(key), v)) {
    throw ConfigError("'" + key + "' must be a number, got '" + text(key) + "'", line(key));
  }
  return v;
}

double RunConfig::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::size_t RunConfig::count_or(const std::string& key, std::size_t fallback,
                                std::size_t min_value) const {
  if (!has(key)) return fallback;
  const double v = number(key);
  if (v != std::floor(v) || v < static_cast<double>(min_value) || v > 1e6) {
    throw ConfigError("'" + key + "' must be an integer >= " + std::to_string(min_value),
                      line(key));
  }
  return static_cast<std::size_t>(v);
}

bool RunConfig::flag_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = text(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' must be true or false", line(key));
}

std::vector<double> RunConfig::list(const std::string& key) const {
  std::vector<double> out;
  std::string s = text(key);
  if (s.size() >= 2 && (s.front() == '[' || s.front() == '{')) s = s.substr(1, s.size() - 2);
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  for (std::string tok; in >> tok;) {
    double v = 0.0;
    if (!parse_double(tok, v)) {
      throw ConfigError("'" + key + "' entry '" + tok + "' is not a number", line(key));
    }
    out.push_back(v);
  }
  return out;
}

void RunConfig::set(const std::string& key, const std::string& text) {
  entries_[canonical_key(key)] = Entry{text, line(canonical_key(key))};
}

void RunConfig::erase(const std::string& key) { entries_.erase(key); }

}  // namespace speclab
