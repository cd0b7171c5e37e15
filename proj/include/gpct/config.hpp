#pragma once

#include "gpct/covariance.hpp"
#include "gpct/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>

namespace gpct {

/// Flat `key=value` configuration. Blank lines and `#` comments are
/// skipped; each key may appear once.
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueConfig parse(std::istream& in, const std::string& name) {
    KeyValueConfig cfg;
    cfg.name_ = name;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      const std::string t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError(name, no, "expected key=value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) throw ParseError(name, no, "empty key");
      if (value.empty()) throw ParseError(name, no, "empty value for '" + key + "'");
      if (cfg.entries_.count(key)) throw ParseError(name, no, "duplicate key '" + key + "'");
      cfg.entries_[key] = {value, no};
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return parse(in, path);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  const std::string& text(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ParseError(name_, 0, "missing key '" + key + "'");
    return it->second.value;
  }

  double number(const std::string& key) const {
    const auto& e = entries_.at(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size())
      throw ParseError(name_, e.line, "'" + key + "' is not a number: '" + e.value + "'");
    return v;
  }

  void allow_only(const std::set<std::string>& keys) const {
    for (const auto& [k, e] : entries_)
      if (!keys.count(k)) throw ParseError(name_, e.line, "unknown key '" + k + "'");
  }

  std::size_t line_of(const std::string& key) const { return entries_.at(key).line; }
  const std::string& name() const { return name_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
};

/// Prior block: family, sigma_f, length_scale (SE/Matern), nu (Matern).
inline CovarianceSpec prior_from_config(const KeyValueConfig& cfg) {
  cfg.allow_only({"family", "sigma_f", "length_scale", "nu"});
  CovarianceSpec spec;
  try {
    spec.family = parse_family(cfg.text("family"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(cfg.name(), cfg.line_of("family"), e.what());
  }
  if (cfg.has("sigma_f")) spec.sigma_f = cfg.number("sigma_f");
  if (cfg.has("length_scale")) spec.length_scale = cfg.number("length_scale");
  if (cfg.has("nu")) spec.nu = cfg.number("nu");
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(cfg.name(), 0, e.what());
  }
  return spec;
}

}  // namespace gpct
