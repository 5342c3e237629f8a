#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "msgfem/errors.hpp"

namespace msgfem {

/// @brief Flat key=value configuration with typed access.
///
/// One `key = value` pair per line; `#` starts a comment; blank lines are
/// skipped.  Later assignments win, so command-line overrides are applied by
/// re-setting keys.  Reads are tracked: after a driver has pulled everything
/// it understands, `reject_unused` turns leftover keys (typos, stale names)
/// into a ConfigError naming the offending field.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!c.parse_line(line))
        throw ConfigError("config " + path + ":" + std::to_string(lineno) +
                          ": expected 'key = value', got: " + line);
    }
    return c;
  }

  /// Applies one `key=value` override (command-line form).
  void set_override(const std::string& assignment) {
    if (!parse_line(assignment) || assignment.find('=') == std::string::npos)
      throw ConfigError("override must look like key=value, got: " + assignment);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  int get_int(const std::string& key, int fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(it->second, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != it->second.size())
      throw ConfigError("config field '" + key + "' wants an integer, got: " + it->second);
    return v;
  }

  double get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(it->second, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != it->second.size())
      throw ConfigError("config field '" + key + "' wants a number, got: " + it->second);
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const std::string v = get_string(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config field '" + key + "' wants true/false, got: " + v);
  }

  /// Comma-separated integer list, e.g. "5,10,20,40".
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<int> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t pos = 0;
      int v = 0;
      try {
        v = std::stoi(item, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
      if (pos != item.size() || item.empty())
        throw ConfigError("config field '" + key + "' wants integers, got: " + it->second);
      out.push_back(v);
    }
    if (out.empty())
      throw ConfigError("config field '" + key + "' wants a nonempty list");
    return out;
  }

  /// Fails on any key that no getter has touched.
  void reject_unused() const {
    for (const auto& [k, v] : values_)
      if (used_.count(k) == 0) throw ConfigError("unknown config field: " + k);
  }

  /// Canonical one-line-per-key serialization (sorted; the map iterates in
  /// key order), the input of the provenance hash.  Keys listed in `exclude`
  /// are dropped, so hashes can identify the experiment rather than the
  /// execution environment (output directory, worker count).
  std::string canonical(const std::set<std::string>& exclude = {}) const {
    std::string s;
    for (const auto& [k, v] : values_) {
      if (exclude.count(k)) continue;
      s += k;
      s += '=';
      s += v;
      s += '\n';
    }
    return s;
  }

  /// FNV-1a 64-bit hash of the canonical form, as fixed-width hex.
  std::string hash(const std::set<std::string>& exclude = {}) const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical(exclude)) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  // Returns false on a malformed non-empty line.
  bool parse_line(const std::string& raw) {
    std::string line = raw;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) return true;
    const auto eq = line.find('=');
    if (eq == std::string::npos) return false;
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) return false;
    values_[key] = value;
    return true;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace msgfem
