#pragma once

#include <cstdlib>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tgfem/errors.hpp"

namespace tgfem {

/// Flat `key = value` text with `[section]` headers and `#` comments.
/// Keys are addressed as "section.key"; keys before any header live in "".
class KeyValueConfig {
public:
  [[nodiscard]] static KeyValueConfig parse(std::istream &is) {
    KeyValueConfig cfg;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      line = trim(line);
      if (line.empty()) {
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw ParseError(line_no, "malformed section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ParseError(line_no, "expected 'key = value'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        throw ParseError(line_no, "empty key");
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (!cfg.values_.emplace(full, value).second) {
        throw ParseError(line_no, "duplicate key '" + full + "'");
      }
    }
    return cfg;
  }

  [[nodiscard]] static KeyValueConfig parse(const std::string &text) {
    std::istringstream is(text);
    return parse(is);
  }

  [[nodiscard]] bool has(const std::string &key) const { return values_.count(key) != 0; }

  [[nodiscard]] std::string get_string(const std::string &key, const std::string &fallback) const {
    used_[key] = true;
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  [[nodiscard]] double get_double(const std::string &key, double fallback) const {
    if (!has(key)) {
      used_[key] = true;
      return fallback;
    }
    return to_double(key, get_string(key, ""));
  }

  [[nodiscard]] int get_int(const std::string &key, int fallback) const {
    const double v = get_double(key, fallback);
    if (v != static_cast<int>(v)) {
      throw ConfigError("key '" + key + "' must be an integer");
    }
    return static_cast<int>(v);
  }

  [[nodiscard]] std::vector<double> get_doubles(const std::string &key, std::vector<double> fallback) const {
    if (!has(key)) {
      used_[key] = true;
      return fallback;
    }
    std::istringstream is(get_string(key, ""));
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
      out.push_back(to_double(key, tok));
    }
    return out;
  }

  /// All keys of one section, without the section prefix.
  [[nodiscard]] std::map<std::string, std::string> section(const std::string &name) const {
    std::map<std::string, std::string> out;
    const std::string prefix = name + ".";
    for (const auto &[k, v] : values_) {
      if (k.rfind(prefix, 0) == 0) {
        out.emplace(k.substr(prefix.size()), v);
      }
    }
    return out;
  }

  void mark_used(const std::string &key) const { used_[key] = true; }

  /// Keys present in the file but never read.
  [[nodiscard]] std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : values_) {
      if (!used_.count(k)) {
        out.push_back(k);
      }
    }
    return out;
  }

  void set(const std::string &key, const std::string &value) { values_[key] = value; }

private:
  static std::string trim(const std::string &s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  }

  static double to_double(const std::string &key, const std::string &text) {
    char *end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end == nullptr || *end != '\0') {
      throw ConfigError("key '" + key + "' expects a number, got '" + text + "'");
    }
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> used_;
};

} // namespace tgfem
