#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lanesim/errors.hpp"

namespace lanesim {

// Human-readable config document:
//   [section]
//   key = value        # trailing comments allowed
// Keys carry their unit as a suffix (_m, _s, _deg, _mps) where one applies.
class ConfigDoc {
 public:
  ConfigDoc() = default;

  static ConfigDoc parse_string(const std::string& text, const std::string& origin = "<string>") {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = strip_comment(line);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        doc.ensure_section(section);
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      doc.set(section, key, value);
    }
    return doc;
  }

  static ConfigDoc parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path.string());
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    ensure_section(section);
    auto& sec = find_section(section)->entries;
    for (auto& kv : sec) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    sec.emplace_back(key, value);
  }

  void set_double(const std::string& section, const std::string& key, double v) {
    set(section, key, format_double(v));
  }

  bool has(const std::string& section, const std::string& key) const {
    const Section* sec = find_section(section);
    if (!sec) return false;
    for (const auto& kv : sec->entries)
      if (kv.first == key) return true;
    return false;
  }

  bool has_section(const std::string& section) const { return find_section(section) != nullptr; }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const Section* sec = find_section(section);
    if (!sec) return std::nullopt;
    for (const auto& kv : sec->entries)
      if (kv.first == key) return kv.second;
    return std::nullopt;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto v = get(section, key);
    return v ? *v : fallback;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    return parse_double(*v, section + "." + key);
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    long long out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
      throw ConfigError("bad integer for " + section + "." + key + ": '" + *v + "'");
    return out;
  }

  uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size())
      throw ConfigError("bad unsigned integer for " + section + "." + key + ": '" + *v + "'");
    return out;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("bad boolean for " + section + "." + key + ": '" + *v + "'");
  }

  /// Section key/value pairs in file order (empty if the section is absent).
  std::vector<std::pair<std::string, std::string>> entries(const std::string& section) const {
    const Section* sec = find_section(section);
    if (!sec) return {};
    return sec->entries;
  }

  std::string serialize() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& sec : sections_) {
      if (!first) out << "\n";
      first = false;
      if (!sec.name.empty()) out << "[" << sec.name << "]\n";
      for (const auto& kv : sec.entries) out << kv.first << " = " << kv.second << "\n";
    }
    return out.str();
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path.string());
    out << serialize();
    if (!out) throw ConfigError("failed writing config file " + path.string());
  }

  /// Overlay: entries of `other` replace/extend ours.
  void merge_from(const ConfigDoc& other) {
    for (const auto& sec : other.sections_)
      for (const auto& kv : sec.entries) set(sec.name, kv.first, kv.second);
  }

  static double parse_double(const std::string& s, const std::string& what) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ConfigError("bad number for " + what + ": '" + s + "'");
    return out;
  }

  /// Shortest round-trip decimal form.
  static std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  }

 private:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  std::vector<Section> sections_;

  Section* find_section(const std::string& name) {
    for (auto& s : sections_)
      if (s.name == name) return &s;
    return nullptr;
  }
  const Section* find_section(const std::string& name) const {
    for (const auto& s : sections_)
      if (s.name == name) return &s;
    return nullptr;
  }
  void ensure_section(const std::string& name) {
    if (!find_section(name)) sections_.push_back({name, {}});
  }

  static std::string strip_comment(const std::string& s) {
    auto pos = s.find('#');
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  static std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
};

}  // namespace lanesim
