#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace hcd::toml {

/// Minimal TOML subset used by the config files: [sections] holding
/// key = value lines with string, integer, float, and boolean values.
class Table {
  public:
    static Table parse_file(const std::string& path);
    static Table parse(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::int64_t get_int(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key) const;
    bool get_bool(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  private:
    const std::string& raw(const std::string& section, const std::string& key) const;
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace hcd::toml
