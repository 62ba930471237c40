#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ndp/error.hpp"

namespace ndp {

// Minimal TOML subset used by run configs: [sections], key = value pairs,
// strings in double quotes, integers, reals, booleans and # comments.
class TomlDoc {
 public:
  static TomlDoc parse(const std::string& text);
  static TomlDoc parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  double get_real(const std::string& section, const std::string& key,
                  double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

 private:
  struct Entry {
    std::string raw;
    bool quoted = false;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

}  // namespace ndp
