#pragma once

// key = value run configuration with command-line overrides.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sglab {

class RunConfig {
 public:
  /// One `key = value` per line; `#` starts a comment. Throws Config.
  static RunConfig from_text(std::string_view text, const std::string& source = "<text>");
  static RunConfig from_file(const std::filesystem::path& path);

  /// Later calls win, so overrides are applied after the file.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const;
  /// Numeric getters throw Config on malformed or non-positive values.
  double get_positive(const std::string& key, double fallback) const;
  int get_positive_int(const std::string& key, int fallback) const;
  std::vector<double> get_positive_list(const std::string& key, std::vector<double> fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Any unsigned 64-bit integer; 0 allowed.
  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
  /// "x,y" pair in [0, 1)^2.
  std::pair<double, double> get_point(const std::string& key, std::pair<double, double> fallback) const;

  /// Throws Config naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace sglab
