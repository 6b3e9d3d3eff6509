#include "sglab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sglab/error.hpp"

namespace sglab {

namespace {

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorCode::Config, "key '" + key + "': '" + value + "' is not " + want);
}

double parse_double(const std::string& key, std::string_view v) {
  // strtod accepts exponents and is locale-independent for the "C" locale used here.
  const std::string s(trim(v));
  char* end = nullptr;
  const double d = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(d)) bad(key, s, "a number");
  return d;
}

}  // namespace

RunConfig RunConfig::from_text(std::string_view text, const std::string& source) {
  RunConfig c;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::Config, source + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::Config, source + ":" + std::to_string(line_no) + ": empty key");
    c.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_positive(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const double d = parse_double(key, it->second);
  if (!(d > 0.0)) bad(key, it->second, "positive");
  return d;
}

int RunConfig::get_positive_int(const std::string& key, int fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& s = it->second;
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad(key, s, "an integer");
  if (v <= 0) bad(key, s, "positive");
  return v;
}

std::vector<double> RunConfig::get_positive_list(const std::string& key, std::vector<double> fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<double> out;
  std::string_view s = it->second;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    const double d = parse_double(key, item);
    if (!(d > 0.0)) bad(key, it->second, "a list of positive numbers");
    out.push_back(d);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  if (out.empty()) bad(key, it->second, "a non-empty list");
  return out;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const auto& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on" || v.empty()) return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad(key, v, "a boolean");
}

std::uint64_t RunConfig::get_seed(const std::string& key, std::uint64_t fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string& s = it->second;
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) bad(key, s, "an unsigned integer");
  return v;
}

std::pair<double, double> RunConfig::get_point(const std::string& key, std::pair<double, double> fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  const std::string_view s = it->second;
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) bad(key, it->second, "a point x,y");
  const double x = parse_double(key, s.substr(0, comma)), y = parse_double(key, s.substr(comma + 1));
  if (x < 0.0 || x >= 1.0 || y < 0.0 || y >= 1.0) bad(key, it->second, "a point in [0,1)^2");
  return {x, y};
}

void RunConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [k, v] : kv_)
    if (!known.count(k)) throw Error(ErrorCode::Config, "unknown key '" + k + "'");
}

}  // namespace sglab
