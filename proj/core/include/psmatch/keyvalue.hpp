#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace psmatch {

/// Minimal `key = value` document: one pair per line, `#` starts a comment
/// line, blank lines ignored, repeated keys preserved in order. Used for
/// study configurations, evaluation configurations, and scenario specs.
class KeyValueDoc {
 public:
  static KeyValueDoc parse_string(std::string_view text);
  static KeyValueDoc parse_file(const std::string& path);

  bool has(std::string_view key) const;
  /// First value for `key`, if present.
  std::optional<std::string> get(std::string_view key) const;
  /// Every value for `key`, in document order.
  std::vector<std::string> get_all(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  // Typed accessors; throw ConfigError naming the key on absence/bad value.
  std::string require(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  int get_int(std::string_view key, int fallback) const;
  std::uint64_t get_uint64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Splits on `sep` and trims surrounding whitespace from each token; empty
/// tokens are dropped.
std::vector<std::string> split_list(std::string_view text, char sep = ',');

std::string_view trim(std::string_view s);

}  // namespace psmatch
