#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace pufbench {

/// Flat `key = value` configuration shared by PUF configs, learner configs and
/// experiment manifests. Lines starting with '#' and blank lines are ignored.
class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return entries_.contains(key); }
  void set(const std::string& key, std::string value) { entries_[key] = std::move(value); }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Entries whose keys start with `prefix`, with the prefix stripped.
  ConfigFile scoped(std::string_view prefix) const;
  /// Throws invalid-config naming the first key not in `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  /// Canonical text: sorted keys, one `key = value` per line.
  std::string to_string() const;

 private:
  std::map<std::string, std::string> entries_;
};

std::uint64_t parse_u64(std::string_view key, std::string_view text);
double parse_double(std::string_view key, std::string_view text);
/// Shortest text that parses back to the same double.
std::string format_double(double value);
/// FNV-1a over `text`, finalized with mix64.
std::uint64_t text_digest(std::string_view text);

}  // namespace pufbench
