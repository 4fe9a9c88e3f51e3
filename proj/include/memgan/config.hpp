#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memgan {

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored.
/// Keys may contain dots to namespace related fields ("cost.area_base").
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<input>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Adds every entry of `other`, overriding existing keys.
  void merge(const KeyValueConfig& other);

  const std::string& get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list, whitespace trimmed.
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Keys under `prefix` (e.g. "step.").
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::string& source() const { return source_; }

  void write(std::ostream& out) const;

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
};

}  // namespace memgan
