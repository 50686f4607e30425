#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dexhand::io {

/// Flat key-value text file: one `key = value` per line, '#' comments.
class KeyValueFile {
 public:
  static KeyValueFile load(const std::filesystem::path& path);
  static KeyValueFile parse(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;                  // throws if missing
  std::string get_or(const std::string& key, std::string def) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set_double(const std::string& key, double value);

  /// Serializes keys in insertion order; stable output for hashing.
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

/// FNV-1a 64-bit digest, hex encoded.
std::string fnv1a_hex(const std::string& data);

/// Splits one CSV line (no quoting; the formats used here never quote).
std::vector<std::string> split_csv_line(const std::string& line);

/// ISO-8601 UTC timestamp. Honors SOURCE_DATE_EPOCH for reproducible runs.
std::string timestamp_utc();

/// One manifest per CLI run: enough to replay the command.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> output_paths;
  std::string timestamp;

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace dexhand::io
