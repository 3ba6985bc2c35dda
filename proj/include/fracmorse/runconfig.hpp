#pragma once

#include <map>
#include <string>
#include <vector>

#include "fracmorse/errors.hpp"

namespace fracmorse {

/// Flat dotted-key configuration (one `key = value` per line, '#' comments).
class RunConfig {
 public:
  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  // throw PreconditionError naming the key when absent or malformed
  std::string require_string(const std::string& key) const;
  double require_double(const std::string& key) const;
  long require_int(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key, double dflt) const;
  long get_int(const std::string& key, long dflt) const;

  const std::map<std::string, std::string>& items() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest round-trip decimal form of a double, locale independent.
std::string format_double(double v);

/// Collects output files under one directory and emits a manifest that
/// references every file with its content checksum.
class OutputWriter {
 public:
  explicit OutputWriter(const std::string& dir);

  void write(const std::string& name, const std::string& content);
  const std::string& dir() const { return dir_; }

  // writes <dir>/manifest.json; `header` is pre-serialized JSON object text
  // whose fields are inlined before the file list
  void finalize(const std::string& command, const RunConfig& cfg,
                const std::string& header_json = "{}");

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;  // name, checksum
};

/// Output directory precedence: --out flag, FRACMORSE_OUT, output.dir, "./out".
std::string resolve_out_dir(const RunConfig& cfg, const std::string& cli_out);

}  // namespace fracmorse
