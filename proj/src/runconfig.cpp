#include "fracmorse/runconfig.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fracmorse {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("config file not readable: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw PreconditionError("config line " + std::to_string(lineno) +
                              ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw PreconditionError("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[key] = value;
  }
  return cfg;
}

std::string RunConfig::require_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw PreconditionError("missing config key: " + key);
  return it->second;
}

double RunConfig::require_double(const std::string& key) const {
  const std::string v = require_string(key);
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw PreconditionError("config key " + key + ": not a number: " + v);
  }
}

long RunConfig::require_int(const std::string& key) const {
  const std::string v = require_string(key);
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw PreconditionError("config key " + key + ": not an integer: " + v);
  }
}

std::string RunConfig::get_string(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

double RunConfig::get_double(const std::string& key, double dflt) const {
  return has(key) ? require_double(key) : dflt;
}

long RunConfig::get_int(const std::string& key, long dflt) const {
  return has(key) ? require_int(key) : dflt;
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return buf;
}

OutputWriter::OutputWriter(const std::string& dir) : dir_(dir) {
  std::filesystem::create_directories(dir_);
}

void OutputWriter::write(const std::string& name, const std::string& content) {
  std::ofstream out(std::filesystem::path(dir_) / name, std::ios::binary);
  if (!out) throw PreconditionError("cannot write output file: " + name);
  out << content;
  files_.emplace_back(name, fnv1a_hex(content));
}

void OutputWriter::finalize(const std::string& command, const RunConfig& cfg,
                            const std::string& header_json) {
  nlohmann::ordered_json m = nlohmann::ordered_json::parse(header_json);
  nlohmann::ordered_json root;
  root["command"] = command;
  for (auto& [k, v] : m.items()) root[k] = v;
  nlohmann::ordered_json jcfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.items()) jcfg[k] = v;
  root["config"] = jcfg;
  nlohmann::ordered_json jfiles = nlohmann::ordered_json::array();
  for (const auto& [name, sum] : files_) {
    jfiles.push_back({{"name", name}, {"checksum", sum}});
  }
  root["files"] = jfiles;
  std::ofstream out(std::filesystem::path(dir_) / "manifest.json", std::ios::binary);
  out << root.dump(2) << "\n";
}

std::string resolve_out_dir(const RunConfig& cfg, const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("FRACMORSE_OUT"); env && *env) return env;
  return cfg.get_string("output.dir", "out");
}

}  // namespace fracmorse
