#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace tofwave {

using Json = nlohmann::json;

const char* tool_version();

std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

// Shortest round-trip decimal form; "nan"/"inf" spelled out.
std::string format_number(double v);

// Writes to `path.tmp` and renames over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

// Collects everything a subcommand writes and produces manifest.json at the end.
class RunContext {
 public:
  RunContext(std::filesystem::path out_dir, std::string subcommand, std::string config_text,
             std::uint64_t seed, bool quiet);

  const std::filesystem::path& out_dir() const { return out_dir_; }
  bool quiet() const { return quiet_; }
  std::uint64_t seed() const { return seed_; }

  std::filesystem::path file(const std::string& name);  // registers and returns the full path
  CsvWriter csv(const std::string& name, const std::vector<std::string>& header);
  void json(const std::string& name, const Json& value);

  void add_input_hash(const std::string& name, const std::string& bytes);
  void timing(const std::string& name, double seconds);
  void check(const std::string& name, bool pass);
  bool all_passed() const;
  void set_note(const std::string& key, const Json& value);

  void write_manifest(int exit_code);

 private:
  std::filesystem::path out_dir_;
  std::string subcommand_, config_text_;
  std::uint64_t seed_;
  bool quiet_;
  std::vector<std::string> files_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, double> timings_;
  std::vector<std::pair<std::string, bool>> checks_;
  Json notes_ = Json::object();
};

}  // namespace tofwave
