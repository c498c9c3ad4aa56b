#include "tofwave/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "tofwave/errors.hpp"

#ifndef TOFWAVE_VERSION
#define TOFWAVE_VERSION "0.0.0"
#endif

namespace tofwave {

const char* tool_version() { return TOFWAVE_VERSION; }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  row(header);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw Error(ErrorCode::DimensionMismatch, "CSV row width in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

RunContext::RunContext(std::filesystem::path out_dir, std::string subcommand, std::string config_text,
                       std::uint64_t seed, bool quiet)
    : out_dir_(std::move(out_dir)),
      subcommand_(std::move(subcommand)),
      config_text_(std::move(config_text)),
      seed_(seed),
      quiet_(quiet) {
  std::filesystem::create_directories(out_dir_);
  add_input_hash("config", config_text_);
}

std::filesystem::path RunContext::file(const std::string& name) {
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  return out_dir_ / name;
}

CsvWriter RunContext::csv(const std::string& name, const std::vector<std::string>& header) {
  return CsvWriter(file(name), header);
}

void RunContext::json(const std::string& name, const Json& value) {
  write_text_atomic(file(name), value.dump(2) + "\n");
}

void RunContext::add_input_hash(const std::string& name, const std::string& bytes) {
  inputs_[name] = hash_hex(bytes);
}

void RunContext::timing(const std::string& name, double seconds) { timings_[name] = seconds; }

void RunContext::check(const std::string& name, bool pass) { checks_.emplace_back(name, pass); }

bool RunContext::all_passed() const {
  for (const auto& c : checks_)
    if (!c.second) return false;
  return true;
}

void RunContext::set_note(const std::string& key, const Json& value) { notes_[key] = value; }

void RunContext::write_manifest(int exit_code) {
  Json m;
  m["schema"] = 1;
  m["tool"] = "tofwave";
  m["version"] = tool_version();
  m["subcommand"] = subcommand_;
  m["seed"] = seed_;
  m["config"] = config_text_;
  m["inputs"] = inputs_;
  m["outputs"] = files_;
  m["timings_s"] = timings_;
  Json checks = Json::array();
  for (const auto& [name, pass] : checks_) checks.push_back({{"name", name}, {"pass", pass}});
  m["checks"] = checks;
  m["pass"] = all_passed();
  m["exit_code"] = exit_code;
  if (!notes_.empty()) m["notes"] = notes_;
  write_text_atomic(out_dir_ / "manifest.json", m.dump(2) + "\n");
}

}  // namespace tofwave
