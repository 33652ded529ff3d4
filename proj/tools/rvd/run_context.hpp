#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/logger.h>

namespace rvd::cli {

// Per-invocation bookkeeping: a timestamped log file and a run manifest that
// records what went in and what came out. The manifest carries no clock
// values, so two identical runs write identical manifests.
class RunContext {
 public:
  RunContext(std::string command, const std::filesystem::path& out, bool out_is_dir);
  ~RunContext();

  spdlog::logger& log() { return *logger_; }

  void config(const std::string& key, nlohmann::json value);
  void seed(const std::string& key, std::uint64_t value);
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  nlohmann::json& extra() { return extra_; }

  void write_manifest() const;
  const std::filesystem::path& manifest_path() const { return manifest_path_; }
  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  std::string command_;
  std::filesystem::path manifest_path_;
  std::filesystem::path log_path_;
  std::shared_ptr<spdlog::logger> logger_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json seeds_ = nlohmann::json::object();
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace rvd::cli
