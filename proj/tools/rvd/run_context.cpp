#include "run_context.hpp"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include "rvd/common.hpp"
#include "rvd/hash.hpp"
#include "rvd/text.hpp"

namespace rvd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunContext::RunContext(std::string command, const fs::path& out, bool out_is_dir)
    : command_(std::move(command)) {
  if (out_is_dir) {
    fs::create_directories(out);
    manifest_path_ = out / "run_manifest.json";
    log_path_ = out / "rvd.log";
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    manifest_path_ = fs::path(out.string() + ".run.json");
    log_path_ = fs::path(out.string() + ".log");
  }
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(log_path_.string(), true);
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_level(spdlog::level::warn);
  logger_ = std::make_shared<spdlog::logger>("rvd", spdlog::sinks_init_list{file, console});
  logger_->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
  logger_->set_level(spdlog::level::info);
  logger_->flush_on(spdlog::level::info);
  logger_->info("rvd {} {}", version(), command_);
}

RunContext::~RunContext() { logger_->flush(); }

void RunContext::config(const std::string& key, json value) { config_[key] = std::move(value); }

void RunContext::seed(const std::string& key, std::uint64_t value) { seeds_[key] = value; }

void RunContext::input(const fs::path& path) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec))
    inputs_[path.generic_string()] = to_hex(fnv1a64(read_file(path)));
  else
    inputs_[path.generic_string()] = "";
}

void RunContext::output(const fs::path& path) { outputs_.push_back(path.generic_string()); }

void RunContext::write_manifest() const {
  const auto config_hash = to_hex(fnv1a64(json{{"command", command_}, {"config", config_}}.dump()));
  json doc = {{"tool", "rvd"},
              {"version", version()},
              {"command", command_},
              {"config", config_},
              {"config_hash", config_hash},
              {"seeds", seeds_},
              {"inputs", inputs_},
              {"outputs", outputs_}};
  for (const auto& [k, v] : extra_.items()) doc[k] = v;
  write_file(manifest_path_, doc.dump(2) + "\n");
}

}  // namespace rvd::cli
