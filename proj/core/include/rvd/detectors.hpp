#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/corpus.hpp"
#include "rvd/function.hpp"
#include "rvd/prompt.hpp"
#include "rvd/snapshot.hpp"

namespace rvd {

enum class DetectorKind { SastAdapter, LlmClient, Oracle, Null, AllMark, Random, Ensemble };

/// Spec-file spelling: "sast", "llm", "oracle", "null", "allmark", "random",
/// "ensemble".
std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view text);

struct DetectorSpec {
  std::string detector_id;
  DetectorKind kind = DetectorKind::Null;
  std::map<std::string, std::string> config;

  /// Throws ConfigError on unknown keys or a missing required key.
  void validate() const;
  std::string get(const std::string& key, std::string fallback = {}) const;
  static DetectorSpec from_json(std::string_view text);
  std::string to_json() const;
};

DetectorSpec load_detector_spec(const std::filesystem::path& path);

struct DetectorReport {
  std::string detector_id;
  std::string snapshot_id;
  DetectorKind kind = DetectorKind::Null;
  FunctionIdSet marked;
  std::size_t prediction_count = 0;
  std::size_t unparsed_responses = 0;
  std::size_t unmapped_findings = 0;       // SAST findings outside any function
  std::vector<std::string> failed_functions;  // LLM transport failures
  bool heterogeneous = false;              // ensemble mixing SAST and LLM
  std::int64_t wall_time_ms = 0;           // not serialized

  std::string to_json() const;
  static DetectorReport from_json(std::string_view text);
};

void save_report(const std::filesystem::path& path, const DetectorReport& report);
DetectorReport load_report(const std::filesystem::path& path);

/// Raised when an LLM run loses more than 10% of its functions to transport
/// errors; carries whatever was collected.
class DetectorRunAborted : public DetectorError {
 public:
  DetectorRunAborted(const std::string& what, DetectorReport partial)
      : DetectorError(what), partial_(std::move(partial)) {}
  const DetectorReport& partial() const noexcept { return partial_; }

 private:
  DetectorReport partial_;
};

// ---- SAST ----

struct Finding {
  std::string file;
  int line = 0;
  std::string rule_id;
  std::string message;
};

/// Normalized findings file: JSON array of {file, line, rule_id, message}.
/// Throws DataError naming the offending line of the document.
std::vector<Finding> parse_findings(std::string_view text);

/// Expands {snapshot_id}, {snapshot_root}, {findings} placeholders.
std::string expand_template(std::string_view tmpl, const RepoSnapshot& snapshot,
                            const std::string& findings_path);

DetectorReport run_sast_adapter(const DetectorSpec& spec,
                                const RepoSnapshot& snapshot,
                                const FunctionInventory& inventory);

/// Maps findings onto the inventory (the part of run_sast_adapter that does
/// not touch the filesystem).
DetectorReport map_findings(const DetectorSpec& spec,
                            const RepoSnapshot& snapshot,
                            const FunctionInventory& inventory,
                            const std::vector<Finding>& findings);

// ---- LLM ----

struct ClassifyOutcome {
  Verdict verdict = Verdict::Unparseable;
  std::string raw;
};

/// Request body for POST /classify.
std::string classify_request_json(const FunctionRecord& function,
                                  const PromptTemplate& tmpl);

/// Interprets a /classify response body. A null `vulnerable` is
/// Unparseable; a missing one falls back to parse_verdict(raw).
ClassifyOutcome parse_classify_response(std::string_view body);

DetectorReport run_llm_detector(const DetectorSpec& spec,
                                const FunctionInventory& inventory,
                                const PromptTemplate& tmpl);

// ---- Reference detectors ----

DetectorReport run_reference_detector(const DetectorSpec& spec,
                                      const FunctionInventory& inventory,
                                      const GroundTruth* truth);

}  // namespace rvd
