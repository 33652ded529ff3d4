#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rvd/diff.hpp"
#include "rvd/function.hpp"
#include "rvd/snapshot.hpp"

namespace rvd {

struct CveEntry {
  std::string cve_id;
  std::string cwe_id;  // "CWE-119", or "UNKNOWN"
  std::string project;
  std::string snapshot_ref;  // snapshot directory name under the repos dir
  Language language = Language::C;

  bool operator==(const CveEntry&) const = default;
};

struct GroundTruth {
  std::string cve_id;
  FunctionIdSet vulnerable_functions;

  bool operator==(const GroundTruth&) const = default;
};

struct CorpusManifest {
  std::string benchmark_name;
  std::vector<CveEntry> entries;         // sorted by cve_id
  std::vector<GroundTruth> ground_truth;  // parallel to entries
  std::map<std::string, std::size_t> function_totals;  // language -> count

  const CveEntry& entry(std::string_view cve_id) const;
  const GroundTruth& truth(std::string_view cve_id) const;
  bool operator==(const CorpusManifest&) const = default;
};

enum class SkipReason { NoSnapshot, NoFixCommit, NonSourceOnly, NoLabel, ScanError, DuplicateId };

std::string_view to_string(SkipReason reason);

struct SkipRecord {
  std::string cve_id;  // may be empty when the record had no id
  std::string source_file;
  SkipReason reason = SkipReason::ScanError;
  std::string detail;
};

struct FileError {
  std::string file;
  std::string message;
};

struct IngestResult {
  std::vector<CveEntry> entries;  // sorted by cve_id
  std::vector<SkipRecord> skipped;
  std::vector<FileError> file_errors;
  std::map<std::string, std::string> fix_commit_urls;  // cve_id -> URL
};

/// Reads NVD JSON (1.1 feed "CVE_Items", 2.0 API "vulnerabilities", or a
/// bare record) from `records_dir`. A record is kept when it references a
/// fixing commit and its snapshot directory resolves under `repos_dir`.
/// Throws DataError when nothing resolves.
IngestResult ingest_nvd_records(const std::filesystem::path& records_dir,
                                const std::filesystem::path& repos_dir);

struct LabelResult {
  GroundTruth truth;
  std::vector<std::string> warnings;
};

/// Labels as vulnerable every function whose pre-image span holds a deleted
/// line, or strictly encloses a pure insertion.
LabelResult label_from_fixing_commit(const RepoSnapshot& snapshot,
                                     const UnifiedDiff& diff,
                                     const FunctionInventory& inventory,
                                     std::string cve_id = {});

/// Joins entries and truths by cve_id and totals functions per language over
/// the distinct snapshots. `inventories` is keyed by snapshot id.
CorpusManifest build_manifest(
    std::string benchmark_name, std::vector<CveEntry> entries,
    std::vector<GroundTruth> truths,
    const std::map<std::string, FunctionInventory>& inventories);

std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(std::string_view text);
void save_manifest(const std::filesystem::path& path,
                   const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& path);

}  // namespace rvd
