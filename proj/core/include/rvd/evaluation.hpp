#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rvd/corpus.hpp"
#include "rvd/detectors.hpp"

namespace rvd {

enum class Scenario { S1, S2 };

/// S1: at least one vulnerable function marked. S2: all of them marked.
/// Throws DataError when the truth set is empty.
bool is_detected(const GroundTruth& truth, const FunctionIdSet& marked,
                 Scenario scenario);

/// A percentage held as integer tenths, e.g. 444 == "44.4".
struct Percent {
  std::int64_t tenths = 0;

  /// 100 * count / total rounded half-up to one decimal.
  static Percent of(std::int64_t count, std::int64_t total);
  std::string str() const;
  double value() const { return static_cast<double>(tenths) / 10.0; }
  auto operator<=>(const Percent&) const = default;
};

struct MetricsRow {
  std::string approach_id;
  std::string benchmark;
  Percent s1_detection;
  Percent s2_detection;
  Percent marked;
  std::int64_t detected_s1 = 0;
  std::int64_t detected_s2 = 0;
  std::int64_t total_vulns = 0;
  std::int64_t marked_functions = 0;
  std::int64_t total_functions = 0;
};

/// The CVEs a detector is judged on, with the sizes of their snapshots.
struct TestSet {
  std::string benchmark;
  std::vector<CveEntry> entries;
  std::map<std::string, GroundTruth> truths;         // by cve_id
  std::map<std::string, std::size_t> inventory_sizes;  // by snapshot id

  /// Restricts to `cve_ids` (all entries when empty).
  static TestSet from_manifest(
      const CorpusManifest& manifest,
      const std::map<std::string, std::size_t>& inventory_sizes,
      const std::vector<std::string>& cve_ids = {});
};

/// Throws DataError listing every test CVE whose snapshot has no report.
MetricsRow compute_metrics(std::string approach_id, const TestSet& test_set,
                           std::span<const DetectorReport> reports);

struct CweRow {
  Percent s1;
  Percent s2;
  std::int64_t n_cves = 0;
};

using CweBreakdown = std::map<std::string, CweRow>;

CweBreakdown cwe_breakdown(const TestSet& test_set,
                           std::span<const DetectorReport> reports);

struct RankedApproach {
  std::string approach_id;
  int s2_rank = 0;
  int marked_rank = 0;
  int total_rank = 0;
};

/// Rank 1 is highest S2 detection / lowest marked ratio; ties share the
/// minimum rank. Sorted by total, then marked ratio, then id.
std::vector<RankedApproach> rank_approaches(std::span<const MetricsRow> rows);

/// Which detection columns the table renderers emit.
enum class ScenarioColumns { S1, S2, Both };
ScenarioColumns parse_scenario_columns(std::string_view text);  // s1|s2|both

std::string metrics_to_csv(std::span<const MetricsRow> rows,
                           ScenarioColumns columns = ScenarioColumns::Both);
std::string metrics_to_json(std::span<const MetricsRow> rows);
std::vector<MetricsRow> metrics_from_json(std::string_view text);
std::string metrics_to_markdown(std::span<const MetricsRow> rows,
                                ScenarioColumns columns = ScenarioColumns::Both);
std::string ranking_to_markdown(std::span<const RankedApproach> ranking);
std::string cwe_to_json(const CweBreakdown& breakdown);

}  // namespace rvd
