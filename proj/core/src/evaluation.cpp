#include "rvd/evaluation.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rvd {

using nlohmann::json;

bool is_detected(const GroundTruth& truth, const FunctionIdSet& marked, Scenario scenario) {
  const auto& fs = truth.vulnerable_functions;
  if (fs.empty()) throw DataError("ground truth for " + truth.cve_id + " is empty");
  if (scenario == Scenario::S1)
    return std::any_of(fs.begin(), fs.end(), [&](const FunctionId& f) { return marked.contains(f); });
  return std::all_of(fs.begin(), fs.end(), [&](const FunctionId& f) { return marked.contains(f); });
}

Percent Percent::of(std::int64_t count, std::int64_t total) {
  if (total <= 0) throw DataError("percentage over an empty total");
  if (count < 0 || count > total) throw DataError("count outside [0, total]");
  // round(1000 * c / t) half-up, in integers
  return {(2000 * count + total) / (2 * total)};
}

std::string Percent::str() const {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

TestSet TestSet::from_manifest(const CorpusManifest& manifest,
                               const std::map<std::string, std::size_t>& inventory_sizes,
                               const std::vector<std::string>& cve_ids) {
  TestSet ts;
  ts.benchmark = manifest.benchmark_name;
  auto add = [&](const CveEntry& e) {
    const auto& t = manifest.truth(e.cve_id);
    auto size = inventory_sizes.find(e.snapshot_ref);
    if (size == inventory_sizes.end())
      throw DataError("no inventory size for snapshot '" + e.snapshot_ref + "'");
    if (!ts.truths.emplace(e.cve_id, t).second) throw DataError("duplicate test CVE " + e.cve_id);
    ts.entries.push_back(e);
    ts.inventory_sizes[e.snapshot_ref] = size->second;
  };
  if (cve_ids.empty()) {
    for (const auto& e : manifest.entries) add(e);
  } else {
    for (const auto& id : cve_ids) add(manifest.entry(id));
  }
  return ts;
}

namespace {

std::map<std::string, const DetectorReport*> index_reports(const TestSet& ts,
                                                           std::span<const DetectorReport> reports) {
  std::map<std::string, const DetectorReport*> by_snapshot;
  for (const auto& r : reports)
    if (!by_snapshot.emplace(r.snapshot_id, &r).second)
      throw DataError("two reports for snapshot '" + r.snapshot_id + "'");
  std::string missing;
  for (const auto& e : ts.entries)
    if (!by_snapshot.contains(e.snapshot_ref))
      missing += (missing.empty() ? "" : ", ") + e.cve_id + " (" + e.snapshot_ref + ")";
  if (!missing.empty()) throw DataError("no detector report for test CVEs: " + missing);
  return by_snapshot;
}

}  // namespace

MetricsRow compute_metrics(std::string approach_id, const TestSet& ts,
                           std::span<const DetectorReport> reports) {
  if (ts.entries.empty()) throw DataError("test set is empty");
  const auto by_snapshot = index_reports(ts, reports);

  MetricsRow row;
  row.approach_id = std::move(approach_id);
  row.benchmark = ts.benchmark;
  for (const auto& e : ts.entries) {
    const auto& truth = ts.truths.at(e.cve_id);
    const auto& marked = by_snapshot.at(e.snapshot_ref)->marked;
    row.detected_s1 += is_detected(truth, marked, Scenario::S1);
    row.detected_s2 += is_detected(truth, marked, Scenario::S2);
  }
  row.total_vulns = static_cast<std::int64_t>(ts.entries.size());
  // Only snapshots some test CVE points at count toward the denominator.
  std::set<std::string> test_snapshots;
  for (const auto& e : ts.entries) test_snapshots.insert(e.snapshot_ref);
  for (const auto& snap : test_snapshots) {
    auto it = ts.inventory_sizes.find(snap);
    if (it == ts.inventory_sizes.end()) throw DataError("no inventory size for snapshot '" + snap + "'");
    const auto size = it->second;
    const auto* r = by_snapshot.at(snap);
    if (r->marked.size() > size)
      throw DataError("report for '" + snap + "' marks more functions than the inventory holds");
    row.marked_functions += static_cast<std::int64_t>(r->marked.size());
    row.total_functions += static_cast<std::int64_t>(size);
  }
  row.s1_detection = Percent::of(row.detected_s1, row.total_vulns);
  row.s2_detection = Percent::of(row.detected_s2, row.total_vulns);
  row.marked = Percent::of(row.marked_functions, row.total_functions);
  return row;
}

CweBreakdown cwe_breakdown(const TestSet& ts, std::span<const DetectorReport> reports) {
  const auto by_snapshot = index_reports(ts, reports);
  std::map<std::string, std::array<std::int64_t, 3>> counts;  // s1, s2, n
  for (const auto& e : ts.entries) {
    const auto& truth = ts.truths.at(e.cve_id);
    const auto& marked = by_snapshot.at(e.snapshot_ref)->marked;
    auto& c = counts[e.cwe_id.empty() ? "UNKNOWN" : e.cwe_id];
    c[0] += is_detected(truth, marked, Scenario::S1);
    c[1] += is_detected(truth, marked, Scenario::S2);
    ++c[2];
  }
  CweBreakdown out;
  for (const auto& [cwe, c] : counts)
    out[cwe] = {Percent::of(c[0], c[2]), Percent::of(c[1], c[2]), c[2]};
  return out;
}

std::vector<RankedApproach> rank_approaches(std::span<const MetricsRow> rows) {
  if (rows.size() < 2) throw DataError("ranking needs at least 2 approaches");
  for (const auto& r : rows)
    if (r.benchmark != rows.front().benchmark)
      throw DataError("cannot rank across benchmarks '" + rows.front().benchmark + "' and '" +
                      r.benchmark + "'");
  std::set<std::string> ids;
  for (const auto& r : rows)
    if (!ids.insert(r.approach_id).second) throw DataError("duplicate approach '" + r.approach_id + "'");

  // Competition ranking: 1 + number of rows strictly better.
  auto rank_by = [&](auto better) {
    std::vector<int> ranks;
    for (const auto& a : rows)
      ranks.push_back(1 + static_cast<int>(std::count_if(
                              rows.begin(), rows.end(), [&](const MetricsRow& b) { return better(b, a); })));
    return ranks;
  };
  const auto s2 = rank_by([](const MetricsRow& b, const MetricsRow& a) { return b.s2_detection > a.s2_detection; });
  const auto mk = rank_by([](const MetricsRow& b, const MetricsRow& a) { return b.marked < a.marked; });

  std::vector<std::pair<RankedApproach, Percent>> tmp;
  for (std::size_t i = 0; i < rows.size(); ++i)
    tmp.push_back({{rows[i].approach_id, s2[i], mk[i], s2[i] + mk[i]}, rows[i].marked});
  std::sort(tmp.begin(), tmp.end(), [](const auto& a, const auto& b) {
    if (a.first.total_rank != b.first.total_rank) return a.first.total_rank < b.first.total_rank;
    if (a.second != b.second) return a.second < b.second;
    return a.first.approach_id < b.first.approach_id;
  });
  std::vector<RankedApproach> out;
  for (auto& [r, m] : tmp) out.push_back(std::move(r));
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ScenarioColumns parse_scenario_columns(std::string_view text) {
  if (text == "s1") return ScenarioColumns::S1;
  if (text == "s2") return ScenarioColumns::S2;
  if (text == "both") return ScenarioColumns::Both;
  throw ConfigError("scenario must be s1, s2 or both, got '" + std::string(text) + "'");
}

std::string metrics_to_csv(std::span<const MetricsRow> rows, ScenarioColumns columns) {
  const bool s1 = columns != ScenarioColumns::S2;
  const bool s2 = columns != ScenarioColumns::S1;
  std::ostringstream out;
  out << "approach,benchmark" << (s1 ? ",s1_d" : "") << (s2 ? ",s2_d" : "") << ",marked"
      << (s1 ? ",detected_s1" : "") << (s2 ? ",detected_s2" : "")
      << ",total_vulns,marked_functions,total_functions\n";
  for (const auto& r : rows) {
    out << csv_field(r.approach_id) << ',' << csv_field(r.benchmark);
    if (s1) out << ',' << r.s1_detection.str();
    if (s2) out << ',' << r.s2_detection.str();
    out << ',' << r.marked.str();
    if (s1) out << ',' << r.detected_s1;
    if (s2) out << ',' << r.detected_s2;
    out << ',' << r.total_vulns << ',' << r.marked_functions << ',' << r.total_functions << '\n';
  }
  return out.str();
}

std::string metrics_to_json(std::span<const MetricsRow> rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"approach", r.approach_id},
                   {"benchmark", r.benchmark},
                   {"s1_d", r.s1_detection.str()},
                   {"s2_d", r.s2_detection.str()},
                   {"marked", r.marked.str()},
                   {"detected_s1", r.detected_s1},
                   {"detected_s2", r.detected_s2},
                   {"total_vulns", r.total_vulns},
                   {"marked_functions", r.marked_functions},
                   {"total_functions", r.total_functions}});
  return arr.dump(2) + "\n";
}

std::vector<MetricsRow> metrics_from_json(std::string_view text) {
  try {
    std::vector<MetricsRow> out;
    for (const auto& o : json::parse(text)) {
      MetricsRow r;
      r.approach_id = o.at("approach").get<std::string>();
      r.benchmark = o.at("benchmark").get<std::string>();
      r.detected_s1 = o.at("detected_s1").get<std::int64_t>();
      r.detected_s2 = o.at("detected_s2").get<std::int64_t>();
      r.total_vulns = o.at("total_vulns").get<std::int64_t>();
      r.marked_functions = o.at("marked_functions").get<std::int64_t>();
      r.total_functions = o.at("total_functions").get<std::int64_t>();
      // Percentages are re-derived from the counts so they cannot drift.
      r.s1_detection = Percent::of(r.detected_s1, r.total_vulns);
      r.s2_detection = Percent::of(r.detected_s2, r.total_vulns);
      r.marked = Percent::of(r.marked_functions, r.total_functions);
      if (o.at("s1_d").get<std::string>() != r.s1_detection.str() ||
          o.at("s2_d").get<std::string>() != r.s2_detection.str() ||
          o.at("marked").get<std::string>() != r.marked.str())
        throw DataError("metrics row '" + r.approach_id + "' percentages disagree with its counts");
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics file: ") + e.what());
  }
}

std::string metrics_to_markdown(std::span<const MetricsRow> rows, ScenarioColumns columns) {
  const bool s1 = columns != ScenarioColumns::S2;
  const bool s2 = columns != ScenarioColumns::S1;
  std::ostringstream out;
  out << "| Approach | Benchmark |" << (s1 ? " S1 D |" : "") << (s2 ? " S2 D |" : "")
      << " Marked |\n|---|---|" << (s1 ? "---:|" : "") << (s2 ? "---:|" : "") << "---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.approach_id << " | " << r.benchmark << " |";
    if (s1) out << ' ' << r.s1_detection.str() << " |";
    if (s2) out << ' ' << r.s2_detection.str() << " |";
    out << ' ' << r.marked.str() << " |\n";
  }
  return out.str();
}

std::string ranking_to_markdown(std::span<const RankedApproach> ranking) {
  std::ostringstream out;
  out << "| Approach | S2 rank | Marked rank | Total |\n|---|---:|---:|---:|\n";
  for (const auto& r : ranking)
    out << "| " << r.approach_id << " | " << r.s2_rank << " | " << r.marked_rank << " | "
        << r.total_rank << " |\n";
  return out.str();
}

std::string cwe_to_json(const CweBreakdown& breakdown) {
  json doc = json::object();
  for (const auto& [cwe, row] : breakdown)
    doc[cwe] = {{"s1", row.s1.str()}, {"s2", row.s2.str()}, {"n_cves", row.n_cves}};
  return doc.dump(2) + "\n";
}

}  // namespace rvd
