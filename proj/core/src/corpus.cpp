#include "rvd/corpus.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "rvd/slicer.hpp"
#include "rvd/text.hpp"

namespace rvd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::NoSnapshot:
      return "NO_SNAPSHOT";
    case SkipReason::NoFixCommit:
      return "NO_FIX_COMMIT";
    case SkipReason::NonSourceOnly:
      return "NON_SOURCE_ONLY";
    case SkipReason::NoLabel:
      return "NO_LABEL";
    case SkipReason::ScanError:
      return "SCAN_ERROR";
    case SkipReason::DuplicateId:
      return "DUPLICATE_ID";
  }
  return "?";
}

const CveEntry& CorpusManifest::entry(std::string_view cve_id) const {
  for (const auto& e : entries)
    if (e.cve_id == cve_id) return e;
  throw DataError("unknown CVE '" + std::string(cve_id) + "'");
}

const GroundTruth& CorpusManifest::truth(std::string_view cve_id) const {
  for (const auto& t : ground_truth)
    if (t.cve_id == cve_id) return t;
  throw DataError("no ground truth for '" + std::string(cve_id) + "'");
}

// ------------------------------------------------------------ ingestion ----

namespace {

struct RawRecord {
  std::string cve_id;
  std::string cwe_id = "UNKNOWN";
  std::vector<std::string> urls;
};

std::string first_cwe(const std::vector<std::string>& values) {
  static const std::regex re(R"(^CWE-\d+$)");
  for (const auto& v : values)
    if (std::regex_match(v, re)) return v;
  return "UNKNOWN";
}

// NVD 1.1 feed item ({"cve": {"CVE_data_meta": ...}}).
RawRecord from_v11(const json& cve) {
  RawRecord r;
  r.cve_id = cve.at("CVE_data_meta").at("ID").get<std::string>();
  std::vector<std::string> cwes;
  if (auto pt = cve.find("problemtype"); pt != cve.end())
    for (const auto& d : pt->value("problemtype_data", json::array()))
      for (const auto& desc : d.value("description", json::array()))
        cwes.push_back(desc.value("value", ""));
  r.cwe_id = first_cwe(cwes);
  if (auto refs = cve.find("references"); refs != cve.end())
    for (const auto& ref : refs->value("reference_data", json::array()))
      r.urls.push_back(ref.value("url", ""));
  return r;
}

// NVD 2.0 API cve object ({"id": ..., "weaknesses": ..., "references": ...}).
RawRecord from_v20(const json& cve) {
  RawRecord r;
  r.cve_id = cve.at("id").get<std::string>();
  std::vector<std::string> cwes;
  for (const auto& w : cve.value("weaknesses", json::array()))
    for (const auto& desc : w.value("description", json::array()))
      cwes.push_back(desc.value("value", ""));
  r.cwe_id = first_cwe(cwes);
  for (const auto& ref : cve.value("references", json::array()))
    r.urls.push_back(ref.value("url", ""));
  return r;
}

RawRecord from_any(const json& obj) {
  const json& cve = obj.contains("cve") ? obj.at("cve") : obj;
  if (cve.contains("CVE_data_meta")) return from_v11(cve);
  if (cve.contains("id")) return from_v20(cve);
  throw DataError("record is neither NVD 1.1 nor 2.0 shaped");
}

std::vector<RawRecord> records_in(const json& doc) {
  std::vector<RawRecord> out;
  auto each = [&](const json& arr) {
    for (const auto& item : arr) out.push_back(from_any(item));
  };
  if (doc.is_array()) {
    each(doc);
  } else if (doc.contains("CVE_Items")) {
    each(doc.at("CVE_Items"));
  } else if (doc.contains("vulnerabilities")) {
    each(doc.at("vulnerabilities"));
  } else {
    out.push_back(from_any(doc));
  }
  return out;
}

struct FixCommit {
  std::string url;
  std::string owner;
  std::string repo;
};

std::optional<FixCommit> find_fix_commit(const std::vector<std::string>& urls) {
  static const std::regex github(
      R"(^https?://(?:www\.)?github\.com/([^/]+)/([^/]+)/(?:pull/\d+/)?commits?/[0-9a-fA-F]{7,40}\b)");
  static const std::regex gitlab(
      R"(^https?://(?:www\.)?gitlab\.com/([^/]+)/([^/]+)/-/commit/[0-9a-fA-F]{7,40}\b)");
  for (const auto& url : urls) {
    std::smatch m;
    if (std::regex_search(url, m, github) || std::regex_search(url, m, gitlab))
      return FixCommit{url, m[1].str(), m[2].str()};
  }
  return std::nullopt;
}

std::optional<std::string> resolve_snapshot(const fs::path& repos_dir, const std::string& cve_id,
                                            const FixCommit& fix) {
  std::error_code ec;
  for (const auto& name : {cve_id, fix.owner + "__" + fix.repo, fix.repo})
    if (fs::is_directory(repos_dir / name, ec)) return name;
  return std::nullopt;
}

}  // namespace

IngestResult ingest_nvd_records(const fs::path& records_dir, const fs::path& repos_dir) {
  std::error_code ec;
  if (!fs::is_directory(records_dir, ec))
    throw ConfigError("records directory not found: " + records_dir.string());
  if (!fs::is_directory(repos_dir, ec))
    throw ConfigError("repos directory not found: " + repos_dir.string());

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(records_dir))
    if (de.is_regular_file() && de.path().extension() == ".json") files.push_back(de.path());
  std::sort(files.begin(), files.end());

  IngestResult result;
  std::set<std::string> seen;
  for (const auto& file : files) {
    const auto fname = file.filename().string();
    std::vector<RawRecord> records;
    try {
      records = records_in(json::parse(read_file(file)));
    } catch (const std::exception& e) {
      result.file_errors.push_back({fname, e.what()});
      continue;
    }
    for (auto& rec : records) {
      if (!seen.insert(rec.cve_id).second) {
        result.skipped.push_back({rec.cve_id, fname, SkipReason::DuplicateId, "already ingested"});
        continue;
      }
      auto fix = find_fix_commit(rec.urls);
      if (!fix) {
        result.skipped.push_back({rec.cve_id, fname, SkipReason::NoFixCommit,
                                  "no commit URL among " + std::to_string(rec.urls.size()) +
                                      " references"});
        continue;
      }
      auto snap = resolve_snapshot(repos_dir, rec.cve_id, *fix);
      if (!snap) {
        result.skipped.push_back({rec.cve_id, fname, SkipReason::NoSnapshot,
                                  "no directory for " + fix->owner + "/" + fix->repo});
        continue;
      }
      auto lang = detect_language(repos_dir / *snap);
      if (!lang) {
        result.skipped.push_back(
            {rec.cve_id, fname, SkipReason::NoSnapshot, "snapshot '" + *snap + "' has no source files"});
        continue;
      }
      result.entries.push_back({rec.cve_id, rec.cwe_id, fix->owner + "/" + fix->repo, *snap, *lang});
      result.fix_commit_urls[rec.cve_id] = fix->url;
    }
  }
  std::sort(result.entries.begin(), result.entries.end(),
            [](const auto& a, const auto& b) { return a.cve_id < b.cve_id; });
  if (result.entries.empty())
    throw DataError("no entries: none of " + std::to_string(files.size()) +
                    " record files yielded a resolvable CVE");
  return result;
}

// ------------------------------------------------------------- labeling ----

LabelResult label_from_fixing_commit(const RepoSnapshot& snapshot, const UnifiedDiff& diff,
                                     const FunctionInventory& inventory, std::string cve_id) {
  LabelResult out;
  out.truth.cve_id = std::move(cve_id);
  bool touched_source = false;
  std::error_code ec;
  for (const auto& fd : diff.files) {
    if (!fd.old_path) continue;  // created by the fix; absent from the pre-image
    const auto& path = *fd.old_path;
    if (!fs::exists(snapshot.root_path / path, ec))
      throw DataError("diff references '" + path + "', which is absent from snapshot '" +
                      snapshot.snapshot_id + "'");
    if (!is_source_of(snapshot.language, path)) continue;
    touched_source = true;
    for (int line : fd.deleted_lines)
      for (auto& id : enclosing(inventory, path, line)) out.truth.vulnerable_functions.insert(id);
    for (int gap : fd.insertion_gaps)
      for (auto& id : enclosing(inventory, path, gap))
        if (id.contains_line(gap + 1)) out.truth.vulnerable_functions.insert(id);
  }
  for (const auto& fd : diff.files)
    if (!fd.old_path && fd.new_path && is_source_of(snapshot.language, *fd.new_path))
      touched_source = true;

  if (!touched_source)
    out.warnings.push_back("diff touches only non-source files");
  else if (out.truth.vulnerable_functions.empty())
    out.warnings.push_back("no function encloses the changed lines");
  return out;
}

// ------------------------------------------------------------- manifest ----

CorpusManifest build_manifest(std::string benchmark_name, std::vector<CveEntry> entries,
                              std::vector<GroundTruth> truths,
                              const std::map<std::string, FunctionInventory>& inventories) {
  if (entries.empty()) throw DataError("cannot build a manifest with no entries");
  if (entries.size() != truths.size())
    throw DataError("got " + std::to_string(entries.size()) + " entries but " +
                    std::to_string(truths.size()) + " ground truths");
  auto by_id = [](const auto& a, const auto& b) { return a.cve_id < b.cve_id; };
  std::sort(entries.begin(), entries.end(), by_id);
  std::sort(truths.begin(), truths.end(), by_id);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].cve_id == entries[i - 1].cve_id)
      throw DataError("duplicate cve_id '" + entries[i].cve_id + "'");
    if (entries[i].cve_id != truths[i].cve_id)
      throw DataError("cve_id mismatch: entry '" + entries[i].cve_id + "' vs truth '" +
                      truths[i].cve_id + "'");
  }

  CorpusManifest m;
  m.benchmark_name = std::move(benchmark_name);
  std::set<std::string> counted;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& t = truths[i];
    auto inv = inventories.find(e.snapshot_ref);
    if (inv == inventories.end())
      throw DataError("no inventory for snapshot '" + e.snapshot_ref + "'");
    if (t.vulnerable_functions.empty())
      throw DataError("ground truth of '" + e.cve_id + "' is empty");
    for (const auto& id : t.vulnerable_functions)
      if (!inv->second.contains(id))
        throw DataError("'" + id.str() + "' of " + e.cve_id + " is not in the inventory");
    if (counted.insert(e.snapshot_ref).second)
      m.function_totals[std::string(to_string(e.language))] += inv->second.n();
  }
  m.entries = std::move(entries);
  m.ground_truth = std::move(truths);
  return m;
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries)
    entries.push_back({{"cve_id", e.cve_id},
                       {"cwe_id", e.cwe_id},
                       {"project", e.project},
                       {"snapshot_ref", e.snapshot_ref},
                       {"language", to_string(e.language)}});
  json truths = json::array();
  for (const auto& t : manifest.ground_truth) {
    json ids = json::array();
    for (const auto& id : t.vulnerable_functions) ids.push_back(id.str());
    truths.push_back({{"cve_id", t.cve_id}, {"vulnerable_functions", ids}});
  }
  json doc = {{"benchmark_name", manifest.benchmark_name},
              {"entries", entries},
              {"ground_truth", truths},
              {"function_totals", manifest.function_totals}};
  return doc.dump(2) + "\n";
}

CorpusManifest manifest_from_json(std::string_view text) {
  try {
    auto doc = json::parse(text);
    CorpusManifest m;
    m.benchmark_name = doc.at("benchmark_name").get<std::string>();
    for (const auto& e : doc.at("entries"))
      m.entries.push_back({e.at("cve_id").get<std::string>(), e.at("cwe_id").get<std::string>(),
                           e.at("project").get<std::string>(),
                           e.at("snapshot_ref").get<std::string>(),
                           parse_language(e.at("language").get<std::string>())});
    for (const auto& t : doc.at("ground_truth")) {
      GroundTruth g;
      g.cve_id = t.at("cve_id").get<std::string>();
      for (const auto& id : t.at("vulnerable_functions"))
        g.vulnerable_functions.insert(FunctionId::parse(id.get<std::string>()));
      m.ground_truth.push_back(std::move(g));
    }
    m.function_totals = doc.at("function_totals").get<std::map<std::string, std::size_t>>();
    if (m.entries.size() != m.ground_truth.size())
      throw DataError("manifest entries and ground_truth differ in length");
    for (std::size_t i = 0; i < m.entries.size(); ++i)
      if (m.entries[i].cve_id != m.ground_truth[i].cve_id)
        throw DataError("manifest entries and ground_truth are not aligned at '" +
                        m.entries[i].cve_id + "'");
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const fs::path& path, const CorpusManifest& manifest) {
  write_file(path, manifest_to_json(manifest));
}

CorpusManifest load_manifest(const fs::path& path) { return manifest_from_json(read_file(path)); }

}  // namespace rvd
