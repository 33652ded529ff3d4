#include "commands.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "run_context.hpp"
#include "rvd/corpus.hpp"
#include "rvd/detectors.hpp"
#include "rvd/diff.hpp"
#include "rvd/ensemble.hpp"
#include "rvd/evaluation.hpp"
#include "rvd/slicer.hpp"
#include "rvd/splitter.hpp"
#include "rvd/text.hpp"

namespace rvd::cli {

using nlohmann::json;

namespace {

fs::path inventory_path(const fs::path& dir, const std::string& snapshot_id) {
  return dir / (snapshot_id + ".jsonl");
}

void require_dir(const fs::path& p, const char* what) {
  std::error_code ec;
  if (!fs::is_directory(p, ec)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void require_file(const fs::path& p, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

CorpusManifest read_manifest(RunContext& ctx, const fs::path& p) {
  require_file(p, "manifest");
  ctx.input(p);
  return load_manifest(p);
}

// CVE ids covered by a selection, in manifest order.
std::vector<std::string> selected_ids(RunContext& ctx, const CorpusManifest& m, const Selection& sel) {
  std::vector<std::string> ids;
  if (sel.split.empty()) {
    for (const auto& e : m.entries) ids.push_back(e.cve_id);
    return ids;
  }
  require_file(sel.split, "split file");
  ctx.input(sel.split);
  const auto s = SplitResult::from_json(read_file(sel.split));
  if (sel.partition == "train") return s.train;
  if (sel.partition == "val") return s.val;
  if (sel.partition == "test") return s.test;
  throw ConfigError("partition must be train, val or test, got '" + sel.partition + "'");
}

// Distinct snapshots of the selected CVEs, sorted.
std::vector<std::string> snapshots_of(const CorpusManifest& m, const std::vector<std::string>& ids) {
  std::set<std::string> snaps;
  for (const auto& id : ids) snaps.insert(m.entry(id).snapshot_ref);
  return {snaps.begin(), snaps.end()};
}

// Reports found at each path: a directory contributes every *.json file in it
// except the run manifest, a file contributes itself.
std::vector<fs::path> report_files(const fs::path& p) {
  std::error_code ec;
  if (fs::is_regular_file(p, ec)) return {p};
  if (!fs::is_directory(p, ec)) throw ConfigError("report path not found: " + p.string());
  std::vector<fs::path> out;
  for (const auto& de : fs::directory_iterator(p)) {
    const auto name = de.path().filename().string();
    if (de.is_regular_file() && de.path().extension() == ".json" && name != "run_manifest.json" &&
        !name.ends_with(".partial.json"))
      out.push_back(de.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw DataError("no reports under " + p.string());
  return out;
}

std::vector<DetectorReport> load_reports(RunContext& ctx, const fs::path& p) {
  std::vector<DetectorReport> out;
  for (const auto& f : report_files(p)) {
    ctx.input(f);
    out.push_back(load_report(f));
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------ corpus build --

int corpus_build(const CorpusBuildOptions& o) {
  require_dir(o.records, "records directory");
  require_dir(o.repos, "repos directory");
  require_dir(o.diffs, "diffs directory");
  RunContext ctx("corpus build", o.manifest, false);
  ctx.config("records", o.records.generic_string());
  ctx.config("repos", o.repos.generic_string());
  ctx.config("diffs", o.diffs.generic_string());
  ctx.config("name", o.name);
  ctx.config("inventory_dir", o.inventory_dir.generic_string());

  auto ingest = ingest_nvd_records(o.records, o.repos);
  for (const auto& fe : ingest.file_errors) ctx.log().warn("record file {}: {}", fe.file, fe.message);
  auto skipped = ingest.skipped;

  // Slice each distinct snapshot once.
  std::vector<std::string> snaps;
  {
    std::set<std::string> s;
    for (const auto& e : ingest.entries) s.insert(e.snapshot_ref);
    snaps.assign(s.begin(), s.end());
  }
  std::map<std::string, Language> lang_of;
  for (const auto& e : ingest.entries) lang_of.emplace(e.snapshot_ref, e.language);

  struct Sliced {
    std::optional<RepoSnapshot> snapshot;
    FunctionInventory inventory;
    SliceWarnings warnings;
    std::string error;
  };
  std::vector<Sliced> sliced(snaps.size());
  parallel_for(snaps.size(), o.jobs, [&](std::size_t i) {
    try {
      sliced[i].snapshot = open_snapshot(snaps[i], o.repos / snaps[i], lang_of.at(snaps[i]));
      sliced[i].inventory = slice(*sliced[i].snapshot, &sliced[i].warnings);
    } catch (const DataError& e) {
      sliced[i].error = e.what();
    }
  });

  std::map<std::string, FunctionInventory> inventories;
  std::map<std::string, const Sliced*> by_snap;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    by_snap[snaps[i]] = &sliced[i];
    for (const auto& w : sliced[i].warnings.messages) ctx.log().warn("{}: {}", snaps[i], w);
  }

  std::vector<CveEntry> entries;
  std::vector<GroundTruth> truths;
  for (const auto& e : ingest.entries) {
    const auto& s = *by_snap.at(e.snapshot_ref);
    if (!s.error.empty()) {
      skipped.push_back({e.cve_id, "", SkipReason::ScanError, s.error});
      continue;
    }
    const auto diff_path = o.diffs / (e.cve_id + ".diff");
    std::error_code ec;
    if (!fs::is_regular_file(diff_path, ec)) {
      skipped.push_back({e.cve_id, "", SkipReason::NoFixCommit, "no diff file " + diff_path.filename().string()});
      continue;
    }
    ctx.input(diff_path);
    LabelResult label;
    try {
      label = label_from_fixing_commit(*s.snapshot, parse_unified_diff(read_file(diff_path)),
                                       s.inventory, e.cve_id);
    } catch (const DataError& err) {
      skipped.push_back({e.cve_id, diff_path.filename().string(), SkipReason::ScanError, err.what()});
      continue;
    }
    for (const auto& w : label.warnings) ctx.log().warn("{}: {}", e.cve_id, w);
    if (label.truth.vulnerable_functions.empty()) {
      const bool non_source = std::find(label.warnings.begin(), label.warnings.end(),
                                        "diff touches only non-source files") != label.warnings.end();
      skipped.push_back({e.cve_id, diff_path.filename().string(),
                         non_source ? SkipReason::NonSourceOnly : SkipReason::NoLabel,
                         label.warnings.empty() ? "" : label.warnings.front()});
      continue;
    }
    inventories.emplace(e.snapshot_ref, s.inventory);
    entries.push_back(e);
    truths.push_back(std::move(label.truth));
  }

  std::sort(skipped.begin(), skipped.end(), [](const SkipRecord& a, const SkipRecord& b) {
    return std::tie(a.cve_id, a.source_file) < std::tie(b.cve_id, b.source_file);
  });
  json skip_doc = json::array();
  for (const auto& sk : skipped) {
    ctx.log().info("skip {} ({}): {}", sk.cve_id, to_string(sk.reason), sk.detail);
    skip_doc.push_back({{"cve_id", sk.cve_id},
                        {"source_file", sk.source_file},
                        {"reason", to_string(sk.reason)},
                        {"detail", sk.detail}});
  }
  json file_errors = json::array();
  for (const auto& fe : ingest.file_errors) file_errors.push_back({{"file", fe.file}, {"message", fe.message}});
  ctx.extra()["skipped"] = skip_doc;
  ctx.extra()["file_errors"] = file_errors;

  const auto manifest = build_manifest(o.name, entries, truths, inventories);
  fs::create_directories(o.inventory_dir);
  for (const auto& [snap, inv] : inventories) {
    const auto p = inventory_path(o.inventory_dir, snap);
    save_inventory(p, inv);
    ctx.output(p);
  }
  save_manifest(o.manifest, manifest);
  ctx.output(o.manifest);
  ctx.log().info("{} entries, {} skipped, {} snapshots", manifest.entries.size(), skipped.size(),
                 inventories.size());
  ctx.write_manifest();
  return 0;
}

// ------------------------------------------------------------------- slice --

int slice_repo(const SliceOptions& o) {
  require_dir(o.repo, "repository");
  RunContext ctx("slice", o.out, false);
  const auto id = o.snapshot_id.empty() ? fs::absolute(o.repo).lexically_normal().filename().string()
                                        : o.snapshot_id;
  ctx.config("repo", o.repo.generic_string());
  ctx.config("snapshot_id", id);
  const auto lang = detect_language(o.repo);
  if (!lang) throw DataError("no Java, C or Python sources under " + o.repo.string());
  SliceWarnings warnings;
  const auto inv = slice(open_snapshot(id, o.repo, *lang), &warnings);
  for (const auto& w : warnings.messages) ctx.log().warn("{}", w);
  save_inventory(o.out, inv);
  ctx.output(o.out);
  ctx.extra()["functions"] = inv.n();
  ctx.extra()["skipped_regions"] = warnings.skipped_regions;
  ctx.log().info("{} functions in {}", inv.n(), id);
  ctx.write_manifest();
  return 0;
}

// ------------------------------------------------------------------- split --

int split_corpus(const SplitOptions& o) {
  RunContext ctx("split", o.out, false);
  const auto m = read_manifest(ctx, o.manifest);
  SplitSpec spec{o.seed, SplitRatios::parse(o.ratios), o.val_count, o.test_count};
  ctx.config("ratios", spec.ratios.str());
  if (o.val_count) ctx.config("val_count", *o.val_count);
  if (o.test_count) ctx.config("test_count", *o.test_count);
  ctx.seed("split", o.seed);
  const auto result = split(m, spec);
  write_file(o.out, result.to_json());
  ctx.output(o.out);
  ctx.log().info("train {} / val {} / test {}", result.train.size(), result.val.size(), result.test.size());

  if (!o.balanced_out.empty()) {
    if (o.inventory_dir.empty()) throw ConfigError("--balanced-out needs --inventory-dir");
    std::map<std::string, FunctionInventory> inventories;
    for (const auto& snap : snapshots_of(m, result.train)) {
      const auto p = inventory_path(o.inventory_dir, snap);
      ctx.input(p);
      inventories.emplace(snap, load_inventory(p));
    }
    const auto set = balanced_training_set(m, inventories, result.train, o.seed);
    for (const auto& w : set.warnings) ctx.log().warn("{}", w);
    write_file(o.balanced_out, balanced_set_to_jsonl(set.items));
    ctx.output(o.balanced_out);
    ctx.extra()["balanced_items"] = set.items.size();
  }
  ctx.write_manifest();
  return 0;
}

// -------------------------------------------------------------------- scan --

namespace {

PromptTemplate prompt_for(RunContext& ctx, const DetectorSpec& spec, const fs::path& shots) {
  PromptTemplate tmpl;
  tmpl.mode = parse_prompt_mode(spec.get("mode", "zero_shot"));
  if (tmpl.mode != PromptMode::FewShot) return tmpl;
  if (shots.empty()) throw ConfigError("few_shot mode needs --shots (a balanced-set file)");
  require_file(shots, "shots file");
  ctx.input(shots);
  std::optional<Shot> vulnerable, clean;
  for (const auto& item : balanced_set_from_jsonl(read_file(shots))) {
    auto& slot = item.label == 1 ? vulnerable : clean;
    if (!slot) slot = Shot{item.record.body, item.label == 1};
  }
  if (!vulnerable || !clean) throw DataError("shots file needs one vulnerable and one clean function");
  tmpl.shots = {*vulnerable, *clean};
  return tmpl;
}

}  // namespace

int scan(const ScanOptions& o) {
  require_file(o.detector, "detector spec");
  RunContext ctx("scan", o.out, true);
  const auto spec = load_detector_spec(o.detector);
  ctx.input(o.detector);
  ctx.config("detector", json::parse(spec.to_json()));
  ctx.config("partition", o.selection.split.empty() ? "all" : o.selection.partition);
  if (spec.config.contains("seed")) ctx.seed("detector", std::stoull(spec.get("seed")));
  const auto m = read_manifest(ctx, o.manifest);
  const auto ids = selected_ids(ctx, m, o.selection);
  const auto snaps = snapshots_of(m, ids);

  // Truth per snapshot is the union over every selected CVE that lives there.
  std::map<std::string, GroundTruth> truth;
  for (const auto& id : ids) {
    auto& t = truth[m.entry(id).snapshot_ref];
    t.cve_id = m.entry(id).snapshot_ref;
    const auto& vf = m.truth(id).vulnerable_functions;
    t.vulnerable_functions.insert(vf.begin(), vf.end());
  }
  std::map<std::string, Language> lang_of;
  for (const auto& e : m.entries) lang_of.emplace(e.snapshot_ref, e.language);

  std::optional<PromptTemplate> tmpl;
  if (spec.kind == DetectorKind::LlmClient) tmpl = prompt_for(ctx, spec, o.shots);

  std::vector<DetectorReport> reports(snaps.size());
  std::vector<std::optional<DetectorReport>> partial(snaps.size());
  // LLM runs already fan out per function, so snapshots go one at a time.
  const unsigned jobs = spec.kind == DetectorKind::LlmClient ? 1 : o.jobs;
  for (const auto& snap : snaps) ctx.input(inventory_path(o.inventory_dir, snap));
  auto run_one = [&](std::size_t i) {
    const auto& snap = snaps[i];
    const auto inv = load_inventory(inventory_path(o.inventory_dir, snap));
    switch (spec.kind) {
      case DetectorKind::SastAdapter: {
        RepoSnapshot rs{snap, {}, lang_of.at(snap), 0};
        if (!o.repos.empty()) rs = open_snapshot(snap, o.repos / snap, lang_of.at(snap));
        reports[i] = run_sast_adapter(spec, rs, inv);
        break;
      }
      case DetectorKind::LlmClient:
        try {
          reports[i] = run_llm_detector(spec, inv, *tmpl);
        } catch (const DetectorRunAborted& e) {
          partial[i] = e.partial();
          throw;
        }
        break;
      default:
        reports[i] = run_reference_detector(spec, inv, &truth.at(snap));
    }
  };
  try {
    parallel_for(snaps.size(), jobs, run_one);
  } catch (const DetectorRunAborted&) {
    for (std::size_t i = 0; i < snaps.size(); ++i) {
      if (!partial[i]) continue;
      const auto p = o.out / (snaps[i] + ".partial.json");
      save_report(p, *partial[i]);
      ctx.output(p);
    }
    ctx.write_manifest();
    throw;
  }

  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const auto p = o.out / (snaps[i] + ".json");
    save_report(p, reports[i]);
    ctx.output(p);
    const auto& r = reports[i];
    ctx.log().info("{}: marked {} / predictions {}, unparsed {}, unmapped {}, failed {}, {} ms",
                   snaps[i], r.marked.size(), r.prediction_count, r.unparsed_responses,
                   r.unmapped_findings, r.failed_functions.size(), r.wall_time_ms);
    if (!r.failed_functions.empty())
      ctx.log().warn("{}: {} functions lost to transport errors", snaps[i], r.failed_functions.size());
  }
  ctx.write_manifest();
  // A run that lost functions is written out but still reported as a failure.
  for (const auto& r : reports)
    if (!r.failed_functions.empty())
      throw DetectorError("detector '" + spec.detector_id + "' lost " +
                          std::to_string(r.failed_functions.size()) + " functions on " + r.snapshot_id);
  return 0;
}

// ----------------------------------------------------------------- combine --

int combine(const CombineOptions& o) {
  RunContext ctx("combine", o.out, true);
  std::map<std::string, std::vector<DetectorReport>> by_snap;
  std::vector<std::string> members;
  for (const auto& p : o.reports) {
    for (auto& r : load_reports(ctx, p)) {
      if (std::find(members.begin(), members.end(), r.detector_id) == members.end())
        members.push_back(r.detector_id);
      by_snap[r.snapshot_id].push_back(std::move(r));
    }
  }
  EnsembleSpec spec;
  if (!o.ensemble.empty()) {
    require_file(o.ensemble, "ensemble spec");
    ctx.input(o.ensemble);
    spec = EnsembleSpec::from_json(read_file(o.ensemble));
  } else if (!o.strategy.empty()) {
    spec = EnsembleSpec::from_strategy(o.strategy, members);
  } else {
    throw ConfigError("combine needs --strategy or --ensemble");
  }
  ctx.config("ensemble", json::parse(spec.to_json()));
  for (auto& [snap, reports] : by_snap) {
    const auto out = rvd::combine(spec, reports);
    if (out.heterogeneous) ctx.log().warn("{}: ensemble mixes SAST and LLM members", snap);
    const auto p = o.out / (snap + ".json");
    save_report(p, out);
    ctx.output(p);
    ctx.log().info("{}: {} marked by {}", snap, out.marked.size(), out.detector_id);
  }
  ctx.write_manifest();
  return 0;
}

// -------------------------------------------------------------------- eval --

int eval(const EvalOptions& o) {
  const auto columns = parse_scenario_columns(o.scenario);
  if (o.format != "csv" && o.format != "json" && o.format != "md")
    throw ConfigError("format must be csv, json or md, got '" + o.format + "'");
  if (o.reports.empty()) throw ConfigError("eval needs at least one --reports path");
  RunContext ctx("eval", o.out, false);
  ctx.config("scenario", o.scenario);
  ctx.config("format", o.format);
  ctx.config("partition", o.selection.split.empty() ? "all" : o.selection.partition);
  const auto m = read_manifest(ctx, o.manifest);
  const auto ids = selected_ids(ctx, m, o.selection);

  std::map<std::string, std::size_t> sizes;
  for (const auto& snap : snapshots_of(m, ids)) {
    const auto p = inventory_path(o.inventory_dir, snap);
    ctx.input(p);
    sizes[snap] = load_inventory(p).n();
  }
  const auto test_set = TestSet::from_manifest(m, sizes, ids);

  std::vector<MetricsRow> rows;
  json cwe = json::object();
  for (const auto& p : o.reports) {
    auto reports = load_reports(ctx, p);
    // Reports for snapshots outside the selection are ignored.
    std::erase_if(reports, [&](const DetectorReport& r) { return !sizes.contains(r.snapshot_id); });
    if (reports.empty()) throw DataError("no reports under " + p.string() + " cover the selected CVEs");
    const auto id = reports.front().detector_id;
    for (const auto& r : reports)
      if (r.detector_id != id)
        throw DataError(p.string() + " mixes detectors '" + id + "' and '" + r.detector_id + "'");
    rows.push_back(compute_metrics(id, test_set, reports));
    if (!o.cwe_out.empty()) cwe[id] = json::parse(cwe_to_json(cwe_breakdown(test_set, reports)));
  }

  std::string text;
  if (o.format == "csv") text = metrics_to_csv(rows, columns);
  if (o.format == "json") text = metrics_to_json(rows);
  if (o.format == "md") text = metrics_to_markdown(rows, columns);
  write_file(o.out, text);
  ctx.output(o.out);
  if (!o.cwe_out.empty()) {
    write_file(o.cwe_out, cwe.dump(2) + "\n");
    ctx.output(o.cwe_out);
  }
  for (const auto& r : rows)
    ctx.log().info("{}: S1 {} S2 {} marked {}", r.approach_id, r.s1_detection.str(),
                   r.s2_detection.str(), r.marked.str());
  ctx.write_manifest();
  return 0;
}

// ------------------------------------------------------------------ report --

int report(const ReportOptions& o) {
  const auto columns = parse_scenario_columns(o.scenario);
  if (o.format != "csv" && o.format != "json" && o.format != "md")
    throw ConfigError("format must be csv, json or md, got '" + o.format + "'");
  if (o.metrics.empty()) throw ConfigError("report needs at least one --metrics file");
  RunContext ctx("report", o.out, false);
  ctx.config("scenario", o.scenario);
  ctx.config("format", o.format);
  std::vector<MetricsRow> rows;
  for (const auto& p : o.metrics) {
    require_file(p, "metrics file");
    ctx.input(p);
    for (auto& r : metrics_from_json(read_file(p))) rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("metrics files hold no rows");

  std::string text;
  if (o.format == "csv") {
    text = metrics_to_csv(rows, columns);
  } else if (o.format == "json") {
    text = metrics_to_json(rows);
  } else {
    std::set<std::string> benchmarks;
    for (const auto& r : rows) benchmarks.insert(r.benchmark);
    for (const auto& b : benchmarks) {
      std::vector<MetricsRow> group;
      for (const auto& r : rows)
        if (r.benchmark == b) group.push_back(r);
      if (!text.empty()) text += "\n";
      text += "# " + b + "\n\n" + metrics_to_markdown(group, columns);
      if (group.size() >= 2) text += "\n## Ranking\n\n" + ranking_to_markdown(rank_approaches(group));
    }
  }
  write_file(o.out, text);
  ctx.output(o.out);
  ctx.write_manifest();
  return 0;
}

}  // namespace rvd::cli
