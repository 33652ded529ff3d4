#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "rvd/common.hpp"

using namespace rvd::cli;

namespace {

void add_selection(CLI::App* cmd, Selection& sel) {
  cmd->add_option("--split", sel.split, "Split file; restricts to one partition");
  cmd->add_option("--partition", sel.partition, "train, val or test (with --split)")
      ->check(CLI::IsMember({"train", "val", "test"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repository-level vulnerability detection harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rvd::version()));

  CorpusBuildOptions build;
  auto* corpus = app.add_subcommand("corpus", "Benchmark construction");
  corpus->require_subcommand(1);
  auto* corpus_build_cmd = corpus->add_subcommand("build", "Ingest records, slice snapshots, label from diffs");
  corpus_build_cmd->add_option("--records", build.records, "Directory of NVD JSON records")->required();
  corpus_build_cmd->add_option("--repos", build.repos, "Directory of snapshot directories")->required();
  corpus_build_cmd->add_option("--diffs", build.diffs, "Directory of <cve_id>.diff files")->required();
  corpus_build_cmd->add_option("--name", build.name, "Benchmark name");
  corpus_build_cmd->add_option("--manifest", build.manifest, "Manifest to write")->required();
  corpus_build_cmd->add_option("--inventory-dir", build.inventory_dir, "Where inventories go")->required();
  corpus_build_cmd->add_option("--jobs", build.jobs, "Snapshots sliced in parallel")->check(CLI::PositiveNumber);

  SliceOptions sl;
  auto* slice_cmd = app.add_subcommand("slice", "Function inventory of one repository");
  slice_cmd->add_option("--repo", sl.repo, "Repository directory")->required();
  slice_cmd->add_option("--snapshot-id", sl.snapshot_id, "Defaults to the directory name");
  slice_cmd->add_option("--out", sl.out, "Inventory file (JSON lines)")->required();

  SplitOptions sp;
  auto* split_cmd = app.add_subcommand("split", "Seeded train/val/test split by CVE");
  split_cmd->add_option("--manifest", sp.manifest)->required();
  split_cmd->add_option("--seed", sp.seed)->required();
  split_cmd->add_option("--ratios", sp.ratios, "train:val:test");
  split_cmd->add_option("--val-count", sp.val_count, "Override the validation size");
  split_cmd->add_option("--test-count", sp.test_count, "Override the test size");
  split_cmd->add_option("--out", sp.out, "Split file")->required();
  split_cmd->add_option("--balanced-out", sp.balanced_out, "Balanced training set (JSON lines)");
  split_cmd->add_option("--inventory-dir", sp.inventory_dir);

  ScanOptions sc;
  auto* scan_cmd = app.add_subcommand("scan", "Run one detector over the selected snapshots");
  scan_cmd->add_option("--manifest", sc.manifest)->required();
  scan_cmd->add_option("--inventory-dir", sc.inventory_dir)->required();
  scan_cmd->add_option("--detector", sc.detector, "Detector spec JSON")->required();
  scan_cmd->add_option("--out", sc.out, "Report directory")->required();
  scan_cmd->add_option("--repos", sc.repos, "Snapshot root, needed by command-driven SAST adapters");
  scan_cmd->add_option("--shots", sc.shots, "Balanced-set file supplying few-shot examples");
  scan_cmd->add_option("--jobs", sc.jobs)->check(CLI::PositiveNumber);
  add_selection(scan_cmd, sc.selection);

  CombineOptions cb;
  auto* combine_cmd = app.add_subcommand("combine", "Union or vote over member reports");
  combine_cmd->add_option("--reports", cb.reports, "Report directories or files")->required();
  combine_cmd->add_option("--strategy", cb.strategy, "union or vote:<fraction>");
  combine_cmd->add_option("--ensemble", cb.ensemble, "Ensemble spec JSON");
  combine_cmd->add_option("--out", cb.out, "Report directory")->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics rows, one per report directory");
  eval_cmd->add_option("--manifest", ev.manifest)->required();
  eval_cmd->add_option("--inventory-dir", ev.inventory_dir)->required();
  eval_cmd->add_option("--reports", ev.reports)->required();
  eval_cmd->add_option("--scenario", ev.scenario)->check(CLI::IsMember({"s1", "s2", "both"}));
  eval_cmd->add_option("--format", ev.format)->check(CLI::IsMember({"csv", "json", "md"}));
  eval_cmd->add_option("--cwe-out", ev.cwe_out, "Per-CWE breakdown JSON");
  eval_cmd->add_option("--out", ev.out)->required();
  add_selection(eval_cmd, ev.selection);

  ReportOptions rp;
  auto* report_cmd = app.add_subcommand("report", "Tables and ranking from metrics JSON files");
  report_cmd->add_option("--metrics", rp.metrics)->required();
  report_cmd->add_option("--scenario", rp.scenario)->check(CLI::IsMember({"s1", "s2", "both"}));
  report_cmd->add_option("--format", rp.format)->check(CLI::IsMember({"csv", "json", "md"}));
  report_cmd->add_option("--out", rp.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*corpus_build_cmd) return corpus_build(build);
    if (*slice_cmd) return slice_repo(sl);
    if (*split_cmd) return split_corpus(sp);
    if (*scan_cmd) return scan(sc);
    if (*combine_cmd) return combine(cb);
    if (*eval_cmd) return eval(ev);
    if (*report_cmd) return report(rp);
  } catch (const rvd::Error& e) {
    std::cerr << "rvd: " << e.what() << "\n";
    return rvd::exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "rvd: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "rvd: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
