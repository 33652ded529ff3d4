#include "fixture.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "rvd/diff.hpp"
#include "rvd/hash.hpp"
#include "rvd/slicer.hpp"
#include "rvd/text.hpp"

namespace fs = std::filesystem;

namespace rvd::test {

fs::path fixture_root() { return fs::path(RVD_TEST_FIXTURES) / "benchmark"; }
fs::path golden_dir() { return RVD_TEST_GOLDEN; }
fs::path rvd_binary() { return RVD_TEST_BINARY; }

namespace {

std::vector<std::vector<std::string>> read_tsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::vector<ExpectedFunction> expected_functions() {
  std::vector<ExpectedFunction> out;
  for (auto& r : read_tsv(fixture_root() / "expected_functions.tsv"))
    out.push_back({r.at(0), r.at(1), r.at(2), std::stoi(r.at(3)), std::stoi(r.at(4))});
  return out;
}

std::map<std::string, std::set<FileAndName>> expected_labels() {
  std::map<std::string, std::set<FileAndName>> out;
  for (auto& r : read_tsv(fixture_root() / "expected_labels.tsv"))
    out[r.at(0)].emplace(r.at(1), r.at(2));
  return out;
}

FixtureCorpus build_fixture_corpus() {
  const auto root = fixture_root();
  auto ingest = ingest_nvd_records(root / "records", root / "repos");
  FixtureCorpus out;
  for (const auto& e : ingest.entries) {
    if (!out.snapshots.contains(e.snapshot_ref)) {
      auto snap = open_snapshot(e.snapshot_ref, root / "repos" / e.snapshot_ref, e.language);
      out.inventories.emplace(e.snapshot_ref, slice(snap));
      out.snapshots.emplace(e.snapshot_ref, std::move(snap));
    }
  }
  std::vector<CveEntry> entries;
  std::vector<GroundTruth> truths;
  for (const auto& e : ingest.entries) {
    const auto diff = root / "diffs" / (e.cve_id + ".diff");
    if (!fs::exists(diff)) {
      out.skipped.push_back(e.cve_id);
      continue;
    }
    auto label = label_from_fixing_commit(out.snapshots.at(e.snapshot_ref),
                                          parse_unified_diff(read_file(diff)),
                                          out.inventories.at(e.snapshot_ref), e.cve_id);
    if (label.truth.vulnerable_functions.empty()) {
      out.skipped.push_back(e.cve_id);
      continue;
    }
    entries.push_back(e);
    truths.push_back(std::move(label.truth));
  }
  // Skipped entries may leave inventories nobody refers to.
  std::set<std::string> used;
  for (const auto& e : entries) used.insert(e.snapshot_ref);
  std::erase_if(out.inventories, [&](const auto& kv) { return !used.contains(kv.first); });
  std::erase_if(out.snapshots, [&](const auto& kv) { return !used.contains(kv.first); });
  out.manifest = build_manifest("fixture", std::move(entries), std::move(truths), out.inventories);
  return out;
}

std::map<std::string, std::size_t> inventory_sizes(const FixtureCorpus& corpus) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& [snap, inv] : corpus.inventories) sizes[snap] = inv.n();
  return sizes;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("rvd-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_tree(const fs::path& root, const std::map<std::string, std::string>& files) {
  for (const auto& [rel, contents] : files) {
    const auto p = root / rel;
    fs::create_directories(p.parent_path());
    write_file(p, contents);
  }
}

FunctionId make_id(std::string file, std::string name, int start, int end) {
  FunctionId id;
  id.body_hash = body_hash8(file + "/" + name + "/" + std::to_string(start));
  id.file = std::move(file);
  id.name = std::move(name);
  id.start_line = start;
  id.end_line = end;
  return id;
}

}  // namespace rvd::test
