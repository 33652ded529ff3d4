#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rvd/corpus.hpp"
#include "rvd/function.hpp"
#include "rvd/snapshot.hpp"

namespace rvd::test {

std::filesystem::path fixture_root();  // tests/fixtures/benchmark
std::filesystem::path golden_dir();
std::filesystem::path rvd_binary();

struct ExpectedFunction {
  std::string snapshot;
  std::string file;
  std::string name;
  int start = 0;
  int end = 0;
};

// Hand listing, in file order.
std::vector<ExpectedFunction> expected_functions();

using FileAndName = std::pair<std::string, std::string>;
std::map<std::string, std::set<FileAndName>> expected_labels();

// Same steps as `rvd corpus build`, in process, without logging.
struct FixtureCorpus {
  CorpusManifest manifest;
  std::map<std::string, RepoSnapshot> snapshots;
  std::map<std::string, FunctionInventory> inventories;
  std::vector<std::string> skipped;  // cve ids
};

FixtureCorpus build_fixture_corpus();

std::map<std::string, std::size_t> inventory_sizes(const FixtureCorpus& corpus);

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Writes `files` (relative path -> contents) under `root`.
void write_tree(const std::filesystem::path& root,
                const std::map<std::string, std::string>& files);

FunctionId make_id(std::string file, std::string name, int start, int end);

}  // namespace rvd::test
