#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rvd::cli {

namespace fs = std::filesystem;

struct CorpusBuildOptions {
  fs::path records, repos, diffs, manifest, inventory_dir;
  std::string name = "benchmark";
  unsigned jobs = 1;
};

struct SliceOptions {
  fs::path repo, out;
  std::string snapshot_id;  // defaults to the directory name
};

struct SplitOptions {
  fs::path manifest, out;
  std::uint64_t seed = 0;
  std::string ratios = "8:1:1";
  std::optional<std::size_t> val_count, test_count;
  fs::path balanced_out, inventory_dir;  // optional
};

// Which CVEs a scan or eval covers.
struct Selection {
  fs::path split;                 // empty: the whole manifest
  std::string partition = "test";  // train | val | test
};

struct ScanOptions {
  fs::path manifest, inventory_dir, detector, out, repos, shots;
  Selection selection;
  unsigned jobs = 1;
};

struct CombineOptions {
  std::vector<fs::path> reports;
  std::string strategy;
  fs::path ensemble;  // EnsembleSpec JSON, alternative to --strategy
  fs::path out;
};

struct EvalOptions {
  fs::path manifest, inventory_dir, out, cwe_out;
  std::vector<fs::path> reports;
  Selection selection;
  std::string scenario = "both";
  std::string format = "csv";
};

struct ReportOptions {
  std::vector<fs::path> metrics;
  fs::path out;
  std::string scenario = "both";
  std::string format = "md";
};

int corpus_build(const CorpusBuildOptions& o);
int slice_repo(const SliceOptions& o);
int split_corpus(const SplitOptions& o);
int scan(const ScanOptions& o);
int combine(const CombineOptions& o);
int eval(const EvalOptions& o);
int report(const ReportOptions& o);

}  // namespace rvd::cli
