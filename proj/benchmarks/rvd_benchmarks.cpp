#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "rvd/ensemble.hpp"
#include "rvd/evaluation.hpp"
#include "rvd/slicer.hpp"

using namespace rvd;

namespace {

std::string c_source(int n) {
  std::string s = "#include <stdio.h>\nstruct pt { int x; int y; };\n";
  for (int i = 0; i < n; ++i) {
    s += "static int f" + std::to_string(i) + "(const char *p, int n) {\n";
    s += "  /* { not a brace */\n  int k = 0;\n  for (int j = 0; j < n; ++j) {\n";
    s += "    if (p[j] == '{') k++;\n    else if (p[j] == '}') k--;\n  }\n";
    s += "  return k + \"}\"[0];\n}\n\n";
  }
  return s;
}

std::string java_source(int n) {
  std::string s = "package a.b;\n\npublic class Big {\n";
  for (int i = 0; i < n; ++i) {
    s += "  @Override\n  public int m" + std::to_string(i) + "(String x) {\n";
    s += "    Runnable r = new Runnable() { public void run() { System.out.println(\"}\"); } };\n";
    s += "    return x.length();\n  }\n";
  }
  return s + "}\n";
}

std::string python_source(int n) {
  std::string s = "import os\n\n";
  for (int i = 0; i < n; ++i) {
    s += "def f" + std::to_string(i) + "(a, b=\"\"\"x\n  y\"\"\"):\n";
    s += "    def inner():\n        return a\n    if a:\n        return inner()\n    return b\n\n";
  }
  return s;
}

void BM_ScanC(benchmark::State& state) {
  const auto src = c_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_c(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ScanC)->Arg(100)->Arg(2000);

void BM_ScanJava(benchmark::State& state) {
  const auto src = java_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_java(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ScanJava)->Arg(100)->Arg(2000);

void BM_ScanPython(benchmark::State& state) {
  const auto src = python_source(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_python(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_ScanPython)->Arg(100)->Arg(2000);

FunctionId fid(int i) {
  return FunctionId{"src/f" + std::to_string(i % 50) + ".c", "f" + std::to_string(i), i, i + 5, "00000000"};
}

std::vector<DetectorReport> member_reports(std::size_t k, int functions) {
  std::mt19937_64 rng(42);
  std::vector<DetectorReport> reps(k);
  for (std::size_t m = 0; m < k; ++m) {
    reps[m].detector_id = "m" + std::to_string(m);
    reps[m].snapshot_id = "s";
    reps[m].kind = DetectorKind::Random;
    reps[m].prediction_count = static_cast<std::size_t>(functions);
    for (int i = 0; i < functions; ++i)
      if (rng() % 3 == 0) reps[m].marked.insert(fid(i));
  }
  return reps;
}

void BM_VoteCombine(benchmark::State& state) {
  const auto reps = member_reports(12, static_cast<int>(state.range(0)));
  EnsembleSpec spec;
  spec.strategy = Strategy::Vote;
  spec.theta = Rational::make(2, 3);
  for (const auto& r : reps) spec.member_ids.push_back(r.detector_id);
  for (auto _ : state) benchmark::DoNotOptimize(combine(spec, reps));
}
BENCHMARK(BM_VoteCombine)->Arg(1000)->Arg(20000);

void BM_ThresholdSweep(benchmark::State& state) {
  const auto reps = member_reports(12, static_cast<int>(state.range(0)));
  std::vector<Rational> thetas;
  for (int d = 1; d < 12; ++d) thetas.push_back(Rational::make(d, 12));
  for (auto _ : state) benchmark::DoNotOptimize(sweep_thresholds(reps, thetas));
}
BENCHMARK(BM_ThresholdSweep)->Arg(20000);

void BM_ComputeMetrics(benchmark::State& state) {
  const int cves = static_cast<int>(state.range(0));
  const int per_snapshot = 200;
  TestSet t;
  t.benchmark = "bench";
  std::vector<DetectorReport> reps;
  std::mt19937_64 rng(7);
  for (int c = 0; c < cves; ++c) {
    const auto cve = "CVE-1-" + std::to_string(c);
    const auto snap = "snap" + std::to_string(c);
    t.entries.push_back({cve, "CWE-79", "p/q", snap, Language::C});
    GroundTruth g{cve, {}};
    DetectorReport r;
    r.detector_id = "d";
    r.snapshot_id = snap;
    r.prediction_count = per_snapshot;
    for (int i = 0; i < per_snapshot; ++i) {
      if (rng() % 20 == 0) g.vulnerable_functions.insert(fid(i));
      if (rng() % 4 == 0) r.marked.insert(fid(i));
    }
    g.vulnerable_functions.insert(fid(0));
    t.truths[cve] = g;
    t.inventory_sizes[snap] = per_snapshot;
    reps.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_metrics("d", t, reps));
}
BENCHMARK(BM_ComputeMetrics)->Arg(100)->Arg(1000);

}  // namespace
BENCHMARK_MAIN();
