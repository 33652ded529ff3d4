#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fixture.hpp"
#include "rvd/common.hpp"
#include "rvd/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using rvd::read_file;
using rvd::write_file;
using rvd::test::TempDir;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run rvd_cli(const std::string& args) {
  const auto cmd = rvd::test::rvd_binary().string() + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

#define RUN_OK(args)                          \
  do {                                        \
    auto r_ = rvd_cli(args);                  \
    ASSERT_EQ(r_.code, 0) << (args) << "\n" << r_.output; \
  } while (0)

std::string fx(const std::string& rel) { return (rvd::test::fixture_root() / rel).string(); }

const std::vector<std::string> kDetectors = {"oracle", "null", "allmark", "sast-a", "sast-b", "sast-c"};

// The whole fixture pipeline into `out`.
void pipeline(const fs::path& out) {
  const auto o = out.string();
  RUN_OK("corpus build --records " + fx("records") + " --repos " + fx("repos") + " --diffs " + fx("diffs") +
         " --name fixture --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --jobs 3");
  for (const auto& d : kDetectors)
    RUN_OK("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " +
           fx("detectors/" + d + ".json") + " --out " + o + "/reports/" + d + " --repos " + fx("repos"));
  const std::string sast = o + "/reports/sast-a " + o + "/reports/sast-b " + o + "/reports/sast-c";
  RUN_OK("combine --reports " + sast + " --strategy union --out " + o + "/reports/union");
  RUN_OK("combine --reports " + sast + " --strategy vote:1/2 --out " + o + "/reports/vote12");
  RUN_OK("combine --reports " + sast + " --strategy vote:2/3 --out " + o + "/reports/vote23");
  std::string all;
  for (const auto& d : kDetectors) all += " " + o + "/reports/" + d;
  all += " " + o + "/reports/union " + o + "/reports/vote12 " + o + "/reports/vote23";
  for (const char* fmt : {"csv", "json", "md"})
    RUN_OK("eval --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --reports" + all +
           " --format " + fmt + " --out " + o + "/metrics." + fmt + " --cwe-out " + o + "/cwe.json");
  RUN_OK("report --metrics " + o + "/metrics.json --format md --out " + o + "/report.md");
  RUN_OK("split --manifest " + o + "/manifest.json --seed 7 --out " + o + "/split.json --balanced-out " + o +
         "/balanced.jsonl --inventory-dir " + o + "/inv");
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& de : fs::recursive_directory_iterator(root))
    if (de.is_regular_file() && de.path().extension() != ".log")
      files[fs::relative(de.path(), root).generic_string()] = read_file(de.path());
  return files;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    pipeline(dir_->path() / "out");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path out() { return dir_->path() / "out"; }
  static TempDir* dir_;
};

TempDir* Pipeline::dir_ = nullptr;

}  // namespace

TEST_F(Pipeline, MetricsCsvMatchesGolden) {
  EXPECT_EQ(read_file(out() / "metrics.csv"), read_file(rvd::test::golden_dir() / "fixture_metrics.csv"));
}

TEST_F(Pipeline, ReportMatchesGolden) {
  EXPECT_EQ(read_file(out() / "report.md"), read_file(rvd::test::golden_dir() / "fixture_report.md"));
}

TEST_F(Pipeline, CweBreakdownMatchesGolden) {
  auto doc = json::parse(read_file(out() / "cwe.json"));
  EXPECT_EQ(doc.at("sast-a"), json::parse(read_file(rvd::test::golden_dir() / "fixture_cwe_sast-a.json")));
  EXPECT_EQ(doc.size(), 9u);
}

TEST_F(Pipeline, OracleRow) {
  auto rows = json::parse(read_file(out() / "metrics.json"));
  const auto& oracle = rows.at(0);
  EXPECT_EQ(oracle.at("approach"), "oracle");
  EXPECT_EQ(oracle.at("s1_d"), "100.0");
  EXPECT_EQ(oracle.at("s2_d"), "100.0");
  EXPECT_EQ(oracle.at("marked_functions"), 18);
  EXPECT_EQ(oracle.at("total_functions"), 73);
}

TEST_F(Pipeline, RunManifestsAreWritten) {
  auto m = json::parse(read_file(out() / "manifest.json.run.json"));
  EXPECT_EQ(m.at("command"), "corpus build");
  EXPECT_EQ(m.at("version"), std::string(rvd::version()));
  EXPECT_TRUE(m.contains("config_hash"));
  auto scan = json::parse(read_file(out() / "reports" / "oracle" / "run_manifest.json"));
  EXPECT_EQ(scan.at("command"), "scan");
  EXPECT_TRUE(fs::exists(out() / "reports" / "oracle" / "rvd.log"));
  auto split = json::parse(read_file(out() / "split.json.run.json"));
  EXPECT_EQ(split.at("seeds").at("split"), 7);
}

TEST_F(Pipeline, SkipsAreRecorded) {
  auto m = json::parse(read_file(out() / "manifest.json.run.json"));
  std::map<std::string, std::string> reasons;
  for (const auto& s : m.at("skipped")) reasons[s.at("cve_id")] = s.at("reason");
  EXPECT_EQ(reasons.at("CVE-2099-2005"), "NON_SOURCE_ONLY");
  EXPECT_EQ(reasons.at("CVE-2099-0901"), "NO_FIX_COMMIT");
}

TEST_F(Pipeline, SplitAndBalancedSet) {
  auto split = json::parse(read_file(out() / "split.json"));
  EXPECT_EQ(split.at("train").size(), 10u);
  EXPECT_EQ(split.at("val").size(), 1u);
  EXPECT_EQ(split.at("test").size(), 1u);
  std::ifstream in(out() / "balanced.jsonl");
  std::string line;
  int ones = 0, zeros = 0;
  while (std::getline(in, line)) (json::parse(line).at("label").get<int>() == 1 ? ones : zeros) += 1;
  EXPECT_GT(ones, 0);
  EXPECT_EQ(ones, zeros);
}

TEST_F(Pipeline, ScanRestrictedToTestPartition) {
  const auto o = out().string();
  RUN_OK("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " +
         fx("detectors/allmark.json") + " --split " + o + "/split.json --partition test --out " + o + "/part");
  auto split = json::parse(read_file(out() / "split.json"));
  std::size_t reports = 0;
  for (const auto& de : fs::directory_iterator(out() / "part"))
    if (de.path().extension() == ".json" && de.path().filename() != "run_manifest.json") ++reports;
  EXPECT_EQ(reports, 1u);
}

TEST_F(Pipeline, ByteIdenticalRerun) {
  const auto first = snapshot_tree(out());
  TempDir again;
  // Same output path, so paths recorded in run manifests agree too.
  fs::rename(out(), again.path() / "saved");
  pipeline(out());
  const auto second = snapshot_tree(out());
  // The partition scan above may or may not have run first.
  auto strip = [](std::map<std::string, std::string> m) {
    std::erase_if(m, [](const auto& kv) { return kv.first.starts_with("part/"); });
    return m;
  };
  EXPECT_EQ(strip(first), strip(second));
  EXPECT_GT(first.size(), 30u);
}

TEST(Cli, TwelveMemberVote) {
  TempDir dir;
  const auto o = dir.path().string();
  RUN_OK("corpus build --records " + fx("records") + " --repos " + fx("repos") + " --diffs " + fx("diffs") +
         " --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv");
  std::string members;
  for (int i = 0; i < 12; ++i) {
    const auto id = "rand" + std::to_string(i);
    write_file(dir / (id + ".json"), R"({"id": ")" + id + R"(", "kind": "random", "config": {"seed": ")" +
                                         std::to_string(100 + i) + R"(", "probability": "0.6"}})");
    RUN_OK("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " + o + "/" + id +
           ".json --out " + o + "/r/" + id);
    members += " " + o + "/r/" + id;
  }
  RUN_OK("combine --reports" + members + " --strategy vote:2/3 --out " + o + "/ens");
  auto rep = json::parse(read_file(dir / "ens" / "CVE-2099-1002.json"));
  EXPECT_EQ(rep.at("detector_id"), "ens:vote:2/3");
  EXPECT_EQ(rep.at("kind"), "ensemble");

  // Each marked id has at least 9 of 12 votes.
  std::map<std::string, int> votes;
  for (int i = 0; i < 12; ++i) {
    const auto member = json::parse(read_file(dir / "r" / ("rand" + std::to_string(i)) / "CVE-2099-1002.json"));
    for (const auto& id : member.at("marked")) votes[id.get<std::string>()] += 1;
  }
  std::set<std::string> want;
  for (const auto& [id, v] : votes)
    if (v >= 9) want.insert(id);
  EXPECT_EQ(rep.at("marked").get<std::set<std::string>>(), want);
}

TEST(Cli, SliceCommand) {
  TempDir dir;
  RUN_OK("slice --repo " + fx("repos/pyhttp__router") + " --out " + (dir / "inv.jsonl").string());
  std::ifstream in(dir / "inv.jsonl");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(json::parse(header).at("n"), 9);
  EXPECT_EQ(json::parse(header).at("snapshot_id"), "pyhttp__router");
}

TEST(Cli, Version) {
  auto r = rvd_cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find(std::string(rvd::version())), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const auto o = dir.path().string();
  // Usage and configuration problems.
  EXPECT_EQ(rvd_cli("").code, 2);
  EXPECT_EQ(rvd_cli("scan --manifest x").code, 2);
  EXPECT_EQ(rvd_cli("split --manifest " + o + "/missing.json --seed 1 --out " + o + "/s.json").code, 2);
  EXPECT_EQ(rvd_cli("eval --manifest a --inventory-dir b --reports c --format xml --out d").code, 2);

  // Bad data.
  write_file(dir / "broken.json", "{\"benchmark_name\": ");
  EXPECT_EQ(rvd_cli("split --manifest " + o + "/broken.json --seed 1 --out " + o + "/s.json").code, 3);
  fs::create_directories(dir / "records");
  fs::create_directories(dir / "repos");
  fs::create_directories(dir / "diffs");
  EXPECT_EQ(rvd_cli("corpus build --records " + o + "/records --repos " + o + "/repos --diffs " + o +
                    "/diffs --manifest " + o + "/m.json --inventory-dir " + o + "/inv")
                .code,
            3);

  // Detector failures.
  RUN_OK("corpus build --records " + fx("records") + " --repos " + fx("repos") + " --diffs " + fx("diffs") +
         " --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv");
  RUN_OK("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " +
         fx("detectors/null.json") + " --out " + o + "/null");
  EXPECT_EQ(rvd_cli("combine --reports " + o + "/null " + o + "/null --strategy vote:3/2 --out " + o + "/c").code, 2);

  write_file(dir / "fail.json", R"({"id": "fail", "kind": "sast", "config": {"command": "exit 9"}})");
  auto failed = rvd_cli("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " + o +
                        "/fail.json --repos " + fx("repos") + " --out " + o + "/f");
  EXPECT_EQ(failed.code, 4) << failed.output;
  write_file(dir / "dead.json",
             R"({"id": "dead", "kind": "llm", "config": {"endpoint": "http://127.0.0.1:9", "retries": "0"}})");
  auto dead = rvd_cli("scan --manifest " + o + "/manifest.json --inventory-dir " + o + "/inv --detector " + o +
                      "/dead.json --out " + o + "/d");
  EXPECT_EQ(dead.code, 4) << dead.output;
  bool partial = false;
  for (const auto& de : fs::directory_iterator(dir / "d"))
    partial = partial || de.path().string().ends_with(".partial.json");
  EXPECT_TRUE(partial);
}
