#include <gtest/gtest.h>

#include "fixture.hpp"
#include "rvd/splitter.hpp"

using namespace rvd;

namespace {

std::vector<std::string> cves(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("CVE-2021-" + std::to_string(10000 + i));
  return ids;
}

struct Sizes {
  std::size_t train, val, test;
  bool operator==(const Sizes&) const = default;
};

Sizes sizes(const SplitResult& r) { return {r.train.size(), r.val.size(), r.test.size()}; }

// `n_snap` snapshots of 10 functions; CVE i labels functions 0 and 1 of
// snapshot i % n_snap (so CVEs sharing a snapshot share labels).
struct Toy {
  CorpusManifest manifest;
  std::map<std::string, FunctionInventory> inventories;
};

Toy toy(int n_cve, int n_snap, int vuln_per_cve = 2) {
  Toy t;
  t.manifest.benchmark_name = "toy";
  for (int s = 0; s < n_snap; ++s) {
    FunctionInventory inv{"s" + std::to_string(s), {}};
    for (int j = 0; j < 10; ++j) {
      FunctionRecord r;
      r.id = rvd::test::make_id("x.c", "fn" + std::to_string(j), j * 5 + 1, j * 5 + 4);
      r.body = "int fn" + std::to_string(j) + "(void) { return 0; }";
      inv.functions.push_back(r);
    }
    std::sort(inv.functions.begin(), inv.functions.end(),
              [](const FunctionRecord& a, const FunctionRecord& b) { return a.id < b.id; });
    t.inventories.emplace(inv.snapshot_id, std::move(inv));
  }
  for (int i = 0; i < n_cve; ++i) {
    const auto id = "CVE-" + std::to_string(100 + i);
    const auto snap = "s" + std::to_string(i % n_snap);
    t.manifest.entries.push_back({id, "CWE-1", "o/r", snap, Language::C});
    GroundTruth g{id, {}};
    for (int j = 0; j < vuln_per_cve; ++j)
      g.vulnerable_functions.insert(t.inventories.at(snap).functions[static_cast<std::size_t>(j)].id);
    t.manifest.ground_truth.push_back(std::move(g));
  }
  return t;
}

}  // namespace

TEST(Split, TenEightOneOne) {
  EXPECT_EQ(sizes(split_ids(cves(10), {1, {8, 1, 1}, {}, {}})), (Sizes{8, 1, 1}));
}

TEST(Split, EightySevenUsesFloorRule) {
  EXPECT_EQ(sizes(split_ids(cves(87), {1, {8, 1, 1}, {}, {}})), (Sizes{71, 8, 8}));
}

TEST(Split, SameSeedSameResult) {
  auto a = split_ids(cves(50), {42, {8, 1, 1}, {}, {}});
  auto b = split_ids(cves(50), {42, {8, 1, 1}, {}, {}});
  EXPECT_EQ(a.to_json(), b.to_json());
  auto c = split_ids(cves(50), {43, {8, 1, 1}, {}, {}});
  EXPECT_NE(a.to_json(), c.to_json());
}

TEST(Split, InputOrderDoesNotMatter) {
  auto ids = cves(30);
  auto a = split_ids(ids, {5, {8, 1, 1}, {}, {}});
  std::reverse(ids.begin(), ids.end());
  EXPECT_EQ(a.to_json(), split_ids(ids, {5, {8, 1, 1}, {}, {}}).to_json());
}

TEST(Split, Errors) {
  EXPECT_THROW(split_ids(cves(2), {1, {8, 1, 1}, {}, {}}), DataError);
  EXPECT_NO_THROW(split_ids(cves(2), {1, {1, 0, 1}, {}, {}}));
  EXPECT_THROW(split_ids({"A", "A", "B"}, {1, {1, 1, 1}, {}, {}}), DataError);
  EXPECT_THROW(split_ids(cves(5), {1, {8, 1, 1}, 3, 3}), ConfigError);
}

TEST(Split, ExplicitCounts) {
  EXPECT_EQ(sizes(split_ids(cves(20), {1, {8, 1, 1}, 3, 4})), (Sizes{13, 3, 4}));
}

TEST(Split, RatioParsing) {
  auto r = SplitRatios::parse("7:2:1");
  EXPECT_EQ(r.train, 7u);
  EXPECT_EQ(r.str(), "7:2:1");
  for (const char* bad : {"8:1", "8:1:1:1", "a:1:1", "0:0:0", "-1:1:1", "8::1"})
    EXPECT_THROW(SplitRatios::parse(bad), ConfigError) << bad;
}

TEST(Split, JsonRoundTrip) {
  auto a = split_ids(cves(12), {9, {8, 1, 1}, {}, {}});
  EXPECT_EQ(SplitResult::from_json(a.to_json()).to_json(), a.to_json());
  EXPECT_THROW(SplitResult::from_json("{}"), DataError);
}

TEST(Split, ManifestSplit) {
  auto corpus = rvd::test::build_fixture_corpus();
  auto r = split(corpus.manifest, {3, {8, 1, 1}, {}, {}});
  EXPECT_EQ(sizes(r), (Sizes{10, 1, 1}));
}

TEST(Balanced, FourteenVulnerableGiveTwentyEight) {
  auto t = toy(7, 7);
  std::vector<std::string> train;
  for (const auto& e : t.manifest.entries) train.push_back(e.cve_id);
  auto set = balanced_training_set(t.manifest, t.inventories, train, 11);
  ASSERT_EQ(set.items.size(), 28u);
  EXPECT_EQ(std::count_if(set.items.begin(), set.items.end(), [](const auto& f) { return f.label == 1; }), 14);
  EXPECT_TRUE(set.warnings.empty());
}

TEST(Balanced, NoVulnerableFunctions) {
  auto t = toy(2, 2, 0);
  auto set = balanced_training_set(t.manifest, t.inventories, {"CVE-100"}, 1);
  EXPECT_TRUE(set.items.empty());
  EXPECT_EQ(set.warnings.size(), 1u);
}

TEST(Balanced, DeterministicSerialization) {
  auto t = toy(6, 3);
  std::vector<std::string> train = {"CVE-100", "CVE-101", "CVE-104"};
  auto a = balanced_set_to_jsonl(balanced_training_set(t.manifest, t.inventories, train, 5).items);
  auto b = balanced_set_to_jsonl(balanced_training_set(t.manifest, t.inventories, train, 5).items);
  EXPECT_EQ(a, b);
  auto back = balanced_set_from_jsonl(a);
  EXPECT_EQ(balanced_set_to_jsonl(back), a);
}

TEST(Balanced, LabeledFunctionsNeverCountAsClean) {
  // CVE-101 (not in train) labels functions of the same snapshot as CVE-100.
  auto t = toy(2, 1);
  t.manifest.ground_truth[1].vulnerable_functions.insert(t.inventories.at("s0").functions[5].id);
  auto set = balanced_training_set(t.manifest, t.inventories, {"CVE-100"}, 3);
  for (const auto& item : set.items)
    if (item.label == 0) EXPECT_NE(item.record.id, t.inventories.at("s0").functions[5].id);
}

TEST(Balanced, PoolTooSmall) {
  auto t = toy(1, 1, 6);
  EXPECT_THROW(balanced_training_set(t.manifest, t.inventories, {"CVE-100"}, 1), DataError);
}

TEST(Balanced, MalformedJsonl) {
  EXPECT_THROW(balanced_set_from_jsonl("{\"function_id\": \"a#b#1-2#0123abcd\", \"body\": \"\", \"label\": 2}\n"),
               DataError);
  EXPECT_THROW(balanced_set_from_jsonl("nope\n"), DataError);
}
