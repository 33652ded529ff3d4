#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixture.hpp"
#include "oracles.hpp"
#include "rvd/ensemble.hpp"
#include "rvd/evaluation.hpp"
#include "rvd/slicer.hpp"
#include "rvd/splitter.hpp"

namespace rvd::test {

namespace {

using Rng = std::mt19937_64;

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

class Checker {
 public:
  Checker(PropertyOutcome& out, std::size_t case_no) : out_(out), case_no_(case_no) {}

  void operator()(bool ok, const std::string& property, const std::string& detail = {}) {
    if (ok) {
      ++out_.checks[property];
      return;
    }
    if (out_.failures.size() < 20)
      out_.failures.push_back("case " + std::to_string(case_no_) + ": " + property +
                              (detail.empty() ? "" : " (" + detail + ")"));
  }

 private:
  PropertyOutcome& out_;
  std::size_t case_no_;
};

std::string pad(int i) {
  auto s = std::to_string(i);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

struct RandomCorpus {
  TestSet test_set;
  std::vector<std::string> snapshots;
  std::map<std::string, std::vector<FunctionId>> functions;
};

RandomCorpus random_corpus(Rng& rng) {
  RandomCorpus c;
  c.test_set.benchmark = "random";
  const int n_snap = uniform(rng, 1, 8);
  int budget = 1000;
  for (int s = 0; s < n_snap; ++s) {
    const auto snap = "snap" + std::to_string(s);
    const int n = uniform(rng, 1, std::max(1, std::min(150, budget - (n_snap - s - 1))));
    budget -= n;
    auto& fns = c.functions[snap];
    for (int j = 0; j < n; ++j)
      fns.push_back(make_id("f" + std::to_string(j % 3) + ".c", "fn" + std::to_string(j),
                            10 * j + 1, 10 * j + 5));
    std::sort(fns.begin(), fns.end());
    c.snapshots.push_back(snap);
    c.test_set.inventory_sizes[snap] = static_cast<std::size_t>(n);
  }
  const int n_cve = uniform(rng, 1, 50);
  for (int i = 0; i < n_cve; ++i) {
    CveEntry e;
    e.cve_id = "CVE-R-" + pad(i);
    e.snapshot_ref = c.snapshots[static_cast<std::size_t>(uniform(rng, 0, n_snap - 1))];
    e.cwe_id = "CWE-" + std::to_string(uniform(rng, 1, 4));
    const auto& fns = c.functions[e.snapshot_ref];
    GroundTruth t{e.cve_id, {}};
    const int k = uniform(rng, 1, std::min<int>(5, static_cast<int>(fns.size())));
    while (static_cast<int>(t.vulnerable_functions.size()) < k)
      t.vulnerable_functions.insert(fns[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(fns.size()) - 1))]);
    c.test_set.truths.emplace(e.cve_id, std::move(t));
    c.test_set.entries.push_back(std::move(e));
  }
  return c;
}

DetectorReport random_report(Rng& rng, const std::string& detector, const std::string& snap,
                             const std::vector<FunctionId>& fns, double density) {
  DetectorReport r;
  r.detector_id = detector;
  r.snapshot_id = snap;
  r.kind = DetectorKind::LlmClient;
  r.prediction_count = fns.size();
  for (const auto& f : fns)
    if (coin(rng, density)) r.marked.insert(f);
  return r;
}

bool subset(const FunctionIdSet& a, const FunctionIdSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void detection_properties(Rng& rng, Checker& check) {
  std::vector<FunctionId> fns;
  const int n = uniform(rng, 1, 30);
  for (int j = 0; j < n; ++j) fns.push_back(make_id("a.c", "g" + std::to_string(j), j * 3 + 1, j * 3 + 2));
  for (int rep = 0; rep < 5; ++rep) {
    GroundTruth truth{"CVE-X", {}};
    for (const auto& f : fns)
      if (coin(rng, 0.2)) truth.vulnerable_functions.insert(f);
    if (truth.vulnerable_functions.empty()) truth.vulnerable_functions.insert(fns.front());
    FunctionIdSet marked;
    for (const auto& f : fns)
      if (coin(rng, 0.5)) marked.insert(f);

    const bool s1 = is_detected(truth, marked, Scenario::S1);
    const bool s2 = is_detected(truth, marked, Scenario::S2);
    check(!s2 || s1, "S2 implies S1");
    std::size_t hit = 0;
    for (const auto& f : truth.vulnerable_functions) hit += marked.count(f);
    check(s1 == (hit > 0) && s2 == (hit == truth.vulnerable_functions.size()),
          "is_detected matches definition");

    auto more = marked;
    for (const auto& f : fns)
      if (coin(rng, 0.3)) more.insert(f);
    check((!s1 || is_detected(truth, more, Scenario::S1)) &&
              (!s2 || is_detected(truth, more, Scenario::S2)),
          "marked monotonicity");
  }
}

void metrics_properties(Rng& rng, const RandomCorpus& c, Checker& check) {
  std::vector<DetectorReport> reports;
  const double density = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (const auto& s : c.snapshots) reports.push_back(random_report(rng, "d", s, c.functions.at(s), density));
  const auto row = compute_metrics("d", c.test_set, reports);
  const auto want = recount(c.test_set, reports);
  check(row.detected_s1 == want.s1 && row.detected_s2 == want.s2 &&
            row.total_vulns == want.vulns && row.marked_functions == want.marked &&
            row.total_functions == want.total,
        "metrics equal brute recount");
  auto close = [](Percent p, std::int64_t num, std::int64_t den) {
    return std::abs(p.value() - 100.0 * static_cast<double>(num) / static_cast<double>(den)) <= 0.05 + 1e-9 &&
           p.tenths == brute_tenths(num, den);
  };
  check(close(row.s1_detection, want.s1, want.vulns) && close(row.s2_detection, want.s2, want.vulns) &&
            close(row.marked, want.marked, want.total),
        "percent within 0.05 of exact value");
}

void ensemble_properties(Rng& rng, const RandomCorpus& c, Checker& check) {
  const int k = uniform(rng, 2, 7);
  std::vector<std::string> members;
  for (int m = 0; m < k; ++m) members.push_back("m" + std::to_string(m));

  std::vector<std::vector<DetectorReport>> per_member(static_cast<std::size_t>(k));
  std::vector<DetectorReport> unions;
  for (const auto& s : c.snapshots) {
    std::vector<DetectorReport> snap_reports;
    for (int m = 0; m < k; ++m) {
      const double density = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
      snap_reports.push_back(random_report(rng, members[static_cast<std::size_t>(m)], s, c.functions.at(s), density));
      per_member[static_cast<std::size_t>(m)].push_back(snap_reports.back());
    }

    const auto uni = combine(EnsembleSpec::from_strategy("union", members), snap_reports);
    bool dominates = true;
    std::size_t max_marked = 0;
    for (const auto& r : snap_reports) {
      dominates = dominates && subset(r.marked, uni.marked);
      max_marked = std::max(max_marked, r.marked.size());
    }
    check(dominates && uni.marked.size() >= max_marked, "union dominance (marked)");

    std::vector<Rational> thetas;
    for (int t = 0; t < 3; ++t) {
      const int den = uniform(rng, 2, 12);
      thetas.push_back(Rational::make(uniform(rng, 1, den - 1), den));
    }
    std::sort(thetas.begin(), thetas.end());
    const auto swept = sweep_thresholds(snap_reports, thetas);
    bool nested = true;
    bool brute = true;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      brute = brute && swept[t].marked == vote_recount(snap_reports, thetas[t].num, thetas[t].den);
      if (t > 0) nested = nested && subset(swept[t].marked, swept[t - 1].marked);
    }
    check(nested, "vote anti-monotonic in theta");
    check(brute, "vote equals brute recount");

    const auto tiny = combine(EnsembleSpec::from_strategy("vote:1/" + std::to_string(2 * k), members), snap_reports);
    check(tiny.marked == uni.marked, "vote with tiny theta equals union");

    FunctionIdSet inter = snap_reports.front().marked;
    for (const auto& r : snap_reports) {
      FunctionIdSet next;
      std::set_intersection(inter.begin(), inter.end(), r.marked.begin(), r.marked.end(),
                            std::inserter(next, next.end()));
      inter = std::move(next);
    }
    const auto top = combine(
        EnsembleSpec::from_strategy("vote:" + std::to_string(k - 1) + "/" + std::to_string(k), members),
        snap_reports);
    check(top.marked == inter, "vote at (K-1)/K equals intersection");

    auto shuffled = snap_reports;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto spec = EnsembleSpec::from_strategy("vote:" + thetas[0].str(), members);
    check(combine(spec, shuffled).marked == combine(spec, snap_reports).marked &&
              combine(EnsembleSpec::from_strategy("union", members), shuffled).marked == uni.marked,
          "combine permutation invariant");
    unions.push_back(uni);
  }

  const auto u = compute_metrics("u", c.test_set, unions);
  bool dominates = true;
  for (std::size_t m = 0; m < per_member.size(); ++m) {
    const auto r = compute_metrics(members[m], c.test_set, per_member[m]);
    dominates = dominates && u.detected_s1 >= r.detected_s1 && u.detected_s2 >= r.detected_s2 &&
                u.marked_functions >= r.marked_functions;
  }
  check(dominates, "union dominance (detection)");
}

void split_properties(Rng& rng, Checker& check) {
  const int n = uniform(rng, 3, 500);
  SplitSpec spec;
  spec.seed = rng();
  do {
    spec.ratios = {static_cast<unsigned>(uniform(rng, 0, 9)), static_cast<unsigned>(uniform(rng, 0, 3)),
                   static_cast<unsigned>(uniform(rng, 0, 3))};
  } while (spec.ratios.sum() == 0);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("CVE-" + pad(i));
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto a = split_ids(ids, spec);
  const auto b = split_ids(ids, spec);
  check(a.to_json() == b.to_json(), "split deterministic");

  std::multiset<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  const std::set<std::string> distinct(all.begin(), all.end());
  check(all.size() == distinct.size(), "split partitions disjoint");
  check(distinct == std::set<std::string>(ids.begin(), ids.end()), "split covers every id");

  const auto sum = static_cast<std::size_t>(spec.ratios.sum());
  const auto size = static_cast<std::size_t>(n);
  check(a.val.size() == size * spec.ratios.val / sum && a.test.size() == size * spec.ratios.test / sum,
        "split sizes follow floor rule");
}

void balanced_properties(Rng& rng, Checker& check) {
  CorpusManifest manifest;
  manifest.benchmark_name = "random";
  std::map<std::string, FunctionInventory> inventories;
  const int n_snap = uniform(rng, 1, 5);
  for (int s = 0; s < n_snap; ++s) {
    FunctionInventory inv;
    inv.snapshot_id = "snap" + std::to_string(s);
    const int n = uniform(rng, 6, 40);
    for (int j = 0; j < n; ++j) {
      FunctionRecord rec;
      rec.id = make_id("m.py", "h" + std::to_string(j), 5 * j + 1, 5 * j + 3);
      rec.language = Language::Python;
      rec.body = "def h" + std::to_string(j) + "():\n    pass\n";
      inv.functions.push_back(std::move(rec));
    }
    std::sort(inv.functions.begin(), inv.functions.end(),
              [](const FunctionRecord& x, const FunctionRecord& y) { return x.id < y.id; });
    inventories.emplace(inv.snapshot_id, std::move(inv));
  }
  const int n_cve = uniform(rng, 1, 8);
  for (int i = 0; i < n_cve; ++i) {
    CveEntry e;
    e.cve_id = "CVE-B-" + pad(i);
    e.snapshot_ref = "snap" + std::to_string(uniform(rng, 0, n_snap - 1));
    e.language = Language::Python;
    e.cwe_id = "UNKNOWN";
    const auto& fns = inventories.at(e.snapshot_ref).functions;
    // Labels come from the first third only, so the clean pool always suffices.
    const int third = std::max<int>(1, static_cast<int>(fns.size()) / 3);
    GroundTruth t{e.cve_id, {}};
    const int k = uniform(rng, 1, std::min(3, third));
    while (static_cast<int>(t.vulnerable_functions.size()) < k)
      t.vulnerable_functions.insert(fns[static_cast<std::size_t>(uniform(rng, 0, third - 1))].id);
    manifest.entries.push_back(e);
    manifest.ground_truth.push_back(std::move(t));
  }
  std::vector<std::string> train;
  for (const auto& e : manifest.entries)
    if (coin(rng, 0.7)) train.push_back(e.cve_id);
  if (train.empty()) train.push_back(manifest.entries.front().cve_id);

  const auto seed = rng();
  const auto set = balanced_training_set(manifest, inventories, train, seed);
  std::set<std::pair<std::string, FunctionId>> want_vuln;
  std::map<std::string, FunctionIdSet> labeled;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    for (const auto& f : manifest.ground_truth[i].vulnerable_functions)
      labeled[manifest.entries[i].snapshot_ref].insert(f);
  for (const auto& id : train)
    for (const auto& f : manifest.truth(id).vulnerable_functions)
      want_vuln.emplace(manifest.entry(id).snapshot_ref, f);

  std::set<std::pair<std::string, FunctionId>> got_vuln, got_clean;
  bool clean_ok = true;
  for (const auto& item : set.items) {
    if (item.label == 1) {
      got_vuln.emplace(item.snapshot_id, item.record.id);
    } else {
      clean_ok = clean_ok && !labeled[item.snapshot_id].contains(item.record.id);
      got_clean.emplace(item.snapshot_id, item.record.id);
    }
  }
  const auto ones = static_cast<std::size_t>(
      std::count_if(set.items.begin(), set.items.end(), [](const LabeledFunction& f) { return f.label == 1; }));
  check(ones * 2 == set.items.size() && got_vuln == want_vuln && got_clean.size() == ones,
        "balanced set label parity");
  check(clean_ok, "balanced set clean items unlabeled");
  check(balanced_set_to_jsonl(balanced_training_set(manifest, inventories, train, seed).items) ==
            balanced_set_to_jsonl(set.items),
        "balanced set deterministic");
}

void rank_properties(Rng& rng, Checker& check) {
  const int n = uniform(rng, 2, 12);
  std::vector<MetricsRow> rows;
  for (int i = 0; i < n; ++i) {
    MetricsRow r;
    r.approach_id = "a" + std::to_string(i);
    r.benchmark = "b";
    // Few distinct values so ties are common.
    r.s2_detection.tenths = 125 * uniform(rng, 0, 8);
    r.marked.tenths = uniform(rng, 0, 6) * 37;
    rows.push_back(r);
  }
  const auto got = rank_approaches(rows);
  const auto want = brute_rank(rows);
  bool same = got.size() == want.size();
  for (std::size_t i = 0; same && i < got.size(); ++i)
    same = got[i].approach_id == want[i].id && got[i].s2_rank == want[i].s2 &&
           got[i].marked_rank == want[i].marked && got[i].total_rank == want[i].total;
  check(same, "ranking equals brute ranking");

  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto again = rank_approaches(shuffled);
  bool inv = again.size() == got.size();
  for (std::size_t i = 0; inv && i < got.size(); ++i)
    inv = again[i].approach_id == got[i].approach_id && again[i].total_rank == got[i].total_rank;
  check(inv, "ranking permutation invariant");
}

// Nested spans inside [lo, hi], each strictly inside its parent.
void laminar(Rng& rng, int lo, int hi, int depth, std::vector<FunctionId>& out) {
  int pos = lo;
  while (pos < hi && depth < 4) {
    const int start = pos + uniform(rng, 0, 3);
    const int end = std::min(hi, start + uniform(rng, 0, 25));
    if (start > end) break;
    out.push_back(make_id("n.py", "q" + std::to_string(out.size()), start, end));
    if (end - start >= 2) laminar(rng, start + 1, end - 1, depth + 1, out);
    pos = end + 1;
  }
}

void locate_properties(Rng& rng, Checker& check) {
  std::vector<FunctionId> ids;
  laminar(rng, 1, 120, 0, ids);
  FunctionInventory inv;
  inv.snapshot_id = "s";
  for (const auto& id : ids) inv.functions.push_back({id, Language::Python, "", 0, 0});
  std::sort(inv.functions.begin(), inv.functions.end(),
            [](const FunctionRecord& x, const FunctionRecord& y) { return x.id < y.id; });
  bool ok_locate = true;
  bool ok_enclosing = true;
  for (int line = 0; line <= 125; ++line) {
    std::vector<FunctionId> holding;
    for (const auto& id : ids)
      if (id.start_line <= line && line <= id.end_line) holding.push_back(id);
    std::sort(holding.begin(), holding.end(),
              [](const FunctionId& a, const FunctionId& b) { return a.span_length() > b.span_length(); });
    const auto got = locate(inv, "n.py", line);
    ok_locate = ok_locate && (holding.empty() ? !got : (got && *got == holding.back()));
    ok_enclosing = ok_enclosing && enclosing(inv, "n.py", line) == holding;
  }
  check(ok_locate && !locate(inv, "other.py", 5), "locate returns innermost");
  check(ok_enclosing, "enclosing lists outermost first");
}

}  // namespace

PropertyOutcome run_property_suite(std::uint64_t seed, std::size_t cases) {
  PropertyOutcome out;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(seed + i);
    Checker check(out, i);
    try {
      detection_properties(rng, check);
      const auto corpus = random_corpus(rng);
      metrics_properties(rng, corpus, check);
      ensemble_properties(rng, corpus, check);
      split_properties(rng, check);
      balanced_properties(rng, check);
      rank_properties(rng, check);
      locate_properties(rng, check);
    } catch (const std::exception& e) {
      check(false, "no exception", e.what());
    }
    ++out.cases;
  }
  return out;
}

}  // namespace rvd::test
