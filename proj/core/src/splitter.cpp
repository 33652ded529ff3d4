#include "rvd/splitter.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

namespace rvd {

using nlohmann::json;

std::uint64_t SeededShuffler::below(std::uint64_t bound) {
  // Reject the top sliver so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

SplitRatios SplitRatios::parse(std::string_view text) {
  SplitRatios r;
  unsigned* parts[] = {&r.train, &r.val, &r.test};
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    auto colon = text.find(':', pos);
    if ((i < 2) != (colon != std::string_view::npos))
      throw ConfigError("ratios must look like a:b:c, got '" + std::string(text) + "'");
    auto piece = text.substr(pos, (i < 2 ? colon : text.size()) - pos);
    auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), *parts[i]);
    if (ec != std::errc{} || ptr != piece.data() + piece.size() || piece.empty())
      throw ConfigError("ratios must be non-negative integers, got '" + std::string(text) + "'");
    pos = colon + 1;
  }
  if (r.sum() == 0) throw ConfigError("ratios must not all be zero");
  return r;
}

std::string SplitRatios::str() const {
  return std::to_string(train) + ":" + std::to_string(val) + ":" + std::to_string(test);
}

SplitResult split_ids(std::vector<std::string> ids, const SplitSpec& spec) {
  const auto& r = spec.ratios;
  if (r.sum() == 0) throw ConfigError("ratios must not all be zero");
  const std::size_t n = ids.size();
  const std::size_t nonzero = (r.train > 0) + (r.val > 0) + (r.test > 0);
  if (n < nonzero)
    throw DataError("cannot split " + std::to_string(n) + " CVEs into " +
                    std::to_string(nonzero) + " non-empty partitions");

  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw DataError("duplicate cve_id in split input");
  SeededShuffler(spec.seed).shuffle(ids);

  const std::size_t val = spec.val_count.value_or(n * r.val / r.sum());
  const std::size_t test = spec.test_count.value_or(n * r.test / r.sum());
  if (val + test > n)
    throw ConfigError("val + test counts exceed the " + std::to_string(n) + " available CVEs");
  const std::size_t train = n - val - test;

  SplitResult out;
  out.seed = spec.seed;
  out.ratios = r;
  auto first = ids.begin();
  out.train.assign(first, first + static_cast<std::ptrdiff_t>(train));
  out.val.assign(first + static_cast<std::ptrdiff_t>(train),
                 first + static_cast<std::ptrdiff_t>(train + val));
  out.test.assign(first + static_cast<std::ptrdiff_t>(train + val), ids.end());
  for (auto* part : {&out.train, &out.val, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

SplitResult split(const CorpusManifest& manifest, const SplitSpec& spec) {
  std::vector<std::string> ids;
  ids.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) ids.push_back(e.cve_id);
  return split_ids(std::move(ids), spec);
}

std::string SplitResult::to_json() const {
  json doc = {{"seed", seed},
              {"ratios", {ratios.train, ratios.val, ratios.test}},
              {"train", train},
              {"val", val},
              {"test", test}};
  return doc.dump(2) + "\n";
}

SplitResult SplitResult::from_json(std::string_view text) {
  try {
    auto doc = json::parse(text);
    SplitResult r;
    r.seed = doc.at("seed").get<std::uint64_t>();
    const auto& ratios = doc.at("ratios");
    r.ratios = {ratios.at(0).get<unsigned>(), ratios.at(1).get<unsigned>(),
                ratios.at(2).get<unsigned>()};
    r.train = doc.at("train").get<std::vector<std::string>>();
    r.val = doc.at("val").get<std::vector<std::string>>();
    r.test = doc.at("test").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

BalancedSet balanced_training_set(const CorpusManifest& manifest,
                                  const std::map<std::string, FunctionInventory>& inventories,
                                  const std::vector<std::string>& train_ids, std::uint64_t seed) {
  // Vulnerable ids per snapshot over the whole manifest: a function labeled
  // by any CVE of its repo never enters the clean pool.
  std::map<std::string, FunctionIdSet> labeled;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    auto& set = labeled[manifest.entries[i].snapshot_ref];
    const auto& fs = manifest.ground_truth[i].vulnerable_functions;
    set.insert(fs.begin(), fs.end());
  }

  std::set<std::string> train_snapshots;
  std::set<std::pair<std::string, FunctionId>> vulnerable;
  for (const auto& id : train_ids) {
    const auto& entry = manifest.entry(id);
    train_snapshots.insert(entry.snapshot_ref);
    for (const auto& f : manifest.truth(id).vulnerable_functions)
      vulnerable.emplace(entry.snapshot_ref, f);
  }

  auto inventory_of = [&](const std::string& snap) -> const FunctionInventory& {
    auto it = inventories.find(snap);
    if (it == inventories.end()) throw DataError("no inventory for training snapshot '" + snap + "'");
    return it->second;
  };

  BalancedSet out;
  for (const auto& [snap, id] : vulnerable) {
    const auto& inv = inventory_of(snap);
    auto it = std::find_if(inv.functions.begin(), inv.functions.end(),
                           [&](const FunctionRecord& r) { return r.id == id; });
    if (it == inv.functions.end())
      throw DataError("vulnerable function '" + id.str() + "' missing from inventory '" + snap + "'");
    out.items.push_back({snap, *it, 1});
  }
  if (out.items.empty()) {
    out.warnings.push_back("training repositories hold no vulnerable functions");
    return out;
  }

  std::vector<std::pair<std::string, const FunctionRecord*>> pool;
  for (const auto& snap : train_snapshots) {
    const auto& inv = inventory_of(snap);
    const auto& bad = labeled[snap];
    for (const auto& f : inv.functions)
      if (!bad.contains(f.id)) pool.emplace_back(snap, &f);
  }
  const std::size_t k = out.items.size();
  if (pool.size() < k)
    throw DataError("only " + std::to_string(pool.size()) + " non-vulnerable functions for " +
                    std::to_string(k) + " vulnerable ones");

  SeededShuffler rng(seed);
  // Partial Fisher-Yates: the first k slots become a uniform sample.
  for (std::size_t i = 0; i < k; ++i) {
    auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.items.push_back({pool[i].first, *pool[i].second, 0});
  }
  rng.shuffle(out.items);
  return out;
}

std::string balanced_set_to_jsonl(const std::vector<LabeledFunction>& items) {
  std::string out;
  for (const auto& it : items) {
    out += json{{"function_id", it.record.id.str()}, {"body", it.record.body}, {"label", it.label}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledFunction> balanced_set_from_jsonl(std::string_view text) {
  std::vector<LabeledFunction> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
    ++lineno;
    if (line.empty()) continue;
    try {
      auto doc = json::parse(line);
      LabeledFunction f;
      f.record.id = FunctionId::parse(doc.at("function_id").get<std::string>());
      f.record.body = doc.at("body").get<std::string>();
      f.label = doc.at("label").get<int>();
      if (f.label != 0 && f.label != 1) throw DataError("label must be 0 or 1");
      out.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw DataError("balanced set line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rvd
