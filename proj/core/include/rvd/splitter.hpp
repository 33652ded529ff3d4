#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rvd/corpus.hpp"
#include "rvd/function.hpp"

namespace rvd {

/// Seeded Fisher-Yates on mt19937_64 with a rejection-sampled bounded draw,
/// so results do not depend on the standard library's distributions.
class SeededShuffler {
 public:
  explicit SeededShuffler(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

struct SplitRatios {
  unsigned train = 8;
  unsigned val = 1;
  unsigned test = 1;

  unsigned sum() const { return train + val + test; }
  static SplitRatios parse(std::string_view text);  // "a:b:c"
  std::string str() const;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  // Explicit partition sizes when the floor rule does not match a target.
  std::optional<std::size_t> val_count;
  std::optional<std::size_t> test_count;
};

struct SplitResult {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<std::string> train, val, test;  // each sorted

  std::string to_json() const;
  static SplitResult from_json(std::string_view text);
};

/// val = floor(N*v/sum), test = floor(N*t/sum), remainder to train.
SplitResult split(const CorpusManifest& manifest, const SplitSpec& spec);
SplitResult split_ids(std::vector<std::string> cve_ids, const SplitSpec& spec);

struct LabeledFunction {
  std::string snapshot_id;
  FunctionRecord record;
  int label = 0;  // 1 vulnerable, 0 clean
};

struct BalancedSet {
  std::vector<LabeledFunction> items;
  std::vector<std::string> warnings;
};

/// All vulnerable functions of the training repos plus an equally sized
/// seeded sample of their non-vulnerable functions, shuffled.
BalancedSet balanced_training_set(
    const CorpusManifest& manifest,
    const std::map<std::string, FunctionInventory>& inventories,
    const std::vector<std::string>& train_ids, std::uint64_t seed);

/// JSON lines of {function_id, body, label}.
std::string balanced_set_to_jsonl(const std::vector<LabeledFunction>& items);
std::vector<LabeledFunction> balanced_set_from_jsonl(std::string_view text);

}  // namespace rvd
