#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvd/detectors.hpp"
#include "rvd/rational.hpp"

namespace rvd {

enum class Strategy { Union, Vote };

struct EnsembleSpec {
  Strategy strategy = Strategy::Union;
  std::optional<Rational> theta;  // Vote only, 0 < theta < 1
  std::vector<std::string> member_ids;

  void validate() const;
  /// "ens:union" or "ens:vote:2/3".
  std::string output_id() const;

  /// "union" or "vote:<fraction>".
  static EnsembleSpec from_strategy(std::string_view text,
                                    std::vector<std::string> members);
  static EnsembleSpec from_json(std::string_view text);
  std::string to_json() const;
};

/// Smallest vote count that is strictly greater than theta * k.
std::size_t required_votes(const Rational& theta, std::size_t k);

DetectorReport combine(const EnsembleSpec& spec,
                       std::span<const DetectorReport> reports);

/// One Vote report per theta from a single shared vote count.
std::vector<DetectorReport> sweep_thresholds(
    std::span<const DetectorReport> member_reports,
    const std::vector<Rational>& thetas);

}  // namespace rvd
