#include "rvd/ensemble.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

namespace rvd {

using nlohmann::json;

void EnsembleSpec::validate() const {
  if (member_ids.empty()) throw ConfigError("ensemble needs at least one member");
  std::set<std::string> unique(member_ids.begin(), member_ids.end());
  if (unique.size() != member_ids.size()) throw ConfigError("ensemble members must be distinct");
  if (strategy == Strategy::Vote) {
    if (!theta) throw ConfigError("vote strategy needs a threshold");
    if (!(Rational{0, 1} < *theta) || !(*theta < Rational{1, 1}))
      throw ConfigError("vote threshold must lie strictly between 0 and 1, got " + theta->str());
    if (member_ids.size() < 2) throw ConfigError("vote strategy needs at least 2 members");
  }
}

std::string EnsembleSpec::output_id() const {
  return strategy == Strategy::Union ? "ens:union" : "ens:vote:" + theta->str();
}

EnsembleSpec EnsembleSpec::from_strategy(std::string_view text, std::vector<std::string> members) {
  EnsembleSpec spec;
  spec.member_ids = std::move(members);
  if (text == "union") {
    spec.strategy = Strategy::Union;
  } else if (text.starts_with("vote:")) {
    spec.strategy = Strategy::Vote;
    spec.theta = Rational::parse(text.substr(5));
  } else {
    throw ConfigError("strategy must be 'union' or 'vote:<fraction>', got '" + std::string(text) + "'");
  }
  spec.validate();
  return spec;
}

EnsembleSpec EnsembleSpec::from_json(std::string_view text) {
  try {
    auto doc = json::parse(text);
    auto strategy = doc.at("strategy").get<std::string>();
    auto members = doc.at("members").get<std::vector<std::string>>();
    if (strategy == "vote") {
      if (!doc.contains("theta")) throw ConfigError("vote strategy needs a theta");
      const auto& t = doc.at("theta");
      strategy += ":" + (t.is_string() ? t.get<std::string>() : t.dump());
    }
    return from_strategy(strategy, std::move(members));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ensemble spec: ") + e.what());
  }
}

std::string EnsembleSpec::to_json() const {
  json doc = {{"strategy", strategy == Strategy::Union ? "union" : "vote"}, {"members", member_ids}};
  if (theta) doc["theta"] = theta->str();
  return doc.dump(2) + "\n";
}

std::size_t required_votes(const Rational& theta, std::size_t k) {
  // votes > theta*k  <=>  votes*den > num*k  <=>  votes >= floor(num*k/den) + 1
  const auto prod = static_cast<__int128>(theta.num) * static_cast<__int128>(k);
  return static_cast<std::size_t>(prod / theta.den) + 1;
}

namespace {

bool is_llm_like(DetectorKind k) { return k == DetectorKind::LlmClient; }
bool is_sast_like(DetectorKind k) { return k == DetectorKind::SastAdapter; }

struct VoteCount {
  std::map<FunctionId, std::size_t> votes;
  std::string snapshot_id;
  std::size_t prediction_count = 0;
  bool heterogeneous = false;
};

VoteCount count_votes(const std::vector<std::string>& member_ids,
                      std::span<const DetectorReport> reports) {
  if (reports.empty()) throw DataError("no member reports to combine");
  std::map<std::string, const DetectorReport*> by_id;
  for (const auto& r : reports) {
    if (!by_id.emplace(r.detector_id, &r).second)
      throw DataError("two reports from member '" + r.detector_id + "'");
    if (r.snapshot_id != reports.front().snapshot_id)
      throw DataError("member reports mix snapshots '" + reports.front().snapshot_id + "' and '" +
                      r.snapshot_id + "'");
  }
  for (const auto& id : member_ids)
    if (!by_id.contains(id))
      throw DataError("missing report from member '" + id + "' for snapshot '" +
                      reports.front().snapshot_id + "'");
  if (by_id.size() != member_ids.size()) {
    std::set<std::string> members(member_ids.begin(), member_ids.end());
    for (const auto& [id, r] : by_id)
      if (!members.contains(id)) throw DataError("report from non-member '" + id + "'");
  }

  VoteCount vc;
  vc.snapshot_id = reports.front().snapshot_id;
  bool any_sast = false, any_llm = false;
  for (const auto& r : reports) {
    for (const auto& f : r.marked) ++vc.votes[f];
    vc.prediction_count = std::max(vc.prediction_count, r.prediction_count);
    any_sast |= is_sast_like(r.kind);
    any_llm |= is_llm_like(r.kind);
    vc.heterogeneous |= r.heterogeneous;
  }
  vc.heterogeneous |= any_sast && any_llm;
  return vc;
}

DetectorReport from_votes(const VoteCount& vc, const EnsembleSpec& spec) {
  DetectorReport out;
  out.detector_id = spec.output_id();
  out.snapshot_id = vc.snapshot_id;
  out.kind = DetectorKind::Ensemble;
  out.prediction_count = vc.prediction_count;
  out.heterogeneous = vc.heterogeneous;
  const std::size_t need =
      spec.strategy == Strategy::Union ? 1 : required_votes(*spec.theta, spec.member_ids.size());
  for (const auto& [f, v] : vc.votes)
    if (v >= need) out.marked.insert(f);
  return out;
}

}  // namespace

DetectorReport combine(const EnsembleSpec& spec, std::span<const DetectorReport> reports) {
  spec.validate();
  return from_votes(count_votes(spec.member_ids, reports), spec);
}

std::vector<DetectorReport> sweep_thresholds(std::span<const DetectorReport> member_reports,
                                             const std::vector<Rational>& thetas) {
  if (member_reports.size() < 2) throw ConfigError("threshold sweep needs at least 2 members");
  std::vector<std::string> members;
  for (const auto& r : member_reports) members.push_back(r.detector_id);
  const auto vc = count_votes(members, member_reports);
  std::vector<DetectorReport> out;
  for (const auto& theta : thetas) {
    EnsembleSpec spec{Strategy::Vote, theta, members};
    spec.validate();
    out.push_back(from_votes(vc, spec));
  }
  return out;
}

}  // namespace rvd
