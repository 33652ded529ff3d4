#include "rvd/detectors.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rvd/hash.hpp"
#include "rvd/slicer.hpp"
#include "rvd/text.hpp"

namespace rvd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::SastAdapter:
      return "sast";
    case DetectorKind::LlmClient:
      return "llm";
    case DetectorKind::Oracle:
      return "oracle";
    case DetectorKind::Null:
      return "null";
    case DetectorKind::AllMark:
      return "allmark";
    case DetectorKind::Random:
      return "random";
    case DetectorKind::Ensemble:
      return "ensemble";
  }
  return "?";
}

DetectorKind parse_detector_kind(std::string_view text) {
  for (auto k : {DetectorKind::SastAdapter, DetectorKind::LlmClient, DetectorKind::Oracle,
                 DetectorKind::Null, DetectorKind::AllMark, DetectorKind::Random,
                 DetectorKind::Ensemble})
    if (to_string(k) == text) return k;
  throw ConfigError("unknown detector kind '" + std::string(text) + "'");
}

// ----------------------------------------------------------------- spec ----

namespace {

constexpr std::array<std::string_view, 8> kConfigKeys = {
    "command", "findings_path", "endpoint", "mode", "seed", "probability", "max_in_flight",
    "retries"};

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    auto v = std::stoull(text, &pos, 0);
    if (pos != text.size() || text.starts_with("-")) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config '" + key + "' must be a non-negative integer, got '" + text + "'");
  }
}

double parse_probability(const std::string& text) {
  try {
    std::size_t pos = 0;
    double p = std::stod(text, &pos);
    if (pos != text.size() || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(text);
    return p;
  } catch (const std::exception&) {
    throw ConfigError("config 'probability' must lie in [0, 1], got '" + text + "'");
  }
}

}  // namespace

std::string DetectorSpec::get(const std::string& key, std::string fallback) const {
  auto it = config.find(key);
  return it == config.end() ? std::move(fallback) : it->second;
}

void DetectorSpec::validate() const {
  if (detector_id.empty()) throw ConfigError("detector id is empty");
  if (detector_id.find_first_of("/\\#") != std::string::npos)
    throw ConfigError("detector id '" + detector_id + "' may not contain '/', '\\' or '#'");
  for (const auto& [key, value] : config)
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end())
      throw ConfigError("detector '" + detector_id + "': unknown config key '" + key + "'");
  for (const auto* key : {"seed", "max_in_flight", "retries"})
    if (config.contains(key)) parse_u64(key, config.at(key));
  if (config.contains("probability")) parse_probability(config.at("probability"));
  if (config.contains("mode")) parse_prompt_mode(config.at("mode"));
  switch (kind) {
    case DetectorKind::SastAdapter:
      if (!config.contains("command") && !config.contains("findings_path"))
        throw ConfigError("sast detector '" + detector_id + "' needs command or findings_path");
      break;
    case DetectorKind::LlmClient:
      if (!config.contains("endpoint"))
        throw ConfigError("llm detector '" + detector_id + "' needs an endpoint");
      break;
    case DetectorKind::Random:
      if (!config.contains("seed"))
        throw ConfigError("random detector '" + detector_id + "' needs a seed");
      break;
    case DetectorKind::Ensemble:
      throw ConfigError("ensembles are built with `combine`, not from a detector spec");
    default:
      break;
  }
}

DetectorSpec DetectorSpec::from_json(std::string_view text) {
  DetectorSpec spec;
  try {
    auto doc = json::parse(text);
    spec.detector_id = doc.at("id").get<std::string>();
    spec.kind = parse_detector_kind(doc.at("kind").get<std::string>());
    const json config = doc.value("config", json::object());
    for (const auto& [key, value] : config.items())
      spec.config[key] = value.is_string() ? value.get<std::string>() : value.dump();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed detector spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string DetectorSpec::to_json() const {
  return json{{"id", detector_id}, {"kind", to_string(kind)}, {"config", config}}.dump(2) + "\n";
}

DetectorSpec load_detector_spec(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError("detector spec not found: " + path.string());
  auto spec = DetectorSpec::from_json(read_file(path));
  // A relative findings path is read relative to the spec file, so fixture
  // specs work from any working directory.
  if (auto it = spec.config.find("findings_path"); it != spec.config.end()) {
    if (fs::path(it->second).is_relative())
      it->second = (path.parent_path() / it->second).lexically_normal().string();
  }
  return spec;
}

// --------------------------------------------------------------- report ----

std::string DetectorReport::to_json() const {
  json ids = json::array();
  for (const auto& id : marked) ids.push_back(id.str());
  json doc = {{"detector_id", detector_id},
              {"snapshot_id", snapshot_id},
              {"kind", rvd::to_string(kind)},
              {"marked", ids},
              {"prediction_count", prediction_count},
              {"unparsed_responses", unparsed_responses},
              {"unmapped_findings", unmapped_findings},
              {"failed_functions", failed_functions},
              {"heterogeneous", heterogeneous}};
  return doc.dump(2) + "\n";
}

DetectorReport DetectorReport::from_json(std::string_view text) {
  try {
    auto doc = json::parse(text);
    DetectorReport r;
    r.detector_id = doc.at("detector_id").get<std::string>();
    r.snapshot_id = doc.at("snapshot_id").get<std::string>();
    r.kind = parse_detector_kind(doc.at("kind").get<std::string>());
    for (const auto& id : doc.at("marked")) r.marked.insert(FunctionId::parse(id.get<std::string>()));
    r.prediction_count = doc.at("prediction_count").get<std::size_t>();
    r.unparsed_responses = doc.value("unparsed_responses", std::size_t{0});
    r.unmapped_findings = doc.value("unmapped_findings", std::size_t{0});
    r.failed_functions = doc.value("failed_functions", std::vector<std::string>{});
    r.heterogeneous = doc.value("heterogeneous", false);
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed detector report: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed detector report: ") + e.what());
  }
}

void save_report(const fs::path& path, const DetectorReport& report) {
  write_file(path, report.to_json());
}

DetectorReport load_report(const fs::path& path) {
  try {
    return DetectorReport::from_json(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ----------------------------------------------------------------- SAST ----

namespace {

int line_at(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line on which each top-level array element starts.
std::vector<int> element_lines(std::string_view text) {
  std::vector<int> lines;
  int depth = 0;
  bool in_string = false;
  bool expecting = false;
  int line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') ++line;
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (expecting && !std::isspace(static_cast<unsigned char>(c)) && c != ']') {
      lines.push_back(line);
      expecting = false;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      if (++depth == 1 && c == '[') expecting = true;
    } else if (c == ']' || c == '}') {
      --depth;
    } else if (c == ',' && depth == 1) {
      expecting = true;
    }
  }
  return lines;
}

}  // namespace

std::vector<Finding> parse_findings(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError("findings line " + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) +
                    ": " + e.what());
  }
  if (!doc.is_array()) throw DataError("findings line 1: expected a JSON array");
  const auto lines = element_lines(text);
  std::vector<Finding> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const int line = i < lines.size() ? lines[i] : 1;
    const auto& el = doc[i];
    try {
      Finding f;
      f.file = el.at("file").get<std::string>();
      f.line = el.at("line").get<int>();
      f.rule_id = el.value("rule_id", "");
      f.message = el.value("message", "");
      if (f.line < 1) throw DataError("line must be >= 1");
      if (f.file.empty()) throw DataError("file is empty");
      out.push_back(std::move(f));
    } catch (const std::exception& e) {
      throw DataError("findings line " + std::to_string(line) + ": finding #" +
                      std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::string expand_template(std::string_view tmpl, const RepoSnapshot& snapshot,
                            const std::string& findings_path) {
  std::string out(tmpl);
  auto replace_all = [&](std::string_view key, const std::string& value) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
      out.replace(pos, key.size(), value);
  };
  replace_all("{snapshot_id}", snapshot.snapshot_id);
  replace_all("{snapshot_root}", snapshot.root_path.string());
  replace_all("{findings}", findings_path);
  return out;
}

DetectorReport map_findings(const DetectorSpec& spec, const RepoSnapshot& snapshot,
                            const FunctionInventory& inventory,
                            const std::vector<Finding>& findings) {
  DetectorReport report;
  report.detector_id = spec.detector_id;
  report.snapshot_id = snapshot.snapshot_id;
  report.kind = DetectorKind::SastAdapter;
  report.prediction_count = inventory.n();  // a whole-repo scan covers every function
  const auto root = snapshot.root_path.lexically_normal().generic_string();
  for (const auto& f : findings) {
    std::string file = f.file;
    if (fs::path(file).is_absolute()) {
      auto rel = fs::path(file).lexically_normal().lexically_relative(root).generic_string();
      file = rel;
    }
    file = normalize_rel_path(file);
    if (auto id = locate(inventory, file, f.line)) {
      report.marked.insert(*id);
    } else {
      ++report.unmapped_findings;
    }
  }
  return report;
}

DetectorReport run_sast_adapter(const DetectorSpec& spec, const RepoSnapshot& snapshot,
                                const FunctionInventory& inventory) {
  if (spec.kind != DetectorKind::SastAdapter)
    throw ConfigError("detector '" + spec.detector_id + "' is not a SAST adapter");
  const auto start = std::chrono::steady_clock::now();

  std::string findings_path;
  if (auto it = spec.config.find("findings_path"); it != spec.config.end())
    findings_path = expand_template(it->second, snapshot, {});
  if (auto it = spec.config.find("command"); it != spec.config.end()) {
    if (findings_path.empty())
      findings_path = (fs::temp_directory_path() /
                       ("rvd-" + spec.detector_id + "-" + snapshot.snapshot_id + ".json"))
                          .string();
    const auto cmd = expand_template(it->second, snapshot, findings_path) + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) throw DetectorError("cannot start command for '" + spec.detector_id + "'");
    std::string output;
    std::array<char, 4096> buf{};
    while (auto n = std::fread(buf.data(), 1, buf.size(), pipe)) output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      if (output.size() > 4000) output = "..." + output.substr(output.size() - 4000);
      throw DetectorError("detector '" + spec.detector_id + "' command failed (status " +
                          std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status) +
                          ") on " + snapshot.snapshot_id + ":\n" + output);
    }
  }
  std::string text;
  try {
    text = read_file(findings_path);
  } catch (const DataError&) {
    throw DetectorError("detector '" + spec.detector_id + "': findings file not found: " +
                        findings_path);
  }
  std::vector<Finding> findings;
  try {
    findings = parse_findings(text);
  } catch (const DataError& e) {
    throw DataError(findings_path + ": " + e.what());
  }
  auto report = map_findings(spec, snapshot, inventory, findings);
  report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return report;
}

// ------------------------------------------------------------------ LLM ----

namespace {

std::string wire_language(Language lang) {
  switch (lang) {
    case Language::Java:
      return "java";
    case Language::C:
      return "c";
    case Language::Python:
      return "python";
  }
  return "?";
}

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // ends with /classify
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re))
    throw ConfigError("endpoint must be an http:// URL, got '" + url + "'");
  Endpoint ep{m[1].str(), m[2].matched ? m[2].str() : ""};
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  if (!ep.path.ends_with("/classify")) ep.path += "/classify";
  return ep;
}

}  // namespace

std::string classify_request_json(const FunctionRecord& function, const PromptTemplate& tmpl) {
  json req = {{"language", wire_language(function.language)},
              {"code", function.body},
              {"mode", to_string(tmpl.mode)}};
  if (tmpl.mode == PromptMode::FewShot) {
    json shots = json::array();
    for (const auto& s : tmpl.shots) shots.push_back({{"code", s.body}, {"label", s.vulnerable ? 1 : 0}});
    req["shots"] = shots;
  }
  return req.dump();
}

ClassifyOutcome parse_classify_response(std::string_view body) {
  auto doc = json::parse(body);  // throws on malformed bodies
  if (!doc.is_object()) throw DetectorError("classify response is not a JSON object");
  ClassifyOutcome out;
  out.raw = doc.value("raw", "");
  auto it = doc.find("vulnerable");
  if (it == doc.end()) {
    out.verdict = parse_verdict(out.raw);
  } else if (it->is_null()) {
    out.verdict = Verdict::Unparseable;
  } else if (it->is_boolean()) {
    out.verdict = it->get<bool>() ? Verdict::Vulnerable : Verdict::Clean;
  } else {
    throw DetectorError("classify response field 'vulnerable' must be bool or null");
  }
  return out;
}

DetectorReport run_llm_detector(const DetectorSpec& spec, const FunctionInventory& inventory,
                                const PromptTemplate& tmpl) {
  if (spec.kind != DetectorKind::LlmClient)
    throw ConfigError("detector '" + spec.detector_id + "' is not an LLM client");
  tmpl.validate();
  const auto ep = parse_endpoint(spec.get("endpoint"));
  const auto retries = parse_u64("retries", spec.get("retries", "2"));
  const auto in_flight =
      std::max<std::uint64_t>(1, parse_u64("max_in_flight", spec.get("max_in_flight", "4")));
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = inventory.n();

  std::vector<std::optional<Verdict>> verdicts(n);
  std::vector<char> attempted(n, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failures{0};
  std::atomic<bool> abort{false};
  std::mutex err_mu;
  std::string first_error;

  auto worker = [&] {
    httplib::Client client(ep.base);
    client.set_connection_timeout(10);
    client.set_read_timeout(300);
    for (;;) {
      if (abort.load()) return;
      const auto i = next.fetch_add(1);
      if (i >= n) return;
      attempted[i] = 1;
      const auto body = classify_request_json(inventory.functions[i], tmpl);
      std::string error;
      for (std::uint64_t attempt = 0; attempt <= retries; ++attempt) {
        auto res = client.Post(ep.path.c_str(), body, "application/json");
        if (!res) {
          error = "transport error: " + httplib::to_string(res.error());
          continue;
        }
        if (res->status != 200) {
          error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
          continue;
        }
        try {
          verdicts[i] = parse_classify_response(res->body).verdict;
          error.clear();
          break;
        } catch (const std::exception& e) {
          error = std::string("bad response: ") + e.what();
        }
      }
      if (!verdicts[i]) {
        {
          std::lock_guard lock(err_mu);
          if (first_error.empty()) first_error = error;
        }
        if ((failures.fetch_add(1) + 1) * 10 > n) abort.store(true);
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    const auto threads = std::min<std::uint64_t>(in_flight, std::max<std::size_t>(n, 1));
    for (std::uint64_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  DetectorReport report;
  report.detector_id = spec.detector_id;
  report.snapshot_id = inventory.snapshot_id;
  report.kind = DetectorKind::LlmClient;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = verdicts[i];
    if (!attempted[i]) continue;  // cut off by an abort
    if (!v) {
      report.failed_functions.push_back(inventory.functions[i].id.str());
      continue;
    }
    ++report.prediction_count;
    if (*v == Verdict::Vulnerable) report.marked.insert(inventory.functions[i].id);
    if (*v == Verdict::Unparseable) ++report.unparsed_responses;
  }
  report.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  if (abort.load())
    throw DetectorRunAborted("detector '" + spec.detector_id + "' aborted on " +
                                 inventory.snapshot_id + ": " + std::to_string(failures.load()) +
                                 " of " + std::to_string(n) +
                                 " functions failed (more than 10%); first error: " + first_error,
                             std::move(report));
  return report;
}

// ------------------------------------------------------------ reference ----

DetectorReport run_reference_detector(const DetectorSpec& spec, const FunctionInventory& inventory,
                                      const GroundTruth* truth) {
  DetectorReport report;
  report.detector_id = spec.detector_id;
  report.snapshot_id = inventory.snapshot_id;
  report.kind = spec.kind;
  report.prediction_count = inventory.n();
  switch (spec.kind) {
    case DetectorKind::Oracle:
      if (truth == nullptr)
        throw ConfigError("oracle detector '" + spec.detector_id + "' needs ground truth");
      for (const auto& id : truth->vulnerable_functions) {
        if (!inventory.contains(id))
          throw DataError("ground truth function '" + id.str() + "' is not in inventory '" +
                          inventory.snapshot_id + "'");
        report.marked.insert(id);
      }
      break;
    case DetectorKind::Null:
      break;
    case DetectorKind::AllMark:
      report.marked = inventory.ids();
      break;
    case DetectorKind::Random: {
      if (!spec.config.contains("seed"))
        throw ConfigError("random detector '" + spec.detector_id + "' needs a seed");
      const auto seed = parse_u64("seed", spec.get("seed"));
      const double p = parse_probability(spec.get("probability", "0.5"));
      for (const auto& f : inventory.functions) {
        const auto bits = splitmix64(seed ^ fnv1a64(f.id.str())) >> 11;
        const double u = static_cast<double>(bits) * 0x1.0p-53;
        if (u < p) report.marked.insert(f.id);
      }
      break;
    }
    default:
      throw ConfigError("detector '" + spec.detector_id + "' is not a reference detector");
  }
  return report;
}

}  // namespace rvd
