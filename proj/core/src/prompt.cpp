#include "rvd/prompt.hpp"

#include <cctype>

#include "rvd/common.hpp"

namespace rvd {

std::string_view to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::ZeroShot:
      return "zero_shot";
    case PromptMode::CoT:
      return "cot";
    case PromptMode::FewShot:
      return "few_shot";
  }
  return "?";
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "zero_shot") return PromptMode::ZeroShot;
  if (text == "cot") return PromptMode::CoT;
  if (text == "few_shot") return PromptMode::FewShot;
  throw ConfigError("unknown prompt mode '" + std::string(text) +
                    "' (expected zero_shot, cot or few_shot)");
}

void PromptTemplate::validate() const {
  if (mode != PromptMode::FewShot) {
    if (!shots.empty())
      throw ConfigError("shots are only allowed in few_shot mode");
    return;
  }
  if (shots.size() != 2)
    throw ConfigError("few_shot needs exactly 2 shots, got " + std::to_string(shots.size()));
  if (shots[0].vulnerable == shots[1].vulnerable)
    throw ConfigError("few_shot needs one vulnerable and one clean example");
}

namespace {

void append_block(std::string& out, std::string_view code) {
  out += kCodeStart;
  out += '\n';
  out += code;
  if (code.empty() || code.back() != '\n') out += '\n';
  out += kCodeEnd;
  out += '\n';
  out += kDetection;
}

}  // namespace

std::string render_prompt(const PromptTemplate& tmpl, std::string_view code) {
  tmpl.validate();
  std::string out(kTaskDescription);
  out += '\n';
  if (tmpl.mode == PromptMode::CoT) {
    out += kStepByStep;
    out += '\n';
  }
  if (tmpl.mode == PromptMode::FewShot) {
    for (const auto& shot : tmpl.shots) {
      append_block(out, shot.body);
      out += '\n';
      out += shot.vulnerable ? "Yes" : "No";
      out += '\n';
    }
  }
  append_block(out, code);
  return out;
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Vulnerable:
      return "vulnerable";
    case Verdict::Clean:
      return "clean";
    case Verdict::Unparseable:
      return "unparseable";
  }
  return "?";
}

Verdict parse_verdict(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!std::isalnum(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && std::isalnum(static_cast<unsigned char>(raw[j]))) ++j;
    std::string word;
    for (std::size_t k = i; k < j; ++k)
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[k])));
    if (word == "yes") return Verdict::Vulnerable;
    if (word == "no") return Verdict::Clean;
    i = j;
  }
  return Verdict::Unparseable;
}

}  // namespace rvd
