#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rvd/function.hpp"

namespace rvd {

enum class PromptMode { ZeroShot, CoT, FewShot };

/// Wire spelling: "zero_shot", "cot", "few_shot".
std::string_view to_string(PromptMode mode);
PromptMode parse_prompt_mode(std::string_view text);

struct Shot {
  std::string body;
  bool vulnerable = false;
};

struct PromptTemplate {
  PromptMode mode = PromptMode::ZeroShot;
  std::vector<Shot> shots;  // few-shot only: one vulnerable, one clean

  /// Throws ConfigError if the shots do not fit the mode.
  void validate() const;
};

inline constexpr std::string_view kTaskDescription =
    "If the following code snippet has any vulnerabilities, output Yes; "
    "otherwise, output No";
inline constexpr std::string_view kStepByStep = "Let's think step by step";
inline constexpr std::string_view kCodeStart = "// Code Start";
inline constexpr std::string_view kCodeEnd = "// Code End";
inline constexpr std::string_view kDetection = "// Detection";

std::string render_prompt(const PromptTemplate& tmpl, std::string_view code);

inline std::string render_prompt(const PromptTemplate& tmpl,
                                 const FunctionRecord& function) {
  return render_prompt(tmpl, function.body);
}

enum class Verdict { Vulnerable, Clean, Unparseable };

std::string_view to_string(Verdict verdict);

/// First standalone "yes"/"no" token, case-insensitive.
Verdict parse_verdict(std::string_view raw_response);

}  // namespace rvd
