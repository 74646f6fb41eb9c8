#pragma once

#include <map>
#include <string>
#include <string_view>

namespace surprise {

/// Prompt templates with `{name}` placeholders.
struct PromptTemplates {
  std::string generation;
  std::string prior_score;
  std::string posterior_score;
  std::string caption;
  std::string video_caption;
  std::string judge;
  std::string summarize;

  static PromptTemplates defaults();

  /// Throws InvalidParameter if a template lacks a placeholder it needs.
  void validate() const;
};

/// Replaces every `{key}` with its value. Unknown placeholders are left as-is.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace surprise
