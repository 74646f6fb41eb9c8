#include "surprise/prompts.hpp"

#include <utility>
#include <vector>

#include "surprise/error.hpp"

namespace surprise {

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.generation =
      "Given a textual summary of the video so far and the most recent prior window of frames, "
      "predict what will most likely happen in the next frame.\n\n"
      "Context so far:\n{memory_text}\n\n"
      "Prior window (video inputs):\n"
      "A sequence of images corresponding to the last W frames.\n\n"
      "Output format:\n"
      "Hypothesis: 8-10 words";
  t.prior_score =
      "Context so far:\n{memory_text}\n\n"
      "Prior window (video inputs):\n"
      "A sequence of images corresponding to the last W frames.\n\n"
      "Current frame:\n"
      "The observed frame immediately following the prior window.\n\n"
      "Here is what will happen next: {hypothesis}";
  t.posterior_score =
      "You are given a textual summary of the video so far, a prior window of frames, and the "
      "current frame that follows.\n"
      "Your task is to evaluate whether each hypothesis generated from the prior context still "
      "holds in the current frame.\n\n"
      "Context so far:\n{memory_text}\n\n"
      "Prior window (video inputs):\n"
      "A sequence of images corresponding to the last W frames.\n\n"
      "Current frame:\n"
      "The observed frame immediately following the prior window.\n\n"
      "Hypothesis: {hypothesis}\n\n"
      "Question: Is this hypothesis true in the current frame?\n"
      "Answer with a single word: yes or no.";
  t.caption =
      "Context so far:\n{memory_text}\n\n"
      "The images are the most recent frames of the video followed by the newly observed frame. "
      "Describe in one sentence what happens in the newly observed frame.";
  t.video_caption = "Describe what happens in this video in a few sentences.";
  t.judge =
      "Rate how closely the content of the prediction matches the content of the reference "
      "description in terms of meaning and how well it captures important details regarding "
      "events in the video.\n"
      "Ignore the difference in length.\n"
      "Score 0.0-1.0 where:\n\n"
      "0.0-0.3: Poor match (key details in the reference are missing in the prediction)\n"
      "0.4-0.6: Moderate match (a few key details in the reference are captured in the "
      "prediction)\n"
      "0.7-0.9: Good match (most key details are present in the prediction)\n"
      "1.0: Perfect match (all key details in the reference are accurately captured in the "
      "prediction)\n"
      "Output only the numerical score (e.g., 0.75).\n\n"
      "Reference: {gt}\n"
      "Response: {response}\n\n"
      "Score:";
  t.summarize =
      "Summarize the following account of a video in at most {word_budget} words. Keep the "
      "order of events.\n\n{text}";
  return t;
}

void PromptTemplates::validate() const {
  const std::vector<std::pair<const std::string*, std::vector<const char*>>> required = {
      {&generation, {"{memory_text}"}},
      {&prior_score, {"{memory_text}", "{hypothesis}"}},
      {&posterior_score, {"{memory_text}", "{hypothesis}"}},
      {&caption, {"{memory_text}"}},
      {&video_caption, {}},
      {&judge, {"{gt}", "{response}"}},
      {&summarize, {"{text}"}},
  };
  for (const auto& [tmpl, keys] : required) {
    for (const char* key : keys) {
      if (tmpl->find(key) == std::string::npos) {
        throw InvalidParameter(std::string("prompt template is missing placeholder ") + key);
      }
    }
  }
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace surprise
