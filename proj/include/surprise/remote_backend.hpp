#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"
#include "surprise/prompts.hpp"

namespace surprise {

struct RemoteConfig {
  std::string endpoint;  // scheme://host[:port]
  std::string chat_path = "/v1/chat/completions";
  std::string embeddings_path = "/v1/embeddings";
  std::string model;
  std::string embedding_model;  // empty: hashed bag-of-words embeddings
  std::string token_env = "SURPRISE_API_KEY";
  double timeout_s = 60.0;
  int retries = 2;
  double retry_backoff_s = 0.5;
  int top_logprobs = 20;
  PromptTemplates templates = PromptTemplates::defaults();

  void validate() const;
  static RemoteConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Wire format. Kept free of I/O so it can be checked against canned payloads.
namespace wire {

/// Image content part for a frame: http(s)/data URIs pass through, local
/// files are inlined as base64 data URIs.
nlohmann::json image_part(const FrameRef& frame);

nlohmann::json generation_request(const RemoteConfig& cfg, const Context& ctx,
                                  const GenerationParams& params, int n);
nlohmann::json nll_request(const RemoteConfig& cfg, std::string_view hypothesis, const Context& ctx);
nlohmann::json yes_request(const RemoteConfig& cfg, std::string_view hypothesis, const Context& ctx);
nlohmann::json text_request(const RemoteConfig& cfg, const std::string& prompt,
                            std::span<const FrameRef> frames, int max_tokens);

/// Message texts of all choices, with any "Hypothesis:" label stripped.
std::vector<std::string> parse_choice_texts(const nlohmann::json& response);
/// Negated sum of per-token logprobs of the echoed continuation.
double parse_continuation_nll(const nlohmann::json& response);
/// Probability mass on "yes" among the first generated token's alternatives.
double parse_yes_probability(const nlohmann::json& response);
Embedding parse_embedding(const nlohmann::json& response);

}  // namespace wire

/// Backend speaking a chat-completions style JSON protocol over HTTP(S).
class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);

  const RemoteConfig& config() const noexcept { return cfg_; }

  /// POST with timeout and bounded retries. Exposed for diagnostics.
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

 protected:
  std::vector<std::string> do_generate(const Context& ctx, const GenerationParams& params) override;
  double do_score_nll(std::string_view hypothesis, const Context& ctx) override;
  double do_score_yes(std::string_view hypothesis, const Context& ctx) override;
  std::string do_summarize(std::string_view text, std::size_t word_budget) override;
  Embedding do_embed(std::string_view text) override;
  std::string do_caption_event(const Context& ctx) override;
  std::string do_caption_video(std::span<const FrameRef> frames) override;
  std::string do_judge(std::string_view reference, std::string_view response) override;

 private:
  std::string first_text(const nlohmann::json& response) const;

  RemoteConfig cfg_;
  std::string token_;
};

}  // namespace surprise
