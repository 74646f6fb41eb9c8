#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"

namespace surprise {

struct ScriptedHypothesis {
  std::string text;
  // NLL before the observation. When absent the table entry for the
  // context symbol is used, which makes symmetric worlds trivial to write.
  std::optional<double> prior_nll;
  std::map<std::string, double> nll;  // observed symbol -> posterior NLL
  std::map<std::string, double> yes;  // observed symbol -> P(yes)
};

/// Offline description of a video: what is happening when, which hypotheses
/// the "model" proposes in each situation, and how it scores them.
///
/// Time is split into spans; a span covers (previous end, end], the first one
/// also covers t = 0. Times past the last end belong to the last span.
struct WorldScript {
  struct Span {
    double end = 0.0;
    std::string symbol;
  };

  std::string world_id;
  std::vector<Span> spans;
  std::map<std::string, std::vector<ScriptedHypothesis>> hypotheses;  // context symbol -> pool
  std::map<std::string, std::string> captions;                        // symbol -> caption
  double default_nll = 5.0;
  double default_yes = 0.05;
  std::string reference_caption;

  const std::string& symbol_at(double t) const;
  void validate() const;

  static WorldScript from_json(const nlohmann::json& j);
  static WorldScript load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

/// Deterministic table-driven backend. A pure function of (script, inputs).
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(WorldScript world);

  const WorldScript& world() const noexcept { return world_; }

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
  const std::string& context_symbol(const Context& ctx) const;
  const ScriptedHypothesis* find(std::string_view text) const;

  WorldScript world_;
  std::unordered_map<std::string, const ScriptedHypothesis*> by_text_;
};

}  // namespace surprise
