#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surprise {

/// One frame of the video: its position in the manifest, time, and location.
struct FrameRef {
  std::size_t index = 0;
  double timestamp = 0.0;
  std::string uri;
};

/// What the model sees at one step: the running summary, the frames just
/// before the observation, and (for posterior-side calls) the observation.
struct Context {
  std::string history_text;
  std::vector<FrameRef> prior_window;
  std::optional<FrameRef> observed_frame;
};

struct GenerationParams {
  int n = 3;
  double nucleus_p = 0.9;
  int max_words = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Embedding {
  std::vector<double> values;
  double norm() const;
};

/// Cosine similarity; 0 when either vector is all-zero.
double cosine(const Embedding& a, const Embedding& b);

/// Hashed bag-of-words: lowercase alphanumeric tokens counted into `dims`
/// buckets (FNV-1a). Non-negative, so cosines land in [0, 1].
Embedding hashed_bag_of_words(std::string_view text, std::size_t dims = 1024);
std::vector<std::string> tokenize_words(std::string_view text);
std::size_t word_count(std::string_view text);

/// Keeps the most recent whole sentences that fit in `word_budget` words. A
/// single oversized final sentence is cut to its last `word_budget` words.
std::string trim_to_word_budget(std::string_view text, std::size_t word_budget);

struct CallCounts {
  std::uint64_t generate = 0;
  std::uint64_t score_nll = 0;
  std::uint64_t score_yes = 0;
  std::uint64_t summarize = 0;
  std::uint64_t embed = 0;
  std::uint64_t caption = 0;
  std::uint64_t judge = 0;

  std::uint64_t scoring() const { return score_nll + score_yes; }
};

/// Model abstraction. Public calls validate arguments and count invocations,
/// then dispatch to the implementation hooks. Implementations must tolerate
/// concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  std::vector<std::string> generate_hypotheses(const Context& ctx, const GenerationParams& params);
  /// Total NLL in nats of `hypothesis` as a continuation of ctx. With an
  /// observed frame this is the posterior-side NLL.
  double score_nll(std::string_view hypothesis, const Context& ctx);
  /// Probability of "yes" to "does the hypothesis hold in the observed frame".
  double score_posterior_yes(std::string_view hypothesis, const Context& ctx);
  /// Never fails and never exceeds the budget; falls back to trimming.
  std::string summarize(std::string_view text, std::size_t word_budget);
  Embedding embed(std::string_view text);
  /// Caption of the newly observed event, used to grow the rolling memory.
  std::string caption_event(const Context& ctx);
  /// Caption for a whole video given a set of sampled frames.
  std::string caption_video(std::span<const FrameRef> frames);
  /// Raw judge output comparing `response` against `reference`.
  std::string judge(std::string_view reference, std::string_view response);

  CallCounts calls() const;
  void reset_calls();

 protected:
  virtual std::vector<std::string> do_generate(const Context& ctx, const GenerationParams& params) = 0;
  virtual double do_score_nll(std::string_view hypothesis, const Context& ctx) = 0;
  virtual double do_score_yes(std::string_view hypothesis, const Context& ctx) = 0;
  virtual std::string do_summarize(std::string_view text, std::size_t word_budget) = 0;
  virtual Embedding do_embed(std::string_view text) = 0;
  virtual std::string do_caption_event(const Context& ctx) = 0;
  virtual std::string do_caption_video(std::span<const FrameRef> frames) = 0;
  virtual std::string do_judge(std::string_view reference, std::string_view response) = 0;

 private:
  struct Counters {
    std::atomic<std::uint64_t> generate{0}, score_nll{0}, score_yes{0}, summarize{0}, embed{0},
        caption{0}, judge{0};
  };
  Counters counters_;
};

}  // namespace surprise
