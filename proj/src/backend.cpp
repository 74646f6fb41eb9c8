#include "surprise/backend.hpp"

#include <cctype>
#include <cmath>

#include "surprise/error.hpp"

namespace surprise {

void GenerationParams::validate() const {
  if (n < 1) throw InvalidParameter("hypothesis count n must be at least 1");
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) {
    throw InvalidParameter("nucleus_p must lie in (0, 1]");
  }
  if (max_words < 1) throw InvalidParameter("max_words must be at least 1");
}

double Embedding::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) throw ShapeError("cosine: embedding sizes differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot / (na * nb);
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur += static_cast<char>(std::tolower(u));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

Embedding hashed_bag_of_words(std::string_view text, std::size_t dims) {
  Embedding e;
  e.values.assign(dims, 0.0);
  for (const auto& w : tokenize_words(text)) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : w) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    e.values[h % dims] += 1.0;
  }
  return e;
}

namespace {

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

std::size_t word_count(std::string_view text) { return split_whitespace(text).size(); }

std::string trim_to_word_budget(std::string_view text, std::size_t word_budget) {
  const auto words = split_whitespace(text);
  if (words.size() <= word_budget) return join(words, 0, words.size());
  if (word_budget == 0) return {};

  // Sentence starts: word indices following a word that ends a sentence.
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    const char last = words[i].back();
    if (last == '.' || last == '!' || last == '?') starts.push_back(i + 1);
  }
  for (std::size_t s : starts) {
    if (words.size() - s <= word_budget) return join(words, s, words.size());
  }
  return join(words, words.size() - word_budget, words.size());
}

std::vector<std::string> Backend::generate_hypotheses(const Context& ctx,
                                                      const GenerationParams& params) {
  params.validate();
  if (ctx.observed_frame) {
    throw InvalidInput("hypothesis generation must not see the observed frame");
  }
  counters_.generate++;
  auto out = do_generate(ctx, params);
  if (out.size() != static_cast<std::size_t>(params.n)) {
    throw ProtocolError("backend returned " + std::to_string(out.size()) + " hypotheses, expected " +
                        std::to_string(params.n));
  }
  return out;
}

double Backend::score_nll(std::string_view hypothesis, const Context& ctx) {
  if (hypothesis.empty()) throw InvalidInput("cannot score an empty hypothesis");
  counters_.score_nll++;
  const double v = do_score_nll(hypothesis, ctx);
  if (!std::isfinite(v) || v < 0.0) {
    throw ProtocolError("backend returned an invalid NLL");
  }
  return v;
}

double Backend::score_posterior_yes(std::string_view hypothesis, const Context& ctx) {
  if (hypothesis.empty()) throw InvalidInput("cannot score an empty hypothesis");
  if (!ctx.observed_frame) throw InvalidInput("posterior scoring requires an observed frame");
  counters_.score_yes++;
  const double v = do_score_yes(hypothesis, ctx);
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw ProtocolError("backend returned a yes-probability outside [0, 1]");
  }
  return v;
}

std::string Backend::summarize(std::string_view text, std::size_t word_budget) {
  if (word_count(text) <= word_budget) return std::string(text);
  counters_.summarize++;
  std::string out;
  try {
    out = do_summarize(text, word_budget);
  } catch (const Error&) {
    return trim_to_word_budget(text, word_budget);
  }
  if (word_count(out) > word_budget) out = trim_to_word_budget(out, word_budget);
  return out;
}

Embedding Backend::embed(std::string_view text) {
  if (tokenize_words(text).empty()) throw InvalidInput("cannot embed empty text");
  counters_.embed++;
  return do_embed(text);
}

std::string Backend::caption_event(const Context& ctx) {
  if (!ctx.observed_frame) throw InvalidInput("event captioning requires an observed frame");
  counters_.caption++;
  return do_caption_event(ctx);
}

std::string Backend::caption_video(std::span<const FrameRef> frames) {
  if (frames.empty()) throw InvalidInput("cannot caption a video from zero frames");
  counters_.caption++;
  return do_caption_video(frames);
}

std::string Backend::judge(std::string_view reference, std::string_view response) {
  counters_.judge++;
  return do_judge(reference, response);
}

CallCounts Backend::calls() const {
  CallCounts c;
  c.generate = counters_.generate.load();
  c.score_nll = counters_.score_nll.load();
  c.score_yes = counters_.score_yes.load();
  c.summarize = counters_.summarize.load();
  c.embed = counters_.embed.load();
  c.caption = counters_.caption.load();
  c.judge = counters_.judge.load();
  return c;
}

void Backend::reset_calls() {
  counters_.generate = 0;
  counters_.score_nll = 0;
  counters_.score_yes = 0;
  counters_.summarize = 0;
  counters_.embed = 0;
  counters_.caption = 0;
  counters_.judge = 0;
}

}  // namespace surprise
