#include <string>

#include "doctest.h"
#include "support/worlds.hpp"
#include "surprise/backend.hpp"
#include "surprise/error.hpp"
#include "surprise/memory.hpp"
#include "surprise/prompts.hpp"
#include "surprise/scripted_backend.hpp"

using namespace surprise;

namespace {

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += stem + std::to_string(i);
  }
  return out;
}

WorldScript tiny_world() {
  return WorldScript::from_json(nlohmann::json::parse(R"({
    "world_id": "tiny",
    "spans": [{"end": 5.0, "symbol": "ride"}, {"end": 6.0, "symbol": "fall"}],
    "hypotheses": {
      "ride": [
        {"text": "The man keeps riding.", "nll": {"ride": 0.5, "fall": 5.0}, "yes": {"ride": 0.95, "fall": 0.05}},
        {"text": "The man waves.", "nll": {"ride": 1.5, "fall": 4.0}},
        {"text": "The man turns left.", "nll": {"ride": 1.0, "fall": 4.5}}
      ],
      "fall": [{"text": "The man gets up.", "prior_nll": 0.7, "nll": {"fall": 0.2}}]
    },
    "captions": {"ride": "A man rides a bike.", "fall": "The man falls off."}
  })"));
}

Context ctx_at(double window_end, std::optional<double> observed = {}) {
  Context c;
  for (int i = 0; i < 3; ++i) {
    const double t = window_end - 2 + i;
    c.prior_window.push_back({static_cast<std::size_t>(i), t, "f.jpg"});
  }
  if (observed) c.observed_frame = FrameRef{9, *observed, "o.jpg"};
  return c;
}

}  // namespace

TEST_CASE("word helpers") {
  CHECK(word_count("  a b\tc\n") == 3);
  CHECK(word_count("") == 0);
  CHECK(tokenize_words("Hello, World! 42x") == std::vector<std::string>{"hello", "world", "42x"});
  CHECK(trim_to_word_budget(words(5), 10) == words(5));
  CHECK(word_count(trim_to_word_budget(words(400), 200)) == 200);
  CHECK(trim_to_word_budget("One two. Three four five. Six.", 4) == "Three four five. Six.");
  CHECK(trim_to_word_budget("a b c", 0).empty());
}

TEST_CASE("bag-of-words embeddings") {
  const auto a = hashed_bag_of_words("red apple");
  const auto b = hashed_bag_of_words("red apple");
  CHECK(a.values == b.values);
  CHECK(cosine(a, b) == doctest::Approx(1.0));
  // Pick a word that lands in a different bucket so the vocabularies are
  // disjoint after hashing too.
  std::string other;
  for (int i = 0; i < 100 && other.empty(); ++i) {
    const auto cand = "zebra" + std::to_string(i);
    if (cosine(a, hashed_bag_of_words(cand)) == 0.0) other = cand;
  }
  REQUIRE(!other.empty());
  CHECK(cosine(a, hashed_bag_of_words(other)) == 0.0);
  CHECK(cosine(Embedding{{0.0, 0.0}}, Embedding{{1.0, 0.0}}) == 0.0);
}

TEST_CASE("scripted generation") {
  ScriptedBackend b(tiny_world());
  GenerationParams p;
  p.n = 3;
  p.seed = 11;
  const auto hs = b.generate_hypotheses(ctx_at(3.0), p);
  CHECK(hs.size() == 3);
  for (const auto& h : hs) CHECK(h.rfind("The man", 0) == 0);
  CHECK(b.generate_hypotheses(ctx_at(3.0), p) == hs);
  p.n = 0;
  CHECK_THROWS_AS(b.generate_hypotheses(ctx_at(3.0), p), InvalidParameter);
  p.n = 3;
  CHECK_THROWS_AS(b.generate_hypotheses(ctx_at(3.0, 4.0), p), InvalidInput);
}

TEST_CASE("scripted NLL and yes scoring") {
  ScriptedBackend b(tiny_world());
  CHECK(b.score_nll("The man keeps riding.", ctx_at(3.0, 4.0)) == 0.5);
  CHECK(b.score_nll("The man keeps riding.", ctx_at(3.0, 5.5)) == 5.0);
  CHECK(b.score_nll("The man keeps riding.", ctx_at(3.0)) == 0.5);
  CHECK(b.score_nll("The man gets up.", ctx_at(3.0)) == 0.7);
  CHECK(b.score_nll("Something unknown.", ctx_at(3.0)) == 5.0);
  CHECK(b.score_nll("The man waves.", ctx_at(3.0, 4.0)) == b.score_nll("The man waves.", ctx_at(3.0, 4.0)));
  CHECK_THROWS_AS(b.score_nll("", ctx_at(3.0)), InvalidInput);

  CHECK(b.score_posterior_yes("The man keeps riding.", ctx_at(3.0, 4.0)) == 0.95);
  CHECK(b.score_posterior_yes("The man keeps riding.", ctx_at(3.0, 5.5)) == 0.05);
  CHECK_THROWS_AS(b.score_posterior_yes("The man keeps riding.", ctx_at(3.0)), InvalidInput);
}

TEST_CASE("scripted captions and judge") {
  ScriptedBackend b(tiny_world());
  CHECK(b.caption_event(ctx_at(3.0, 4.0)) == "A man rides a bike.");
  CHECK(b.caption_event(ctx_at(3.0, 5.5)) == "The man falls off.");
  CHECK_THROWS_AS(b.caption_event(ctx_at(3.0)), InvalidInput);

  std::vector<FrameRef> frames{{0, 5.5, ""}, {1, 1.0, ""}, {2, 2.0, ""}};
  CHECK(b.caption_video(frames) == "A man rides a bike. The man falls off.");
  CHECK_THROWS_AS(b.caption_video(std::vector<FrameRef>{}), InvalidInput);

  CHECK(b.judge("a man rides", "A man rides a bike.") == "Score: 1.00");
  CHECK(b.judge("a man falls", "nothing") == "Score: 0.00");
}

TEST_CASE("call counting") {
  ScriptedBackend b(tiny_world());
  GenerationParams p;
  b.generate_hypotheses(ctx_at(3.0), p);
  b.score_nll("The man waves.", ctx_at(3.0));
  b.score_posterior_yes("The man waves.", ctx_at(3.0, 4.0));
  CHECK(b.calls().generate == 1);
  CHECK(b.calls().scoring() == 2);
  b.reset_calls();
  CHECK(b.calls().generate == 0);
}

TEST_CASE("world script validation") {
  auto j = tiny_world().to_json();
  CHECK(WorldScript::from_json(j).to_json() == j);
  auto bad = j;
  bad["spans"] = nlohmann::json::array({{{"end", 5.0}, {"symbol", "ride"}}, {{"end", 4.0}, {"symbol", "fall"}}});
  CHECK_THROWS_AS(WorldScript::from_json(bad), InvalidInput);
  bad = j;
  bad["spans"].push_back({{"end", 9.0}, {"symbol", "unknown"}});
  CHECK_THROWS_AS(WorldScript::from_json(bad), InvalidInput);
  bad = j;
  bad["hypotheses"]["ride"][0]["nll"]["ride"] = -1.0;
  CHECK_THROWS_AS(WorldScript::from_json(bad), InvalidInput);
}

TEST_CASE("summarize respects the budget") {
  ScriptedBackend b(tiny_world());
  const auto fifty = words(50);
  CHECK(b.summarize(fifty, 200) == fifty);
  CHECK(word_count(b.summarize(words(400), 200)) <= 200);
  CHECK(b.summarize("", 200).empty());
}

TEST_CASE("rolling memory") {
  ScriptedBackend b(tiny_world());
  RollingMemory m;
  m = append_and_compress(m, "a man rides", b);
  CHECK(m.text == "a man rides");
  CHECK(m.step_count == 1);

  RollingMemory big;
  big.text = words(195);
  big = append_and_compress(big, words(20, "c"), b);
  CHECK(word_count(big.text) <= 200);
  CHECK(big.text.find("c19") != std::string::npos);

  RollingMemory seq;
  for (int i = 0; i < 10; ++i) seq = append_and_compress(seq, "Step " + std::to_string(i) + ".", b);
  CHECK(seq.step_count == 10);
}

TEST_CASE("prompt templates") {
  const auto d = PromptTemplates::defaults();
  CHECK_NOTHROW(d.validate());
  CHECK(d.prior_score.find("{hypothesis}") != std::string::npos);
  auto broken = d;
  broken.judge = "no placeholders";
  CHECK_THROWS_AS(broken.validate(), InvalidParameter);
  CHECK(render("{a} and {b} and {c}", {{"a", "x"}, {"b", "y"}}) == "x and y and {c}");
}

TEST_CASE("error kinds") {
  CHECK(InvalidInput("x").kind() == ErrorKind::InvalidInput);
  CHECK(RewardParseError("oops").raw() == "oops");
  TransportError t("down", 3, true);
  CHECK(t.attempts() == 3);
  CHECK(t.retryable());
  CHECK(std::string(to_string(ErrorKind::Capability)) == "capability");
}
