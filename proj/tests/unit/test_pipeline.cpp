#include <cmath>
#include <set>

#include "doctest.h"
#include "support/worlds.hpp"
#include "surprise/error.hpp"
#include "surprise/pipeline.hpp"

using namespace surprise;
using surprise::testing::make_deviation_world;
using surprise::testing::make_flat_world;

namespace {

// Scripted backend that fails every call touching selected frames.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(WorldScript w, std::set<std::size_t> bad) : inner_(std::move(w)), bad_(std::move(bad)) {}

 protected:
  std::vector<std::string> do_generate(const Context& c, const GenerationParams& p) override {
    return inner_.generate_hypotheses(c, p);
  }
  double do_score_nll(std::string_view h, const Context& c) override {
    check(c);
    return inner_.score_nll(h, c);
  }
  double do_score_yes(std::string_view h, const Context& c) override {
    check(c);
    return inner_.score_posterior_yes(h, c);
  }
  std::string do_summarize(std::string_view t, std::size_t b) override { return inner_.summarize(t, b); }
  Embedding do_embed(std::string_view t) override { return inner_.embed(t); }
  std::string do_caption_event(const Context& c) override { return inner_.caption_event(c); }
  std::string do_caption_video(std::span<const FrameRef> f) override { return inner_.caption_video(f); }
  std::string do_judge(std::string_view r, std::string_view s) override { return inner_.judge(r, s); }

 private:
  void check(const Context& c) const {
    if (c.observed_frame && bad_.count(c.observed_frame->index)) throw TransportError("flaky", 3, true);
  }
  ScriptedBackend inner_;
  std::set<std::size_t> bad_;
};

ScoringConfig config_k(std::size_t k) {
  ScoringConfig c;
  c.segments = k;
  return c;
}

}  // namespace

TEST_CASE("budget policy") {
  CHECK(budget_for_duration(30) == 8);
  CHECK(budget_for_duration(60) == 8);
  CHECK(budget_for_duration(61) == 16);
  CHECK(budget_for_duration(90) == 16);
  CHECK(budget_for_duration(150) == 32);
  CHECK(budget_for_duration(3600, 64) == 64);
  CHECK_THROWS_AS(budget_for_duration(0), InvalidInput);
  CHECK_THROWS_AS(budget_for_duration(-5), InvalidInput);
}

TEST_CASE("segment planning") {
  const auto m = FrameManifest::regular("v", 10.0, 100);
  const auto segs = plan_segments(m, 5);
  REQUIRE(segs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(segs[i].start == doctest::Approx(2.0 * i));
    CHECK(segs[i].end == doctest::Approx(2.0 * i + 2.0));
  }
  CHECK(segs.back().end == 10.0);

  const auto two = plan_segments(m, 2);
  CHECK(two[0].end == doctest::Approx(5.0));
  CHECK(two[1].end == 10.0);

  const auto m7 = FrameManifest::regular("v7", 10.0, 70);
  const auto three = plan_segments(m7, 3);
  for (const auto& s : three) CHECK(s.end - s.start == doctest::Approx(7.0 / 3.0));
  CHECK(three.back().end == 7.0);

  CHECK_THROWS_AS(plan_segments(m, 101), InvalidParameter);
}

TEST_CASE("observed frames stay strictly increasing on coarse manifests") {
  const auto m = FrameManifest::regular("coarse", 1.0, 5);
  const auto segs = plan_segments(m, 5);
  for (std::size_t i = 1; i < segs.size(); ++i) {
    CHECK(segs[i].observed_frame > segs[i - 1].observed_frame);
    CHECK(segs[i].observed_timestep > segs[i - 1].observed_timestep);
  }
}

TEST_CASE("prior window") {
  const auto m = FrameManifest::regular("v", 1.0, 10);
  const auto w = prior_window(m, 6, 4);
  REQUIRE(w.size() == 4);
  CHECK(w.front().index == 2);
  CHECK(w.back().index == 5);
  CHECK(prior_window(m, 1, 4).size() == 1);
  CHECK(prior_window(m, 0, 4).empty());
}

TEST_CASE("deviation world peaks at the deviation") {
  const auto d = make_deviation_world(8, 4);
  ScriptedBackend b(d.world);
  const auto tl = score_video(d.manifest, config_k(8), b);
  REQUIRE(tl.records.size() == 8);
  CHECK(argmax_surprise(tl) == d.deviation_time);
  for (std::size_t i = 0; i < 8; ++i) {
    if (i == 4) {
      CHECK(tl.records[i].score.value > 0.1);
    } else {
      CHECK(tl.records[i].score.value == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(tl.records[i].belief.timestep == tl.records[i].timestep());
  }
  CHECK(tl.records[4].caption == surprise::testing::deviation_caption());
  CHECK(b.calls().generate == 8);
  CHECK(b.calls().scoring() == 2 * 8 * 3);
}

TEST_CASE("flat world scores are all equal") {
  const auto d = make_flat_world(8);
  for (auto mode : {DivergenceMode::kl, DivergenceMode::jsd}) {
    ScriptedBackend b(d.world);
    auto cfg = config_k(8);
    cfg.mode = mode;
    const auto scores = score_video(d.manifest, cfg, b).raw_scores();
    for (double s : scores) CHECK(std::abs(s - scores.front()) <= 1e-9);
  }
}

TEST_CASE("memoryless and yes-prob modes") {
  // Pool of exactly N so every step sees the deviating hypothesis.
  const auto d = make_deviation_world(8, 2, 1, 3);
  ScriptedBackend b(d.world);
  auto cfg = config_k(8);
  cfg.use_memory = false;
  const auto tl = score_video(d.manifest, cfg, b);
  CHECK(argmax_surprise(tl) == d.deviation_time);
  for (const auto& r : tl.records) CHECK(r.memory.empty());
  CHECK(b.calls().caption == 0);

  ScriptedBackend yb(d.world);
  cfg.posterior_mode = PosteriorMode::yes_prob;
  cfg.use_memory = true;
  const auto ytl = score_video(d.manifest, cfg, yb);
  CHECK(argmax_surprise(ytl) == d.deviation_time);
  CHECK(yb.calls().score_yes == 8 * 3);
  CHECK(yb.calls().score_nll == 8 * 3);
}

TEST_CASE("memory threads through the steps") {
  const auto d = make_deviation_world(4, 1);
  ScriptedBackend b(d.world);
  const auto tl = score_video(d.manifest, config_k(4), b);
  CHECK(tl.records[0].memory.empty());
  CHECK(tl.records[1].memory == tl.records[0].caption);
  CHECK(tl.records[2].memory.find(surprise::testing::deviation_caption()) != std::string::npos);
}

TEST_CASE("segment failures") {
  const auto d = make_deviation_world(8, 4);
  const auto segs = plan_segments(d.manifest, 8);
  FlakyBackend one(d.world, {segs[1].observed_frame});
  const auto tl = score_video(d.manifest, config_k(8), one);
  CHECK(tl.records[1].failed);
  CHECK(!tl.records[1].error.empty());
  CHECK(tl.raw_scores()[1] == 0.0);
  CHECK(argmax_surprise(tl) == d.deviation_time);

  std::set<std::size_t> most;
  for (std::size_t i = 0; i < 5; ++i) most.insert(segs[i].observed_frame);
  FlakyBackend many(d.world, most);
  CHECK_THROWS_AS(score_video(d.manifest, config_k(8), many), RunError);
}

TEST_CASE("normalization") {
  const auto n = normalize_scores(std::vector<double>{0, 2, 4}, NormalizeMethod::minmax);
  CHECK(n == std::vector<double>{0.0, 0.5, 1.0});
  const std::vector<double> j{0.1, 0.4, 0.2};
  CHECK(normalize_scores(j, NormalizeMethod::none) == j);
  CHECK(normalize_scores(std::vector<double>{3, 3, 3}, NormalizeMethod::minmax) ==
        std::vector<double>{0.5, 0.5, 0.5});
  CHECK(parse_normalize_method("minmax") == NormalizeMethod::minmax);
  CHECK_THROWS_AS(parse_normalize_method("zscore"), InvalidParameter);
}

TEST_CASE("argmax tie rule") {
  SurpriseTimeline tl;
  auto add = [&](double t, double s) {
    TimelineRecord r;
    r.index = tl.records.size();
    r.segment.observed_timestep = t;
    r.score.value = s;
    tl.records.push_back(r);
  };
  add(1, 0.1);
  add(2, 0.9);
  add(3, 0.3);
  CHECK(argmax_surprise(tl) == 2.0);
  tl.records.clear();
  add(1, 0.5);
  add(2, 0.5);
  CHECK(argmax_surprise(tl) == 1.0);
  tl.records.clear();
  add(4, 0.2);
  CHECK(argmax_surprise(tl) == 4.0);
  tl.records.clear();
  CHECK_THROWS_AS(argmax_surprise(tl), InvalidInput);
}

TEST_CASE("timeline round trip") {
  const auto d = make_deviation_world(4, 1);
  ScriptedBackend b(d.world);
  auto tl = score_video(d.manifest, config_k(4), b);
  tl.fingerprint = "abc";
  const auto j = tl.to_json();
  const auto back = SurpriseTimeline::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.raw_scores() == tl.raw_scores());

  auto bad = j;
  std::swap(bad["records"][0], bad["records"][1]);
  CHECK_THROWS(SurpriseTimeline::from_json(bad));
}

TEST_CASE("scoring config validation") {
  ScoringConfig c;
  CHECK_NOTHROW(c.validate());
  c.hypotheses = 1;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = {};
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
  c = {};
  CHECK(ScoringConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(ScoringConfig::from_json({{"K", "many"}}), InvalidParameter);
  CHECK(parse_posterior_mode("yes-prob") == PosteriorMode::yes_prob);
}
