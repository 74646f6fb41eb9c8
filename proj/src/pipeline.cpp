#include "surprise/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "parallel.hpp"
#include "surprise/error.hpp"
#include "surprise/rng.hpp"

namespace surprise {

using nlohmann::json;

std::string_view to_string(PosteriorMode mode) noexcept {
  return mode == PosteriorMode::nll ? "nll" : "yes-prob";
}

PosteriorMode parse_posterior_mode(std::string_view text) {
  if (text == "nll") return PosteriorMode::nll;
  if (text == "yes-prob" || text == "yes_prob") return PosteriorMode::yes_prob;
  throw InvalidParameter("unknown posterior mode '" + std::string(text) + "' (expected nll or yes-prob)");
}

std::string_view to_string(NormalizeMethod m) noexcept {
  return m == NormalizeMethod::none ? "none" : "minmax";
}

NormalizeMethod parse_normalize_method(std::string_view text) {
  if (text == "none") return NormalizeMethod::none;
  if (text == "minmax") return NormalizeMethod::minmax;
  throw InvalidParameter("unknown normalization '" + std::string(text) + "' (expected none or minmax)");
}

void ScoringConfig::validate() const {
  if (window < 1) throw InvalidParameter("prior window W must be >= 1");
  if (hypotheses < 2) throw InvalidParameter("hypothesis count N must be >= 2");
  Temperature{tau};
  if (budget_cap < 2) throw InvalidParameter("budget cap must be >= 2");
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) throw InvalidParameter("nucleus_p must lie in (0, 1]");
  if (max_words < 1) throw InvalidParameter("max_words must be >= 1");
  if (max_in_flight < 1) throw InvalidParameter("max_in_flight must be >= 1");
}

json ScoringConfig::to_json() const {
  return {{"W", window},
          {"N", hypotheses},
          {"tau", tau},
          {"mode", std::string(to_string(mode))},
          {"posterior_mode", std::string(to_string(posterior_mode))},
          {"K", segments == 0 ? json("auto") : json(segments)},
          {"budget_cap", budget_cap},
          {"use_memory", use_memory},
          {"memory_words", memory_words},
          {"seed", seed},
          {"nucleus_p", nucleus_p},
          {"max_words", max_words},
          {"max_in_flight", max_in_flight}};
}

ScoringConfig ScoringConfig::from_json(const json& j) {
  ScoringConfig c;
  try {
    c.window = j.value("W", c.window);
    c.hypotheses = j.value("N", c.hypotheses);
    c.tau = j.value("tau", c.tau);
    if (j.contains("mode")) c.mode = parse_divergence_mode(j["mode"].get<std::string>());
    if (j.contains("posterior_mode")) {
      c.posterior_mode = parse_posterior_mode(j["posterior_mode"].get<std::string>());
    }
    if (j.contains("K")) {
      const auto& k = j["K"];
      if (k.is_string()) {
        if (k.get<std::string>() != "auto") throw InvalidParameter("K must be a count or \"auto\"");
        c.segments = 0;
      } else {
        c.segments = k.get<std::size_t>();
      }
    }
    c.budget_cap = j.value("budget_cap", c.budget_cap);
    c.use_memory = j.value("use_memory", c.use_memory);
    c.memory_words = j.value("memory_words", c.memory_words);
    c.seed = j.value("seed", c.seed);
    c.nucleus_p = j.value("nucleus_p", c.nucleus_p);
    c.max_words = j.value("max_words", c.max_words);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("scoring config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t budget_for_duration(double duration_s, std::size_t cap) {
  if (!std::isfinite(duration_s) || duration_s <= 0.0) {
    throw InvalidInput("duration must be positive");
  }
  std::size_t budget = 8;
  const double minutes = std::ceil(duration_s / 60.0);
  for (double m = 1.0; m < minutes && budget < cap; m += 1.0) budget *= 2;
  return std::min(budget, cap);
}

std::vector<Segment> plan_segments(const FrameManifest& manifest, std::size_t k) {
  const std::size_t n = manifest.frames.size();
  if (k == 0) throw InvalidParameter("segment count K must be positive");
  if (k > n) {
    throw InvalidParameter("segment count K=" + std::to_string(k) + " exceeds frame count " +
                           std::to_string(n));
  }
  const double width = manifest.duration / static_cast<double>(k);
  std::vector<Segment> out(k);
  std::size_t prev = 0;
  for (std::size_t i = 0; i < k; ++i) {
    auto& s = out[i];
    s.start = i == 0 ? 0.0 : out[i - 1].end;
    s.end = i + 1 == k ? manifest.duration : width * static_cast<double>(i + 1);
    std::size_t idx = manifest.nearest_frame(s.end);
    if (i > 0) idx = std::max(idx, prev + 1);
    idx = std::min(idx, n - (k - i));  // leave room for the remaining segments
    s.observed_frame = idx;
    s.observed_timestep = manifest.frames[idx].timestamp;
    prev = idx;
  }
  return out;
}

std::vector<FrameRef> prior_window(const FrameManifest& manifest, std::size_t observed,
                                   std::size_t window) {
  const std::size_t first = observed > window ? observed - window : 0;
  return {manifest.frames.begin() + static_cast<std::ptrdiff_t>(first),
          manifest.frames.begin() + static_cast<std::ptrdiff_t>(observed)};
}

namespace {

// Scores one segment given the history text; fills everything but caption.
void score_step(const FrameManifest& manifest, const ScoringConfig& cfg, Backend& backend,
                const std::string& history, TimelineRecord& rec) {
  Context prior_ctx{history, prior_window(manifest, rec.segment.observed_frame, cfg.window), {}};
  Context post_ctx = prior_ctx;
  post_ctx.observed_frame = manifest.frames[rec.segment.observed_frame];

  GenerationParams gen;
  gen.n = static_cast<int>(cfg.hypotheses);
  gen.nucleus_p = cfg.nucleus_p;
  gen.max_words = cfg.max_words;
  gen.seed = mix_seed(cfg.seed, rec.index);
  auto hyps = backend.generate_hypotheses(prior_ctx, gen);

  const std::size_t n = hyps.size();
  std::vector<double> prior_nll(n), evidence(n);
  detail::parallel_for(2 * n, cfg.max_in_flight, [&](std::size_t j) {
    if (j < n) {
      prior_nll[j] = backend.score_nll(hyps[j], prior_ctx);
    } else if (cfg.posterior_mode == PosteriorMode::nll) {
      evidence[j - n] = backend.score_nll(hyps[j - n], post_ctx);
    } else {
      evidence[j - n] = backend.score_posterior_yes(hyps[j - n], post_ctx);
    }
  });

  const Temperature tau{cfg.tau};
  Distribution prior = distribution_from_nll(prior_nll, tau);
  Distribution post;
  if (cfg.posterior_mode == PosteriorMode::nll) {
    post = distribution_from_nll(evidence, tau);
  } else {
    const double total = std::accumulate(evidence.begin(), evidence.end(), 0.0);
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    if (total > 0.0) {
      for (std::size_t j = 0; j < n; ++j) p[j] = evidence[j] / total;
    }
    post = Distribution(std::move(p));
  }

  rec.score = surprise(prior, post, cfg.mode);
  rec.belief = BeliefState{std::move(hyps), std::move(prior), std::move(post),
                           rec.segment.observed_timestep};
  rec.prior_nll = std::move(prior_nll);
  rec.posterior_evidence = std::move(evidence);
  rec.memory = history;
}

void mark_failed(TimelineRecord& rec, const Error& e) {
  rec.failed = true;
  rec.error = std::string(to_string(e.kind())) + ": " + e.what();
  rec.score = SurpriseScore{0.0, rec.score.mode};
}

}  // namespace

SurpriseTimeline score_video(const FrameManifest& manifest, const ScoringConfig& cfg,
                             Backend& backend, RollingMemory& memory) {
  cfg.validate();
  if (manifest.frames.empty()) throw InvalidInput("manifest has no frames");
  std::size_t k = cfg.segments;
  if (k == 0) k = std::min(budget_for_duration(manifest.duration, cfg.budget_cap), manifest.frames.size());

  SurpriseTimeline tl;
  tl.video_id = manifest.video_id;
  tl.config = cfg;
  tl.manifest = manifest;
  const auto segments = plan_segments(manifest, k);
  tl.records.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    tl.records[i].index = i;
    tl.records[i].segment = segments[i];
    tl.records[i].score.mode = cfg.mode;
  }

  // Transport and protocol problems are per-segment; anything else (bad
  // input, missing capability) aborts the run.
  auto guarded = [&](TimelineRecord& rec, auto&& body) {
    try {
      body();
    } catch (const TransportError& e) {
      mark_failed(rec, e);
    } catch (const ProtocolError& e) {
      mark_failed(rec, e);
    }
  };

  if (cfg.use_memory) {
    memory.word_budget = cfg.memory_words;
    for (auto& rec : tl.records) {
      guarded(rec, [&] {
        score_step(manifest, cfg, backend, memory.text, rec);
        Context ctx{memory.text, prior_window(manifest, rec.segment.observed_frame, cfg.window),
                    manifest.frames[rec.segment.observed_frame]};
        rec.caption = describe_event(backend, ctx);
        memory = append_and_compress(std::move(memory), rec.caption, backend);
      });
    }
  } else {
    detail::parallel_for(k, cfg.max_in_flight, [&](std::size_t i) {
      guarded(tl.records[i], [&] { score_step(manifest, cfg, backend, std::string(), tl.records[i]); });
    });
  }

  const auto failed = static_cast<std::size_t>(
      std::count_if(tl.records.begin(), tl.records.end(), [](const auto& r) { return r.failed; }));
  if (2 * failed > k) {
    throw RunError(std::to_string(failed) + " of " + std::to_string(k) +
                   " segments failed; first error: " +
                   std::find_if(tl.records.begin(), tl.records.end(),
                                [](const auto& r) { return r.failed; })->error);
  }
  return tl;
}

SurpriseTimeline score_video(const FrameManifest& manifest, const ScoringConfig& cfg,
                             Backend& backend) {
  RollingMemory memory;
  return score_video(manifest, cfg, backend, memory);
}

std::vector<Segment> SurpriseTimeline::segments() const {
  std::vector<Segment> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.segment);
  return out;
}

std::vector<double> SurpriseTimeline::raw_scores() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.failed ? 0.0 : r.score.value);
  return out;
}

std::vector<double> normalize_scores(const std::vector<double>& scores, NormalizeMethod method) {
  if (method == NormalizeMethod::none || scores.empty()) return scores;
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(scores.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - min) / range;
  }
  return out;
}

std::vector<double> normalize_scores(const SurpriseTimeline& timeline, NormalizeMethod method) {
  if (timeline.records.empty()) throw InvalidInput("timeline is empty");
  std::vector<double> ok;
  for (const auto& r : timeline.records) {
    if (!r.failed) ok.push_back(r.score.value);
  }
  const auto norm = normalize_scores(ok, method);
  std::vector<double> out;
  out.reserve(timeline.records.size());
  std::size_t j = 0;
  for (const auto& r : timeline.records) out.push_back(r.failed ? 0.0 : norm[j++]);
  return out;
}

double argmax_surprise(const SurpriseTimeline& timeline) {
  const TimelineRecord* best = nullptr;
  for (const auto& r : timeline.records) {
    if (r.failed) continue;
    if (!best || r.score.value > best->score.value) best = &r;
  }
  if (!best) throw InvalidInput("timeline has no scored records");
  return best->timestep();
}

json SurpriseTimeline::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    json e{{"index", r.index},
           {"timestep", r.timestep()},
           {"segment", {r.segment.start, r.segment.end}},
           {"frame_index", r.segment.observed_frame},
           {"score", r.score.value},
           {"mode", std::string(to_string(r.score.mode))},
           {"failed", r.failed}};
    if (r.failed) {
      e["error"] = r.error;
    } else {
      e["belief"] = {{"hypotheses", r.belief.hypotheses},
                     {"prior", std::vector<double>(r.belief.prior.probs().begin(), r.belief.prior.probs().end())},
                     {"posterior", std::vector<double>(r.belief.posterior.probs().begin(),
                                                       r.belief.posterior.probs().end())},
                     {"prior_nll", r.prior_nll},
                     {"posterior_evidence", r.posterior_evidence}};
      e["memory"] = r.memory;
      e["caption"] = r.caption;
    }
    recs.push_back(std::move(e));
  }
  return {{"format", "surprise-timeline/1"},
          {"video_id", video_id},
          {"fingerprint", fingerprint},
          {"config", config.to_json()},
          {"manifest", manifest.to_json()},
          {"records", std::move(recs)}};
}

SurpriseTimeline SurpriseTimeline::from_json(const json& j) {
  SurpriseTimeline tl;
  try {
    if (j.value("format", "") != "surprise-timeline/1") {
      throw InvalidInput("not a surprise timeline (format field missing or unknown)");
    }
    tl.video_id = j.at("video_id").get<std::string>();
    tl.fingerprint = j.value("fingerprint", "");
    tl.config = ScoringConfig::from_json(j.at("config"));
    tl.manifest = FrameManifest::from_json(j.at("manifest"));
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& e : j.at("records")) {
      TimelineRecord r;
      r.index = e.at("index").get<std::size_t>();
      r.segment.start = e.at("segment").at(0).get<double>();
      r.segment.end = e.at("segment").at(1).get<double>();
      r.segment.observed_frame = e.at("frame_index").get<std::size_t>();
      r.segment.observed_timestep = e.at("timestep").get<double>();
      r.score.value = e.at("score").get<double>();
      r.score.mode = parse_divergence_mode(e.at("mode").get<std::string>());
      r.failed = e.value("failed", false);
      r.error = e.value("error", "");
      if (!r.failed) {
        const auto& b = e.at("belief");
        r.belief.hypotheses = b.at("hypotheses").get<std::vector<std::string>>();
        r.belief.prior = Distribution(b.at("prior").get<std::vector<double>>());
        r.belief.posterior = Distribution(b.at("posterior").get<std::vector<double>>());
        r.belief.timestep = r.segment.observed_timestep;
        r.belief.validate();
        r.prior_nll = b.value("prior_nll", std::vector<double>{});
        r.posterior_evidence = b.value("posterior_evidence", std::vector<double>{});
        r.memory = e.value("memory", "");
        r.caption = e.value("caption", "");
      }
      if (!(r.timestep() > prev)) throw InvalidInput("timeline timesteps must be strictly increasing");
      if (r.segment.observed_frame >= tl.manifest.frames.size()) {
        throw InvalidInput("timeline frame index outside manifest");
      }
      prev = r.timestep();
      tl.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed timeline: ") + e.what());
  }
  if (tl.records.empty()) throw InvalidInput("timeline has no records");
  return tl;
}

SurpriseTimeline SurpriseTimeline::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open timeline " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("timeline " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

}  // namespace surprise
