#include "surprise/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "surprise/error.hpp"
#include "surprise/rng.hpp"

namespace surprise {

using nlohmann::json;

json SamplingPlan::to_json() const {
  return {{"frame_indices", frame_indices},
          {"per_segment_counts", per_segment_counts},
          {"seed", seed},
          {"source_fingerprint", source_fingerprint}};
}

SamplingPlan SamplingPlan::from_json(const json& j) {
  SamplingPlan p;
  try {
    p.frame_indices = j.at("frame_indices").get<std::vector<std::size_t>>();
    p.per_segment_counts = j.value("per_segment_counts", std::vector<std::size_t>{});
    p.seed = j.value("seed", std::uint64_t{0});
    p.source_fingerprint = j.value("source_fingerprint", "");
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed sampling plan: ") + e.what());
  }
  return p;
}

Distribution segment_probabilities(std::span<const double> scores, Temperature tau_s) {
  if (scores.empty()) throw InvalidInput("no segment scores");
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidInput("segment scores must be finite");
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*hi - *lo <= 1e-12) {
    return Distribution(std::vector<double>(scores.size(), 1.0 / static_cast<double>(scores.size())));
  }
  std::vector<double> neg(scores.size());
  std::transform(scores.begin(), scores.end(), neg.begin(), [](double s) { return -s; });
  return Distribution(softmax_neg(neg, tau_s.value()));
}

std::size_t segment_of(std::span<const Segment> segments, double t) {
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    if (t < segments[i].end) return i;
  }
  return segments.empty() ? 0 : segments.size() - 1;
}

namespace {

std::size_t draw_segment(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // u landed in the rounding gap above the total
}

}  // namespace

SamplingPlan sample_frames(const Distribution& probs, std::span<const Segment> segments,
                           const FrameManifest& manifest, std::size_t frame_budget,
                           std::uint64_t seed, bool distinct) {
  if (manifest.frames.empty()) throw InvalidInput("cannot sample from an empty manifest");
  if (frame_budget < 1) throw InvalidParameter("frame budget F must be >= 1");
  if (probs.size() != segments.size() || segments.empty()) {
    throw ShapeError("segment probabilities and segments differ in length");
  }
  if (distinct && frame_budget > manifest.frames.size()) {
    throw InvalidParameter("cannot draw more distinct frames than the manifest holds");
  }

  std::mt19937_64 rng(seed);
  SamplingPlan plan;
  plan.seed = seed;
  plan.per_segment_counts.assign(segments.size(), 0);
  std::set<std::size_t> used;
  const std::size_t max_attempts = 100 * frame_budget;

  for (std::size_t attempt = 0; plan.frame_indices.size() < frame_budget; ++attempt) {
    const std::size_t seg = draw_segment(probs.probs(), rng);
    const auto& s = segments[seg];
    const double t = s.start + uniform01(rng) * (s.end - s.start);
    std::size_t idx = manifest.nearest_frame(t);
    if (distinct && used.count(idx)) {
      if (attempt < max_attempts) continue;
      // Give up on chance and take the closest unused frame.
      std::size_t best = manifest.frames.size();
      double best_d = INFINITY;
      for (std::size_t f = 0; f < manifest.frames.size(); ++f) {
        const double d = std::abs(manifest.frames[f].timestamp - t);
        if (!used.count(f) && d < best_d) {
          best = f;
          best_d = d;
        }
      }
      idx = best;
    }
    used.insert(idx);
    plan.frame_indices.push_back(idx);
    plan.per_segment_counts[seg]++;
  }
  std::sort(plan.frame_indices.begin(), plan.frame_indices.end());
  return plan;
}

SamplingPlan uniform_plan(const FrameManifest& manifest, std::size_t frame_budget,
                          std::span<const Segment> segments) {
  if (manifest.frames.empty()) throw InvalidInput("cannot sample from an empty manifest");
  if (frame_budget < 1) throw InvalidParameter("frame budget F must be >= 1");
  const std::size_t n = manifest.frames.size();
  SamplingPlan plan;
  plan.per_segment_counts.assign(segments.size(), 0);
  for (std::size_t j = 0; j < frame_budget; ++j) {
    const double pos = (static_cast<double>(j) + 0.5) * static_cast<double>(n) /
                       static_cast<double>(frame_budget);
    const auto idx = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
    plan.frame_indices.push_back(idx);
    if (!segments.empty()) plan.per_segment_counts[segment_of(segments, manifest.frames[idx].timestamp)]++;
  }
  return plan;
}

}  // namespace surprise
