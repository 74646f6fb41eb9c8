#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/belief.hpp"
#include "surprise/manifest.hpp"
#include "surprise/pipeline.hpp"

namespace surprise {

struct SamplingPlan {
  std::vector<std::size_t> frame_indices;       // ascending, duplicates kept
  std::vector<std::size_t> per_segment_counts;  // aligned with the segments used
  std::uint64_t seed = 0;
  std::string source_fingerprint;

  nlohmann::json to_json() const;
  static SamplingPlan from_json(const nlohmann::json& j);
};

/// softmax(score / tau_s); exactly uniform when all scores agree within 1e-12.
Distribution segment_probabilities(std::span<const double> scores, Temperature tau_s);

/// F independent draws: a segment by `probs`, then a uniform timestamp in it,
/// mapped to the nearest manifest frame. With `distinct`, repeated frames are
/// redrawn (F must not exceed the frame count).
SamplingPlan sample_frames(const Distribution& probs, std::span<const Segment> segments,
                           const FrameManifest& manifest, std::size_t frame_budget,
                           std::uint64_t seed, bool distinct = false);

/// Evenly spaced frames at the midpoints of F equal slices of the frame list.
/// Per-segment counts are filled in when `segments` is non-empty.
SamplingPlan uniform_plan(const FrameManifest& manifest, std::size_t frame_budget,
                          std::span<const Segment> segments = {});

/// Segment containing time t (segments are [start, end), the last one closed).
std::size_t segment_of(std::span<const Segment> segments, double t);

}  // namespace surprise
