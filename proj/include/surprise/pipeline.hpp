#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"
#include "surprise/belief.hpp"
#include "surprise/manifest.hpp"
#include "surprise/memory.hpp"

namespace surprise {

/// A contiguous stretch of the video ending at a scored frame.
struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::size_t observed_frame = 0;
  double observed_timestep = 0.0;  // timestamp of observed_frame
};

enum class PosteriorMode { nll, yes_prob };
std::string_view to_string(PosteriorMode mode) noexcept;
PosteriorMode parse_posterior_mode(std::string_view text);

struct ScoringConfig {
  std::size_t window = 4;         // prior-window frames
  std::size_t hypotheses = 3;     // per step
  double tau = 1.0;
  DivergenceMode mode = DivergenceMode::kl;
  PosteriorMode posterior_mode = PosteriorMode::nll;
  std::size_t segments = 0;       // 0: derive from budget_for_duration
  std::size_t budget_cap = 512;
  bool use_memory = true;
  std::size_t memory_words = 200;
  std::uint64_t seed = 42;
  double nucleus_p = 0.9;
  int max_words = 10;
  std::size_t max_in_flight = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static ScoringConfig from_json(const nlohmann::json& j);
};

struct TimelineRecord {
  std::size_t index = 0;
  Segment segment;
  SurpriseScore score;
  BeliefState belief;                     // timestep == segment.observed_timestep
  std::vector<double> prior_nll;
  std::vector<double> posterior_evidence;  // NLLs or yes-probabilities
  std::string memory;                      // H_t the step was conditioned on
  std::string caption;
  bool failed = false;
  std::string error;

  double timestep() const { return segment.observed_timestep; }
};

struct SurpriseTimeline {
  std::string video_id;
  std::string fingerprint;
  ScoringConfig config;
  FrameManifest manifest;
  std::vector<TimelineRecord> records;

  std::vector<Segment> segments() const;
  std::vector<double> raw_scores() const;  // failed records contribute 0

  nlohmann::json to_json() const;
  static SurpriseTimeline from_json(const nlohmann::json& j);
  static SurpriseTimeline load(const std::filesystem::path& path);
};

/// Frames to score for a video of this length: 8 up to one minute, doubling
/// for every further started minute, capped at `cap`.
std::size_t budget_for_duration(double duration_s, std::size_t cap = 512);

/// K equal-width segments tiling [0, duration]. Observed frames are snapped
/// to the nearest manifest frame and kept strictly increasing.
std::vector<Segment> plan_segments(const FrameManifest& manifest, std::size_t k);

/// Frames [observed - window, observed) clamped at the start of the video.
std::vector<FrameRef> prior_window(const FrameManifest& manifest, std::size_t observed,
                                   std::size_t window);

/// Runs belief tracking over every segment. Backend transport/protocol
/// failures mark a record failed; more than half failing raises RunError.
SurpriseTimeline score_video(const FrameManifest& manifest, const ScoringConfig& cfg,
                             Backend& backend, RollingMemory& memory);
SurpriseTimeline score_video(const FrameManifest& manifest, const ScoringConfig& cfg,
                             Backend& backend);

enum class NormalizeMethod { none, minmax };
std::string_view to_string(NormalizeMethod m) noexcept;
NormalizeMethod parse_normalize_method(std::string_view text);

std::vector<double> normalize_scores(const std::vector<double>& scores, NormalizeMethod method);
std::vector<double> normalize_scores(const SurpriseTimeline& timeline, NormalizeMethod method);

/// Timestep of the highest score, earliest on ties. Failed records are skipped.
double argmax_surprise(const SurpriseTimeline& timeline);

}  // namespace surprise
