#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"
#include "surprise/pipeline.hpp"

namespace surprise {

struct Interval {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
  bool operator==(const Interval&) const = default;
};

/// Sorted, pairwise-disjoint intervals. Overlapping or touching inputs merge;
/// empty intervals are dropped.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> intervals);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }
  double coverage() const;

  IntervalSet intersect(const IntervalSet& other) const;
  bool operator==(const IntervalSet&) const = default;

 private:
  std::vector<Interval> intervals_;
};

struct GroundTruth {
  enum class Kind { transition_time, windows };

  std::string video_id;
  Kind kind = Kind::transition_time;
  std::optional<double> transition;
  std::vector<Interval> windows;
  std::vector<double> window_scores;  // optional, aligned with windows

  void validate() const;
  /// The transition itself, or the centre of the most surprising window
  /// (highest score; without scores, the longest; earliest on ties).
  double transition_time() const;
};

std::vector<GroundTruth> load_annotations(const std::filesystem::path& path);
std::vector<GroundTruth> annotations_from_json(const nlohmann::json& j);

int accuracy_at_delta(double predicted, double truth, double delta);

/// Maximal runs of consecutive scores >= rel_threshold * max, each spanning
/// from the start of its first segment to the end of its last.
IntervalSet predicted_windows(std::span<const double> scores, std::span<const Segment> segments,
                              double rel_threshold);
IntervalSet predicted_windows(const SurpriseTimeline& timeline, double rel_threshold);

/// Intersection coverage over union coverage; 0 when both are empty.
double temporal_iou(const IntervalSet& predicted, const IntervalSet& truth);

using Embedder = std::function<Embedding(std::string_view)>;

/// Mean (1 - cosine) over unordered pairs, clamped to [0, 1].
double diversity(std::span<const std::string> hypotheses, const Embedder& embed);
double diversity(std::span<const std::string> hypotheses, Backend& backend);

/// Pearson correlation of average ranks. 0 if either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// Mean Acc@delta of uniformly random predicted times over [0, duration].
double random_baseline(double duration, double truth, double delta, std::size_t trials,
                       std::uint64_t seed);

struct VideoMetrics {
  std::string video_id;
  double predicted_time = 0.0;
  double truth_time = 0.0;
  std::vector<int> accuracy;        // one per delta
  std::optional<double> iou;        // only for window annotations
};

struct MetricsReport {
  std::vector<double> deltas;
  double rel_threshold = 0.8;
  std::vector<VideoMetrics> videos;
  std::vector<std::string> unmatched_timelines;
  std::vector<std::string> unmatched_annotations;

  std::vector<double> mean_accuracy() const;
  std::optional<double> mean_iou() const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

MetricsReport evaluate(std::span<const SurpriseTimeline> timelines,
                       std::span<const GroundTruth> annotations, std::span<const double> deltas,
                       double rel_threshold);

}  // namespace surprise
