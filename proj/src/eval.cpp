#include "surprise/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "surprise/error.hpp"
#include "surprise/rng.hpp"

namespace surprise {

using nlohmann::json;

IntervalSet::IntervalSet(std::vector<Interval> intervals) {
  intervals.erase(std::remove_if(intervals.begin(), intervals.end(),
                                 [](const Interval& i) { return !(i.end > i.start); }),
                  intervals.end());
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  for (const auto& i : intervals) {
    if (!intervals_.empty() && i.start <= intervals_.back().end) {
      intervals_.back().end = std::max(intervals_.back().end, i.end);
    } else {
      intervals_.push_back(i);
    }
  }
}

double IntervalSet::coverage() const {
  double total = 0.0;
  for (const auto& i : intervals_) total += i.length();
  return total;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
  std::vector<Interval> out;
  std::size_t a = 0, b = 0;
  const auto& x = intervals_;
  const auto& y = other.intervals_;
  while (a < x.size() && b < y.size()) {
    const double lo = std::max(x[a].start, y[b].start);
    const double hi = std::min(x[a].end, y[b].end);
    if (hi > lo) out.push_back({lo, hi});
    (x[a].end < y[b].end) ? ++a : ++b;
  }
  return IntervalSet(std::move(out));
}

void GroundTruth::validate() const {
  if (kind == Kind::transition_time) {
    if (!transition || !std::isfinite(*transition) || !windows.empty()) {
      throw InvalidInput("annotation '" + video_id + "': expected exactly a transition time");
    }
    return;
  }
  if (transition || windows.empty()) {
    throw InvalidInput("annotation '" + video_id + "': expected exactly a non-empty window list");
  }
  if (!window_scores.empty() && window_scores.size() != windows.size()) {
    throw InvalidInput("annotation '" + video_id + "': window_scores length mismatch");
  }
  auto sorted = windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const Interval& a, const Interval& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].start < sorted[i].end)) {
      throw InvalidInput("annotation '" + video_id + "': window start must precede end");
    }
    if (i > 0 && sorted[i].start < sorted[i - 1].end) {
      throw InvalidInput("annotation '" + video_id + "': windows overlap");
    }
  }
}

double GroundTruth::transition_time() const {
  if (kind == Kind::transition_time) return *transition;
  std::size_t best = 0;
  for (std::size_t i = 1; i < windows.size(); ++i) {
    const double key_i = window_scores.empty() ? windows[i].length() : window_scores[i];
    const double key_b = window_scores.empty() ? windows[best].length() : window_scores[best];
    if (key_i > key_b || (key_i == key_b && windows[i].start < windows[best].start)) best = i;
  }
  return 0.5 * (windows[best].start + windows[best].end);
}

std::vector<GroundTruth> annotations_from_json(const json& j) {
  const json& list = j.is_array() ? j : j.at("videos");
  std::vector<GroundTruth> out;
  try {
    for (const auto& e : list) {
      GroundTruth g;
      g.video_id = e.at("video_id").get<std::string>();
      const bool has_t = e.contains("transition");
      const bool has_w = e.contains("windows");
      if (has_t == has_w) {
        throw InvalidInput("annotation '" + g.video_id + "' needs exactly one of transition/windows");
      }
      if (has_t) {
        g.kind = GroundTruth::Kind::transition_time;
        g.transition = e["transition"].get<double>();
      } else {
        g.kind = GroundTruth::Kind::windows;
        for (const auto& w : e["windows"]) g.windows.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
        g.window_scores = e.value("window_scores", std::vector<double>{});
      }
      g.validate();
      out.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed annotations: ") + e.what());
  }
  return out;
}

std::vector<GroundTruth> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open annotations " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("annotations " + path.string() + " are not valid JSON: " + e.what());
  }
  return annotations_from_json(j);
}

int accuracy_at_delta(double predicted, double truth, double delta) {
  if (!(delta > 0.0)) throw InvalidParameter("delta must be positive");
  return std::abs(predicted - truth) <= delta ? 1 : 0;
}

IntervalSet predicted_windows(std::span<const double> scores, std::span<const Segment> segments,
                              double rel_threshold) {
  if (scores.empty()) throw InvalidInput("cannot find windows in an empty timeline");
  if (scores.size() != segments.size()) throw ShapeError("scores and segments differ in length");
  if (!(rel_threshold > 0.0 && rel_threshold <= 1.0)) {
    throw InvalidParameter("relative threshold must lie in (0, 1]");
  }
  const double cut = rel_threshold * *std::max_element(scores.begin(), scores.end());
  std::vector<Interval> runs;
  std::size_t i = 0;
  while (i < scores.size()) {
    if (scores[i] < cut) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < scores.size() && scores[j + 1] >= cut) ++j;
    runs.push_back({segments[i].start, segments[j].end});
    i = j + 1;
  }
  return IntervalSet(std::move(runs));
}

IntervalSet predicted_windows(const SurpriseTimeline& timeline, double rel_threshold) {
  const auto scores = timeline.raw_scores();
  const auto segments = timeline.segments();
  return predicted_windows(scores, segments, rel_threshold);
}

double temporal_iou(const IntervalSet& predicted, const IntervalSet& truth) {
  const double inter = predicted.intersect(truth).coverage();
  const double uni = predicted.coverage() + truth.coverage() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double diversity(std::span<const std::string> hypotheses, const Embedder& embed) {
  if (hypotheses.size() < 2) throw InvalidInput("diversity needs at least two hypotheses");
  std::vector<Embedding> vecs;
  vecs.reserve(hypotheses.size());
  for (const auto& h : hypotheses) vecs.push_back(embed(h));
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      total += 1.0 - cosine(vecs[i], vecs[j]);
      ++pairs;
    }
  }
  return std::clamp(total / static_cast<double>(pairs), 0.0, 1.0);
}

double diversity(std::span<const std::string> hypotheses, Backend& backend) {
  return diversity(hypotheses, [&backend](std::string_view t) { return backend.embed(t); });
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: inputs differ in length");
  if (a.size() < 2) throw InvalidInput("spearman: need at least two observations");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double random_baseline(double duration, double truth, double delta, std::size_t trials,
                       std::uint64_t seed) {
  if (trials < 1) throw InvalidParameter("random baseline needs at least one trial");
  if (!(duration > 0.0)) throw InvalidInput("duration must be positive");
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    hits += static_cast<std::size_t>(accuracy_at_delta(uniform01(rng) * duration, truth, delta));
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

std::vector<double> MetricsReport::mean_accuracy() const {
  std::vector<double> out(deltas.size(), 0.0);
  if (videos.empty()) return out;
  for (const auto& v : videos) {
    for (std::size_t d = 0; d < deltas.size(); ++d) out[d] += v.accuracy[d];
  }
  for (double& x : out) x /= static_cast<double>(videos.size());
  return out;
}

std::optional<double> MetricsReport::mean_iou() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& v : videos) {
    if (v.iou) {
      total += *v.iou;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

namespace {

std::string delta_label(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "acc@%g", d);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

json MetricsReport::to_json() const {
  json per_video = json::array();
  for (const auto& v : videos) {
    json e{{"video_id", v.video_id}, {"predicted_time", v.predicted_time}, {"truth_time", v.truth_time}};
    for (std::size_t d = 0; d < deltas.size(); ++d) e[delta_label(deltas[d])] = v.accuracy[d];
    e["iou"] = v.iou ? json(*v.iou) : json(nullptr);
    per_video.push_back(std::move(e));
  }
  json aggregate{{"videos", videos.size()}};
  const auto acc = mean_accuracy();
  for (std::size_t d = 0; d < deltas.size(); ++d) aggregate[delta_label(deltas[d])] = acc[d];
  const auto iou = mean_iou();
  aggregate["iou"] = iou ? json(*iou) : json(nullptr);
  return {{"deltas", deltas},
          {"rel_threshold", rel_threshold},
          {"per_video", std::move(per_video)},
          {"aggregate", std::move(aggregate)},
          {"unmatched_timelines", unmatched_timelines},
          {"unmatched_annotations", unmatched_annotations}};
}

std::string MetricsReport::to_csv() const {
  std::string out = "video_id,predicted_time,truth_time";
  for (double d : deltas) out += "," + delta_label(d);
  out += ",iou\n";
  for (const auto& v : videos) {
    out += v.video_id + "," + num(v.predicted_time) + "," + num(v.truth_time);
    for (int a : v.accuracy) out += "," + std::to_string(a);
    out += "," + (v.iou ? num(*v.iou) : std::string()) + "\n";
  }
  out += "MEAN,,";
  for (double a : mean_accuracy()) out += "," + num(a);
  const auto iou = mean_iou();
  out += "," + (iou ? num(*iou) : std::string()) + "\n";
  return out;
}

MetricsReport evaluate(std::span<const SurpriseTimeline> timelines,
                       std::span<const GroundTruth> annotations, std::span<const double> deltas,
                       double rel_threshold) {
  for (double d : deltas) {
    if (!(d > 0.0)) throw InvalidParameter("every delta must be positive");
  }
  MetricsReport report;
  report.deltas.assign(deltas.begin(), deltas.end());
  report.rel_threshold = rel_threshold;

  std::map<std::string, const GroundTruth*> by_id;
  for (const auto& g : annotations) by_id.emplace(g.video_id, &g);
  std::map<std::string, bool> seen;

  for (const auto& tl : timelines) {
    const auto it = by_id.find(tl.video_id);
    if (it == by_id.end()) {
      report.unmatched_timelines.push_back(tl.video_id);
      continue;
    }
    seen[tl.video_id] = true;
    const GroundTruth& g = *it->second;
    VideoMetrics m;
    m.video_id = tl.video_id;
    m.predicted_time = argmax_surprise(tl);
    m.truth_time = g.transition_time();
    for (double d : deltas) m.accuracy.push_back(accuracy_at_delta(m.predicted_time, m.truth_time, d));
    if (g.kind == GroundTruth::Kind::windows) {
      m.iou = temporal_iou(predicted_windows(tl, rel_threshold), IntervalSet(g.windows));
    }
    report.videos.push_back(std::move(m));
  }
  for (const auto& g : annotations) {
    if (!seen.count(g.video_id)) report.unmatched_annotations.push_back(g.video_id);
  }
  return report;
}

}  // namespace surprise
