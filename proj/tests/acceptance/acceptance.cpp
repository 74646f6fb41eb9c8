// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/worlds.hpp"
#include "surprise/belief.hpp"
#include "surprise/cli.hpp"
#include "surprise/eval.hpp"
#include "surprise/grpo.hpp"
#include "surprise/pipeline.hpp"
#include "surprise/sampler.hpp"

using namespace surprise;
namespace fs = std::filesystem;

namespace {

const fs::path kData = SURPRISE_TEST_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& why) {
    if (!ok && pass) detail = why;
    pass = pass && ok;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  for (auto& v : p) v = e(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= s;
  return p;
}

// ---------------------------------------------------------------- 1
Outcome math_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> shift(-50.0, 50.0), nll(0.0, 20.0), temp(0.05, 5.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 9);
    const auto p = random_simplex(rng, n);
    const auto q = (trial % 10 == 0) ? p : random_simplex(rng, n);
    const bool equal = p == q;

    const double kl = kl_divergence(p, q);
    o.require(kl >= 0.0, "KL negative");
    o.require(equal == (kl <= 1e-9), "KL zero iff equal violated at trial " + std::to_string(trial));

    const double j1 = jsd(p, q), j2 = jsd(q, p);
    o.require(j1 >= 0.0 && j1 <= 1.0, "JSD outside [0, 1]");
    o.require(std::abs(j1 - j2) <= 1e-12, "JSD asymmetric");

    std::vector<double> x(n);
    for (auto& v : x) v = nll(rng);
    const double c = shift(rng);
    std::vector<double> xc(x);
    for (auto& v : xc) v += c;
    const Temperature tau{temp(rng)};
    const auto a = distribution_from_nll(x, tau);
    const auto b = distribution_from_nll(xc, tau);
    for (std::size_t i = 0; i < n; ++i) o.require(std::abs(a[i] - b[i]) <= 1e-12, "softmax not shift-invariant");

    // Raising the temperature never sharpens the belief.
    const double t1 = temp(rng), t2 = t1 * (1.0 + temp(rng));
    const auto lo = distribution_from_nll(x, Temperature{t1});
    const auto hi = distribution_from_nll(x, Temperature{t2});
    const double max_lo = *std::max_element(lo.probs().begin(), lo.probs().end());
    const double max_hi = *std::max_element(hi.probs().begin(), hi.probs().end());
    o.require(max_hi <= max_lo + 1e-12, "temperature monotonicity violated");
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 5.0, "runtime " + fmt("%.2f s", elapsed));
  if (o.pass) o.detail = "10000 pairs in " + fmt("%.2f s", elapsed);
  return o;
}

// ---------------------------------------------------------------- 2
Outcome hand_values() {
  Outcome o;
  const std::vector<double> nlls{std::log(2.0), std::log(4.0), std::log(4.0)};
  const auto d = distribution_from_nll(nlls, Temperature{1.0});
  o.require(std::abs(d[0] - 0.5) <= 1e-12 && std::abs(d[1] - 0.25) <= 1e-12 && std::abs(d[2] - 0.25) <= 1e-12,
            "distribution_from_nll");

  const std::vector<double> post{0.5, 0.5}, prior{0.25, 0.75};
  const double kl = kl_divergence(post, prior);
  o.require(std::abs(kl - 0.14384) <= 1e-4, "KL = " + fmt("%.6f", kl));

  const auto adv = normalize_advantages(std::vector<double>{0.2, 0.5, 0.8});
  o.require(std::abs(adv[0] + 1.2247) <= 1e-4 && std::abs(adv[1]) <= 1e-4 && std::abs(adv[2] - 1.2247) <= 1e-4,
            "advantages");

  RolloutGroup g;
  for (double s : {-10.0, -4.0}) {
    Trajectory t;
    t.hypothesis_logprobs = {{s}};
    g.trajectories.push_back(t);
  }
  g.advantages = {1.0, -1.0};
  // By hand: -(1/2) * (1 * -10 + -1 * -4) = 3. A value of 7.0 for these
  // inputs would need both sums weighted by +1.
  const double loss = belief_loss(g);
  o.require(loss == 3.0, "loss = " + fmt("%.17g", loss));
  if (o.pass) {
    o.detail = "KL " + fmt("%.5f", kl) + ", loss " + fmt("%g", loss) +
               " (stated 7.0 inconsistent with its inputs; formula value checked)";
  }
  return o;
}

// ---------------------------------------------------------------- 3
Outcome sampling_fidelity() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::vector<double> scores{0.7, 0.0, 0.7, 0.0};
  const auto probs = segment_probabilities(scores, Temperature{0.7});
  const std::vector<double> target{0.3655, 0.1345, 0.3655, 0.1345};
  for (std::size_t i = 0; i < 4; ++i) {
    o.require(std::abs(probs[i] - target[i]) <= 1e-4, "analytic probabilities");
  }

  const auto m = FrameManifest::regular("fidelity", 10.0, 400);
  const auto segs = plan_segments(m, 4);
  const std::size_t draws = 100000;
  const auto plan = sample_frames(probs, segs, m, draws, 77);
  double worst = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double freq = static_cast<double>(plan.per_segment_counts[i]) / draws;
    worst = std::max(worst, std::abs(freq - target[i]));
  }
  o.require(worst <= 0.01, "frequency off by " + fmt("%.4f", worst));

  const std::vector<double> equal{0.42, 0.42, 0.42, 0.42, 0.42};
  const auto uniform = segment_probabilities(equal, Temperature{0.7});
  for (double p : uniform.probs()) {
    o.require(p == 0.2, "equal scores not exactly uniform");
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 10.0, "runtime " + fmt("%.2f s", elapsed));
  if (o.pass) o.detail = "max |freq - p| " + fmt("%.4f", worst) + " in " + fmt("%.2f s", elapsed);
  return o;
}

// ---------------------------------------------------------------- 4
// Independent oracle: integer grid, elementary-interval sweep.
struct OracleCase {
  std::vector<double> scores;
  std::vector<Segment> segments;
  std::vector<Interval> truth_windows;
  double truth_time = 0.0;
};

std::vector<std::pair<std::size_t, std::size_t>> oracle_runs(const std::vector<double>& s, double rel) {
  const double cut = rel * *std::max_element(s.begin(), s.end());
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i; j < s.size(); ++j) {
      bool inside = true;
      for (std::size_t k = i; k <= j; ++k) inside = inside && s[k] >= cut;
      const bool left_closed = i == 0 || s[i - 1] < cut;
      const bool right_closed = j + 1 == s.size() || s[j + 1] < cut;
      if (inside && left_closed && right_closed) runs.emplace_back(i, j);
    }
  }
  return runs;
}

double oracle_iou(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<double> pts;
  for (const auto& i : a) pts.insert(pts.end(), {i.start, i.end});
  for (const auto& i : b) pts.insert(pts.end(), {i.start, i.end});
  std::sort(pts.begin(), pts.end());
  auto covers = [](const std::vector<Interval>& set, double x) {
    return std::any_of(set.begin(), set.end(), [x](const Interval& i) { return i.start < x && x < i.end; });
  };
  double inter = 0.0, uni = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double mid = 0.5 * (pts[k] + pts[k + 1]), len = pts[k + 1] - pts[k];
    const bool in_a = covers(a, mid), in_b = covers(b, mid);
    if (in_a && in_b) inter += len;
    if (in_a || in_b) uni += len;
  }
  return uni > 0.0 ? inter / uni : 0.0;
}

Outcome metric_oracles() {
  Outcome o;
  std::mt19937_64 rng(4);
  const double rel = 0.8;
  const std::vector<double> deltas{0.25, 1.0, 2.0};
  int windows_checked = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 3 + rng() % 14;
    SurpriseTimeline tl;
    tl.video_id = "case" + std::to_string(c);
    // Quantized scores so ties and exact threshold hits occur.
    for (std::size_t i = 0; i < n; ++i) {
      TimelineRecord r;
      r.index = i;
      r.segment.start = static_cast<double>(i);
      r.segment.end = static_cast<double>(i + 1);
      r.segment.observed_timestep = static_cast<double>(i + 1);
      r.score.value = static_cast<double>(rng() % 11) / 10.0;
      tl.records.push_back(r);
    }
    GroundTruth g;
    g.video_id = tl.video_id;
    const auto scores = tl.raw_scores();
    if (c % 2 == 0) {
      g.transition = static_cast<double>(rng() % (4 * n + 1)) / 4.0;
    } else {
      g.kind = GroundTruth::Kind::windows;
      double t = 0.0;
      while (t < static_cast<double>(n)) {
        const double start = t + static_cast<double>(rng() % 3);
        const double end = start + 1.0 + static_cast<double>(rng() % 3);
        if (end > static_cast<double>(n)) break;
        g.windows.push_back({start, end});
        t = end + 1.0;
      }
      if (g.windows.empty()) g.windows.push_back({0.0, 1.0});
    }

    const auto report = evaluate(std::vector<SurpriseTimeline>{tl}, std::vector<GroundTruth>{g}, deltas, rel);
    const auto& vm = report.videos.at(0);

    // Predicted peak: earliest maximum.
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (scores[i] > scores[best]) best = i;
    }
    const double predicted = static_cast<double>(best + 1);
    double truth = 0.0;
    if (g.transition) {
      truth = *g.transition;
    } else {
      std::size_t w = 0;
      for (std::size_t i = 1; i < g.windows.size(); ++i) {
        if (g.windows[i].end - g.windows[i].start > g.windows[w].end - g.windows[w].start) w = i;
      }
      truth = 0.5 * (g.windows[w].start + g.windows[w].end);
    }
    o.require(vm.predicted_time == predicted, "predicted peak differs in " + tl.video_id);
    o.require(vm.truth_time == truth, "truth time differs in " + tl.video_id);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      const int expect = std::abs(predicted - truth) <= deltas[k] ? 1 : 0;
      o.require(vm.accuracy[k] == expect, "Acc@delta differs in " + tl.video_id);
    }

    std::vector<Interval> runs;
    for (auto [i, j] : oracle_runs(scores, rel)) runs.push_back({static_cast<double>(i), static_cast<double>(j + 1)});
    const auto windows = predicted_windows(tl, rel);
    o.require(windows.intervals() == runs, "predicted_windows differs in " + tl.video_id);

    if (g.kind == GroundTruth::Kind::windows) {
      ++windows_checked;
      o.require(vm.iou.has_value() && *vm.iou == oracle_iou(runs, g.windows), "IoU differs in " + tl.video_id);
    }
  }
  if (o.pass) o.detail = "50 cases, " + std::to_string(windows_checked) + " with windows";
  return o;
}

// ---------------------------------------------------------------- 5
Outcome scripted_localization() {
  Outcome o;
  std::mt19937_64 rng(55);
  int hits = 0, richer = 0;
  const std::size_t f = 16;
  const double tau_s = 0.7;
  for (int w = 0; w < 20; ++w) {
    const std::size_t k = 4 + rng() % 13;
    const std::size_t dev = rng() % k;
    const auto world = surprise::testing::make_deviation_world(k, dev, 1000 + w, 3 + rng() % 3);
    ScriptedBackend backend(world.world);
    ScoringConfig cfg;
    cfg.segments = k;
    cfg.seed = 9000 + w;
    const auto tl = score_video(world.manifest, cfg, backend);
    if (argmax_surprise(tl) == tl.records[dev].timestep()) ++hits;

    const auto norm = normalize_scores(tl, NormalizeMethod::minmax);
    const auto probs = segment_probabilities(norm, Temperature{tau_s});
    const auto segs = tl.segments();
    const double expected = static_cast<double>(f) * probs[dev];
    const auto uniform = uniform_plan(world.manifest, f, segs).per_segment_counts[dev];
    if (expected > static_cast<double>(uniform)) ++richer;
  }
  o.require(hits >= 19, std::to_string(hits) + "/20 hits");
  o.require(richer == 20, std::to_string(richer) + "/20 worlds favour the deviation segment");
  if (o.pass) {
    o.detail = std::to_string(hits) + "/20 hits, weighted > uniform in " + std::to_string(richer) + "/20";
  }
  return o;
}

// ---------------------------------------------------------------- 6
Outcome budget_policy() {
  Outcome o;
  const std::vector<double> durations{30, 60, 61, 90, 121, 150};
  const std::vector<std::size_t> expected{8, 8, 16, 16, 32, 32};
  std::string got;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const auto b = budget_for_duration(durations[i]);
    got += (i ? "," : "") + std::to_string(b);
    o.require(b == expected[i], "budget for " + fmt("%g s", durations[i]));
  }
  if (o.pass) o.detail = "{" + got + "}";
  return o;
}

// ---------------------------------------------------------------- 7
bool covers(const Trajectory& t, const FrameManifest& m, double when) {
  return std::any_of(t.plan.frame_indices.begin(), t.plan.frame_indices.end(),
                     [&](std::size_t i) { return m.frames[i].timestamp == when; });
}

Outcome grpo_suite() {
  Outcome o;
  const auto zero = normalize_advantages(std::vector<double>{0.4, 0.4, 0.4, 0.4});
  o.require(std::all_of(zero.begin(), zero.end(), [](double a) { return a == 0.0; }), "zero-variance advantages");

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(2 + trial % 7);
    for (auto& v : r) v = u(rng);
    const auto a = normalize_advantages(r);
    const double n = static_cast<double>(a.size());
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    double var = 0.0;
    for (double v : a) var += (v - mean) * (v - mean);
    o.require(std::abs(mean) <= 1e-9, "advantage mean");
    o.require(std::abs(std::sqrt(var / n) - 1.0) <= 1e-9, "advantage std");
  }

  // Scripted rollout: find a group where exactly one plan sees the deviation.
  const auto world = surprise::testing::make_deviation_world(8, 3, 17);
  ScoringConfig sc;
  sc.segments = 8;
  SamplerConfig sam;
  sam.frame_budget = 4;
  bool found = false;
  std::uint64_t used_seed = 0;
  for (std::uint64_t seed = 1; seed <= 200 && !found; ++seed) {
    ScriptedBackend backend(world.world);
    auto g = run_rollout(world.manifest, sc, sam, backend, 4, seed);
    std::vector<std::size_t> covering;
    for (std::size_t r = 0; r < g.trajectories.size(); ++r) {
      if (covers(g.trajectories[r], world.manifest, world.deviation_time)) covering.push_back(r);
    }
    if (covering.size() != 1) continue;
    found = true;
    used_seed = seed;
    assign_rewards(g, backend, world.world.reference_caption);
    g.advantages = normalize_advantages(g.rewards);
    const auto top = static_cast<std::size_t>(std::max_element(g.advantages.begin(), g.advantages.end()) -
                                              g.advantages.begin());
    o.require(top == covering[0], "covering trajectory is not the advantage maximum");
    for (std::size_t r = 0; r < g.advantages.size(); ++r) {
      if (r != covering[0]) o.require(g.advantages[r] < g.advantages[top], "advantage maximum is not unique");
    }

    auto flat = g;
    flat.rewards.assign(flat.rewards.size(), 0.5);
    flat.advantages = normalize_advantages(flat.rewards);
    o.require(belief_loss(flat) == 0.0, "zero-variance loss");
  }
  o.require(found, "no seed in 1..200 gave exactly one covering plan");
  if (o.pass) o.detail = "rollout seed " + std::to_string(used_seed) + ", 1000 advantage groups";
  return o;
}

// ---------------------------------------------------------------- 8
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  const auto base = fs::temp_directory_path() / "surprise-acceptance";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> runs;
  for (int pass = 0; pass < 2; ++pass) {
    const auto dir = base / std::to_string(pass);
    fs::create_directories(dir);
    std::ostringstream out, err;
    const auto manifest = (kData / "kitchen.manifest.json").string();
    const auto config = (kData / "kitchen.config.json").string();
    int rc = cli::run({"score", manifest, "-c", config, "-o", dir.string(), "--seed", "7"}, out, err);
    o.require(rc == 0, "score failed: " + err.str());
    rc = cli::run({"rollout", manifest, "-c", config, "-o", dir.string(), "--seed", "7", "-M", "4"}, out, err);
    o.require(rc == 0, "rollout failed: " + err.str());
    runs.push_back(snapshot(dir));
  }
  o.require(runs[0].size() == 3, "expected timeline, plot and rollout files");
  o.require(runs[0] == runs[1], "outputs differ between runs");
  fs::remove_all(base);
  if (o.pass) o.detail = std::to_string(runs[0].size()) + " files byte-identical";
  return o;
}

// ---------------------------------------------------------------- 9
Outcome complexity() {
  Outcome o;
  std::string detail;
  for (std::size_t k : {4u, 8u, 16u}) {
    const auto world = surprise::testing::make_deviation_world(k, k / 2);
    ScriptedBackend backend(world.world);
    ScoringConfig cfg;
    cfg.segments = k;
    cfg.hypotheses = 3;
    score_video(world.manifest, cfg, backend);
    const auto c = backend.calls();
    o.require(c.generate == k, "generation calls for K=" + std::to_string(k));
    o.require(c.scoring() == 2 * k * 3, "scoring calls for K=" + std::to_string(k));
    detail += (detail.empty() ? "" : ", ") + std::string("K=") + std::to_string(k) + ": " +
              std::to_string(c.generate) + "+" + std::to_string(c.scoring());
  }
  if (o.pass) o.detail = detail;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 math suite", math_suite},
      {"2 hand values", hand_values},
      {"3 sampling fidelity", sampling_fidelity},
      {"4 metric oracles", metric_oracles},
      {"5 scripted localization", scripted_localization},
      {"6 budget policy", budget_policy},
      {"7 grpo suite", grpo_suite},
      {"8 determinism", determinism},
      {"9 call accounting", complexity},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %-26s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
