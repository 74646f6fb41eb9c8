#include "surprise/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

#include "parallel.hpp"
#include "surprise/error.hpp"
#include "surprise/rng.hpp"

namespace surprise {

using nlohmann::json;

NormalizeMethod SamplerConfig::normalization_for(DivergenceMode mode) const {
  if (normalize) return *normalize;
  return mode == DivergenceMode::jsd ? NormalizeMethod::none : NormalizeMethod::minmax;
}

void SamplerConfig::validate() const {
  Temperature{tau_s};
  if (frame_budget < 1) throw InvalidParameter("frame budget F must be >= 1");
}

double Trajectory::logprob_sum() const {
  double s = 0.0;
  for (const auto& row : hypothesis_logprobs) s = std::accumulate(row.begin(), row.end(), s);
  return s;
}

RolloutGroup run_rollout(const FrameManifest& manifest, const ScoringConfig& scoring,
                         const SamplerConfig& sampler, Backend& backend, std::size_t m,
                         std::uint64_t seed) {
  if (m < 2) throw InvalidParameter("a rollout group needs M >= 2 trajectories");
  sampler.validate();

  RolloutGroup group;
  group.trajectories.resize(m);
  detail::parallel_for(m, scoring.max_in_flight, [&](std::size_t r) {
    auto& traj = group.trajectories[r];
    traj.seed = mix_seed(seed, r);
    ScoringConfig cfg = scoring;
    cfg.seed = traj.seed;
    RollingMemory memory;
    traj.timeline = score_video(manifest, cfg, backend, memory);
    if (std::any_of(traj.timeline.records.begin(), traj.timeline.records.end(),
                    [](const auto& rec) { return rec.failed; })) {
      throw RunError("trajectory " + std::to_string(r) + " has failed segments");
    }

    const auto scores = normalize_scores(traj.timeline, sampler.normalization_for(cfg.mode));
    const auto probs = segment_probabilities(scores, Temperature{sampler.tau_s});
    const auto segments = traj.timeline.segments();
    traj.plan = sample_frames(probs, segments, manifest, sampler.frame_budget,
                              mix_seed(traj.seed, 0x5a4d), sampler.distinct);

    std::vector<FrameRef> frames;
    for (auto idx : traj.plan.frame_indices) frames.push_back(manifest.frames[idx]);
    traj.caption = backend.caption_video(frames);

    for (const auto& rec : traj.timeline.records) {
      std::vector<double> row(rec.prior_nll.size());
      std::transform(rec.prior_nll.begin(), rec.prior_nll.end(), row.begin(),
                     [](double nll) { return -nll; });
      traj.hypothesis_logprobs.push_back(std::move(row));
    }
  });
  return group;
}

double parse_reward(std::string_view judge_output) {
  static const std::regex number(R"([-+]?(?:\d+\.?\d*|\.\d+))");
  const std::string text(judge_output);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), number); it != std::sregex_iterator();
       ++it) {
    const double v = std::stod(it->str());
    if (v >= 0.0 && v <= 1.0) return v;
  }
  throw RewardParseError(text);
}

void assign_rewards(RolloutGroup& group, Backend& backend, std::string_view reference) {
  group.rewards.clear();
  group.judge_outputs.clear();
  for (const auto& t : group.trajectories) {
    group.judge_outputs.push_back(backend.judge(reference, t.caption));
    group.rewards.push_back(parse_reward(group.judge_outputs.back()));
  }
}

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw InvalidInput("advantages need at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::max(std::sqrt(var / n), kAdvantageStdFloor);
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / sd);
  return out;
}

double belief_loss(const RolloutGroup& group) {
  const auto m = group.trajectories.size();
  if (m == 0) throw InvalidInput("belief loss of an empty group");
  if (group.advantages.size() != m) throw InvalidInput("advantages are not set for every trajectory");
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto& t = group.trajectories[r];
    if (t.hypothesis_logprobs.empty()) throw InvalidInput("trajectory has no hypothesis logprobs");
    if (!t.timeline.records.empty()) {
      if (t.hypothesis_logprobs.size() != t.timeline.records.size()) {
        throw InvalidInput("logprob grid does not cover every timestep");
      }
      for (std::size_t s = 0; s < t.hypothesis_logprobs.size(); ++s) {
        if (t.hypothesis_logprobs[s].size() != t.timeline.records[s].belief.hypotheses.size()) {
          throw InvalidInput("logprob grid does not cover every hypothesis");
        }
      }
    }
    for (const auto& row : t.hypothesis_logprobs) {
      for (double lp : row) {
        if (!std::isfinite(lp) || lp > 0.0) throw InvalidInput("log-probabilities must be finite and <= 0");
      }
    }
    total += group.advantages[r] * t.logprob_sum();
  }
  if (total == 0.0) return 0.0;  // not -0.0, which would leak into JSON output
  return -total / static_cast<double>(m);
}

json RolloutGroup::to_json() const {
  json trajs = json::array();
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    const auto& t = trajectories[r];
    json e{{"seed", t.seed},
           {"caption", t.caption},
           {"surprise_scores", t.surprise_scores()},
           {"plan", t.plan.to_json()},
           {"logprob_sum", t.logprob_sum()}};
    if (r < rewards.size()) e["reward"] = rewards[r];
    if (r < advantages.size()) e["advantage"] = advantages[r];
    if (r < judge_outputs.size()) e["judge_output"] = judge_outputs[r];
    json steps = json::array();
    for (const auto& rec : t.timeline.records) {
      steps.push_back({{"timestep", rec.timestep()}, {"hypotheses", rec.belief.hypotheses}});
    }
    e["beliefs"] = std::move(steps);
    trajs.push_back(std::move(e));
  }
  return {{"trajectories", std::move(trajs)}, {"rewards", rewards}, {"advantages", advantages}};
}

}  // namespace surprise
