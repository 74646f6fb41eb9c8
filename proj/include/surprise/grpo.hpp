#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"
#include "surprise/pipeline.hpp"
#include "surprise/sampler.hpp"

namespace surprise {

struct SamplerConfig {
  double tau_s = 0.7;
  std::size_t frame_budget = 64;
  bool distinct = false;
  // Unset: min-max for KL timelines, pass-through for JSD (already in [0, 1]).
  std::optional<NormalizeMethod> normalize;

  NormalizeMethod normalization_for(DivergenceMode mode) const;
  void validate() const;
};

/// One full belief-tracking run plus the caption it led to.
struct Trajectory {
  std::uint64_t seed = 0;
  SurpriseTimeline timeline;
  SamplingPlan plan;
  std::string caption;
  // [step][hypothesis] log p(b | H_t, W_t); equals minus the prior NLL.
  std::vector<std::vector<double>> hypothesis_logprobs;

  std::vector<double> surprise_scores() const { return timeline.raw_scores(); }
  double logprob_sum() const;
};

struct RolloutGroup {
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<std::string> judge_outputs;

  nlohmann::json to_json() const;
};

/// M independently seeded trajectories over the same video. Rewards and
/// advantages are left empty.
RolloutGroup run_rollout(const FrameManifest& manifest, const ScoringConfig& scoring,
                         const SamplerConfig& sampler, Backend& backend, std::size_t m,
                         std::uint64_t seed);

/// First number in the judge output that lies in [0, 1].
double parse_reward(std::string_view judge_output);

/// Judges every caption against `reference` and stores rewards.
void assign_rewards(RolloutGroup& group, Backend& backend, std::string_view reference);

inline constexpr double kAdvantageStdFloor = 1e-8;

/// (r - mean) / population std, std floored at kAdvantageStdFloor.
std::vector<double> normalize_advantages(std::span<const double> rewards);

/// -(1/M) * sum_r A_r * sum_{t,k} log p(b_{t,k}).
double belief_loss(const RolloutGroup& group);

}  // namespace surprise
