#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surprise {

/// Softmax temperature. Always strictly positive and finite.
class Temperature {
 public:
  explicit Temperature(double value = 1.0);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// A normalized categorical distribution over N outcomes.
class Distribution {
 public:
  Distribution() = default;
  /// Validates that every entry is in [0, 1] and the total is 1 within 1e-9.
  explicit Distribution(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

enum class DivergenceMode { kl, jsd };

std::string_view to_string(DivergenceMode mode) noexcept;
DivergenceMode parse_divergence_mode(std::string_view text);

struct SurpriseScore {
  double value = 0.0;
  DivergenceMode mode = DivergenceMode::kl;
};

/// Hypotheses at one timestep with their prior and posterior probabilities.
struct BeliefState {
  std::vector<std::string> hypotheses;
  Distribution prior;
  Distribution posterior;
  double timestep = 0.0;

  /// Throws ShapeError unless all three lists share one length.
  void validate() const;
};

/// Max-shifted softmax of -x/tau. Shared by belief scoring and segment sampling.
std::vector<double> softmax_neg(std::span<const double> energies, double tau);

/// Belief distribution from per-hypothesis negative log-likelihoods (nats).
/// Requires at least two finite NLLs.
Distribution distribution_from_nll(std::span<const double> nlls, Temperature tau);

inline constexpr double kPriorFloor = 1e-12;

/// D_KL(post || prior) in nats. Prior entries are floored at kPriorFloor.
double kl_divergence(std::span<const double> post, std::span<const double> prior);
double kl_divergence(const Distribution& post, const Distribution& prior);

/// Jensen-Shannon divergence in bits, so the result lies in [0, 1].
double jsd(std::span<const double> post, std::span<const double> prior);
double jsd(const Distribution& post, const Distribution& prior);

/// Surprise of a belief update: the selected divergence of posterior from prior.
SurpriseScore surprise(std::span<const double> prior_nlls,
                       std::span<const double> post_nlls,
                       Temperature tau,
                       DivergenceMode mode);

SurpriseScore surprise(const Distribution& prior, const Distribution& post, DivergenceMode mode);

}  // namespace surprise
