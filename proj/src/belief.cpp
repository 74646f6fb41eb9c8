#include "surprise/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "surprise/error.hpp"

namespace surprise {

namespace {

void check_distribution(std::span<const double> p, const char* name) {
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw InvalidInput(std::string(name) + ": probabilities must lie in [0, 1]");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidInput(std::string(name) + ": probabilities must sum to 1");
  }
}

void check_pair(std::span<const double> post, std::span<const double> prior) {
  if (post.size() != prior.size()) {
    throw ShapeError("divergence: posterior has " + std::to_string(post.size()) +
                     " entries but prior has " + std::to_string(prior.size()));
  }
  if (post.empty()) throw ShapeError("divergence: empty distributions");
  check_distribution(post, "posterior");
  check_distribution(prior, "prior");
}

// Sum of p * log(p / q) over p > 0, without flooring.
double kl_raw(std::span<const double> p, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

}  // namespace

Temperature::Temperature(double value) : value_(value) {
  if (!std::isfinite(value) || value <= 0.0) {
    throw InvalidParameter("temperature must be positive and finite");
  }
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  check_distribution(probs_, "distribution");
}

std::string_view to_string(DivergenceMode mode) noexcept {
  return mode == DivergenceMode::kl ? "kl" : "jsd";
}

DivergenceMode parse_divergence_mode(std::string_view text) {
  if (text == "kl") return DivergenceMode::kl;
  if (text == "jsd") return DivergenceMode::jsd;
  throw InvalidParameter("unknown divergence mode '" + std::string(text) + "' (expected kl or jsd)");
}

void BeliefState::validate() const {
  if (hypotheses.size() != prior.size() || hypotheses.size() != posterior.size()) {
    throw ShapeError("belief state: hypotheses, prior and posterior differ in length");
  }
}

std::vector<double> softmax_neg(std::span<const double> energies, double tau) {
  if (!std::isfinite(tau) || tau <= 0.0) throw InvalidParameter("temperature must be positive");
  std::vector<double> out(energies.size());
  if (energies.empty()) return out;
  const double lowest = *std::min_element(energies.begin(), energies.end());
  double total = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    out[i] = std::exp(-(energies[i] - lowest) / tau);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

Distribution distribution_from_nll(std::span<const double> nlls, Temperature tau) {
  if (nlls.size() < 2) throw InvalidInput("need at least two hypothesis NLLs");
  for (double v : nlls) {
    if (!std::isfinite(v)) throw InvalidInput("NLL values must be finite");
  }
  return Distribution(softmax_neg(nlls, tau.value()));
}

double kl_divergence(std::span<const double> post, std::span<const double> prior) {
  check_pair(post, prior);
  double d = 0.0;
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (post[i] > 0.0) d += post[i] * std::log(post[i] / std::max(prior[i], kPriorFloor));
  }
  // Rounding can push an exact zero slightly negative.
  return std::max(d, 0.0);
}

double kl_divergence(const Distribution& post, const Distribution& prior) {
  return kl_divergence(post.probs(), prior.probs());
}

double jsd(std::span<const double> post, std::span<const double> prior) {
  check_pair(post, prior);
  std::vector<double> mid(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) mid[i] = 0.5 * (post[i] + prior[i]);
  // mid[i] >= p[i] / 2 whenever p[i] > 0, so no flooring is needed here.
  const double nats = 0.5 * kl_raw(post, mid) + 0.5 * kl_raw(prior, mid);
  return std::clamp(nats / std::log(2.0), 0.0, 1.0);
}

double jsd(const Distribution& post, const Distribution& prior) {
  return jsd(post.probs(), prior.probs());
}

SurpriseScore surprise(const Distribution& prior, const Distribution& post, DivergenceMode mode) {
  const double value =
      mode == DivergenceMode::kl ? kl_divergence(post, prior) : jsd(post, prior);
  return {value, mode};
}

SurpriseScore surprise(std::span<const double> prior_nlls,
                       std::span<const double> post_nlls,
                       Temperature tau,
                       DivergenceMode mode) {
  if (prior_nlls.size() != post_nlls.size()) {
    throw ShapeError("surprise: prior and posterior NLL vectors differ in length");
  }
  return surprise(distribution_from_nll(prior_nlls, tau), distribution_from_nll(post_nlls, tau),
                  mode);
}

}  // namespace surprise
