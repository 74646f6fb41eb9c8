#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"
#include "surprise/grpo.hpp"
#include "surprise/pipeline.hpp"
#include "surprise/prompts.hpp"
#include "surprise/remote_backend.hpp"

namespace surprise {

struct BackendConfig {
  enum class Kind { scripted, remote };
  Kind kind = Kind::scripted;
  std::filesystem::path world;  // scripted: world-script path
  RemoteConfig remote;
};

struct EvalConfig {
  std::vector<double> deltas{0.25, 1.0};
  double rel_threshold = 0.8;
};

/// Everything a CLI run depends on. Validated before any backend call; its
/// fingerprint is stamped into every output file.
struct RunConfig {
  BackendConfig backend;
  ScoringConfig scoring;
  SamplerConfig sampler;
  EvalConfig eval;
  PromptTemplates templates = PromptTemplates::defaults();
  std::uint64_t seed = 42;
  std::size_t rollouts = 3;
  std::size_t workers = 1;

  void validate() const;
  nlohmann::json to_json() const;
  /// Stable 16-hex-digit hash of to_json(); world-script contents are folded
  /// in so editing a world changes the fingerprint.
  std::string fingerprint() const;

  /// Relative paths inside the file resolve against the file's directory.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

std::unique_ptr<Backend> make_backend(const RunConfig& cfg);

/// FNV-1a 64 of `data`, as 16 lowercase hex digits.
std::string stable_hash(std::string_view data);

}  // namespace surprise
