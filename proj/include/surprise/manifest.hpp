#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "surprise/backend.hpp"

namespace surprise {

/// A video as an ordered list of frame references.
struct FrameManifest {
  std::string video_id;
  double fps = 0.0;
  double duration = 0.0;
  std::vector<FrameRef> frames;
  std::string reference_caption;  // optional, used as the rollout reward target

  /// Timestamps strictly increasing and >= 0, duration >= last timestamp,
  /// fps > 0, at least one frame. Also renumbers frame indices.
  void validate();

  /// Index of the frame whose timestamp is closest to t; ties go to the later
  /// frame. Clamped at both ends.
  std::size_t nearest_frame(double t) const;

  static FrameManifest from_json(const nlohmann::json& j);
  static FrameManifest load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Evenly spaced synthetic manifest (frame i at i / fps). Mostly for tests.
  static FrameManifest regular(std::string video_id, double fps, std::size_t count,
                               std::string uri_prefix = "frame_");
};

}  // namespace surprise
