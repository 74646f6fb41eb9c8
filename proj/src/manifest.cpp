#include "surprise/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "surprise/error.hpp"

namespace surprise {

void FrameManifest::validate() {
  if (frames.empty()) throw InvalidInput("manifest '" + video_id + "' has no frames");
  if (!std::isfinite(fps) || fps <= 0.0) throw InvalidInput("manifest fps must be positive");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].index = i;
    const double t = frames[i].timestamp;
    if (!std::isfinite(t) || t < 0.0) throw InvalidInput("manifest timestamps must be >= 0");
    if (i > 0 && !(t > frames[i - 1].timestamp)) {
      throw InvalidInput("manifest timestamps must be strictly increasing (frame " +
                         std::to_string(i) + ")");
    }
  }
  if (!std::isfinite(duration) || duration <= 0.0 || duration < frames.back().timestamp) {
    throw InvalidInput("manifest duration must be positive and cover the last frame");
  }
}

std::size_t FrameManifest::nearest_frame(double t) const {
  const auto it = std::lower_bound(frames.begin(), frames.end(), t,
                                   [](const FrameRef& f, double v) { return f.timestamp < v; });
  if (it == frames.begin()) return 0;
  if (it == frames.end()) return frames.size() - 1;
  const auto hi = static_cast<std::size_t>(it - frames.begin());
  return (t - frames[hi - 1].timestamp < it->timestamp - t) ? hi - 1 : hi;
}

FrameManifest FrameManifest::from_json(const nlohmann::json& j) {
  FrameManifest m;
  try {
    m.video_id = j.at("video_id").get<std::string>();
    m.fps = j.at("fps").get<double>();
    m.duration = j.at("duration").get<double>();
    m.reference_caption = j.value("reference_caption", "");
    for (const auto& f : j.at("frames")) {
      FrameRef r;
      if (f.is_array()) {
        r.timestamp = f.at(0).get<double>();
        r.uri = f.at(1).get<std::string>();
      } else {
        r.timestamp = f.at("timestamp").get<double>();
        r.uri = f.at("uri").get<std::string>();
      }
      m.frames.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

FrameManifest FrameManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json FrameManifest::to_json() const {
  nlohmann::json frames_json = nlohmann::json::array();
  for (const auto& f : frames) frames_json.push_back({{"timestamp", f.timestamp}, {"uri", f.uri}});
  nlohmann::json j{{"video_id", video_id}, {"fps", fps}, {"duration", duration},
                   {"frames", std::move(frames_json)}};
  if (!reference_caption.empty()) j["reference_caption"] = reference_caption;
  return j;
}

FrameManifest FrameManifest::regular(std::string video_id, double fps, std::size_t count,
                                     std::string uri_prefix) {
  FrameManifest m;
  m.video_id = std::move(video_id);
  m.fps = fps;
  m.duration = static_cast<double>(count) / fps;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.jpg", i);
    m.frames.push_back({i, static_cast<double>(i) / fps, uri_prefix + name});
  }
  m.validate();
  return m;
}

}  // namespace surprise
