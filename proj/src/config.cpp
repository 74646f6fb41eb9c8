#include "surprise/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "surprise/error.hpp"
#include "surprise/scripted_backend.hpp"

namespace surprise {

using nlohmann::json;

std::string stable_hash(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  scoring.validate();
  sampler.validate();
  templates.validate();
  if (eval.deltas.empty()) throw InvalidParameter("at least one delta is required");
  for (double d : eval.deltas) {
    if (!(d > 0.0)) throw InvalidParameter("every delta must be positive");
  }
  if (!(eval.rel_threshold > 0.0 && eval.rel_threshold <= 1.0)) {
    throw InvalidParameter("rel_threshold must lie in (0, 1]");
  }
  if (rollouts < 2) throw InvalidParameter("rollouts M must be >= 2");
  if (workers < 1) throw InvalidParameter("workers must be >= 1");
  if (backend.kind == BackendConfig::Kind::scripted) {
    if (backend.world.empty()) throw InvalidParameter("scripted backend needs a world script path");
  } else {
    backend.remote.validate();
  }
}

json RunConfig::to_json() const {
  json b;
  if (backend.kind == BackendConfig::Kind::scripted) {
    b = {{"kind", "scripted"}, {"world", backend.world.generic_string()}};
  } else {
    b = backend.remote.to_json();
    b["kind"] = "remote";
  }
  json s{{"tau_s", sampler.tau_s}, {"F", sampler.frame_budget}, {"distinct", sampler.distinct},
         {"normalize", sampler.normalize ? std::string(to_string(*sampler.normalize)) : "auto"}};
  json t{{"generation", templates.generation},     {"prior_score", templates.prior_score},
         {"posterior_score", templates.posterior_score}, {"caption", templates.caption},
         {"video_caption", templates.video_caption}, {"judge", templates.judge},
         {"summarize", templates.summarize}};
  return {{"backend", std::move(b)},
          {"scoring", scoring.to_json()},
          {"sampler", std::move(s)},
          {"eval", {{"deltas", eval.deltas}, {"rel_threshold", eval.rel_threshold}}},
          {"templates", std::move(t)},
          {"seed", seed},
          {"rollouts", rollouts},
          {"workers", workers}};
}

std::string RunConfig::fingerprint() const {
  std::string material = to_json().dump();
  if (backend.kind == BackendConfig::Kind::scripted) {
    std::ifstream in(backend.world, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    material += buf.str();
  }
  return stable_hash(material);
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.rollouts = j.value("rollouts", c.rollouts);
    c.workers = j.value("workers", c.workers);
    if (j.contains("scoring")) c.scoring = ScoringConfig::from_json(j["scoring"]);
    c.scoring.seed = c.seed;
    if (j.contains("sampler")) {
      const auto& s = j["sampler"];
      c.sampler.tau_s = s.value("tau_s", c.sampler.tau_s);
      c.sampler.frame_budget = s.value("F", c.sampler.frame_budget);
      c.sampler.distinct = s.value("distinct", c.sampler.distinct);
      const auto norm = s.value("normalize", std::string("auto"));
      if (norm != "auto") c.sampler.normalize = parse_normalize_method(norm);
    }
    if (j.contains("eval")) {
      c.eval.deltas = j["eval"].value("deltas", c.eval.deltas);
      c.eval.rel_threshold = j["eval"].value("rel_threshold", c.eval.rel_threshold);
    }
    if (j.contains("templates")) {
      const auto& t = j["templates"];
      auto& d = c.templates;
      d.generation = t.value("generation", d.generation);
      d.prior_score = t.value("prior_score", d.prior_score);
      d.posterior_score = t.value("posterior_score", d.posterior_score);
      d.caption = t.value("caption", d.caption);
      d.video_caption = t.value("video_caption", d.video_caption);
      d.judge = t.value("judge", d.judge);
      d.summarize = t.value("summarize", d.summarize);
    }
    const json b = j.value("backend", json{{"kind", "scripted"}});
    const auto kind = b.value("kind", std::string("scripted"));
    if (kind == "scripted") {
      c.backend.kind = BackendConfig::Kind::scripted;
      std::filesystem::path world = b.value("world", std::string());
      if (!world.empty() && world.is_relative() && !base_dir.empty()) world = base_dir / world;
      c.backend.world = world;
    } else if (kind == "remote") {
      c.backend.kind = BackendConfig::Kind::remote;
      c.backend.remote = RemoteConfig::from_json(b);
    } else {
      throw InvalidParameter("unknown backend kind '" + kind + "'");
    }
    c.backend.remote.templates = c.templates;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
  if (cfg.backend.kind == BackendConfig::Kind::scripted) {
    return std::make_unique<ScriptedBackend>(WorldScript::load(cfg.backend.world));
  }
  RemoteConfig remote = cfg.backend.remote;
  remote.templates = cfg.templates;
  return std::make_unique<RemoteBackend>(std::move(remote));
}

}  // namespace surprise
