#include "surprise/cli.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "parallel.hpp"
#include "surprise/config.hpp"
#include "surprise/error.hpp"
#include "surprise/eval.hpp"
#include "surprise/grpo.hpp"
#include "surprise/manifest.hpp"
#include "surprise/pipeline.hpp"
#include "surprise/sampler.hpp"
#include "surprise/scripted_backend.hpp"

namespace fs = std::filesystem;

namespace surprise::cli {

namespace {

using nlohmann::json;

// Every RunConfig field can be overridden from the command line; unset
// optionals keep the config file's value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> segments, hypotheses, window, budget_cap, memory_words, max_in_flight;
  std::optional<double> tau, nucleus_p;
  std::optional<int> max_words;
  std::optional<std::string> mode, posterior_mode;
  bool no_memory = false;
  std::optional<std::size_t> workers, rollouts, frame_budget;
  std::optional<double> tau_s, rel_threshold;
  std::optional<std::string> normalize;
  bool distinct = false;
  std::vector<double> deltas;

  void add_scoring(CLI::App* app) {
    app->add_option("--seed", seed, "Run seed");
    app->add_option("-K,--segments", segments, "Segment count (default: duration budget)");
    app->add_option("-N,--hypotheses", hypotheses, "Hypotheses per step");
    app->add_option("-W,--window", window, "Prior-window frames");
    app->add_option("--tau", tau, "Belief softmax temperature");
    app->add_option("--mode", mode, "kl or jsd")->check(CLI::IsMember({"kl", "jsd"}));
    app->add_option("--posterior", posterior_mode, "nll or yes-prob");
    app->add_flag("--no-memory", no_memory, "Score without the rolling summary (parallel segments)");
    app->add_option("--budget-cap", budget_cap, "Upper bound on the automatic segment count");
    app->add_option("--memory-words", memory_words, "Rolling summary word budget");
    app->add_option("--nucleus-p", nucleus_p, "Nucleus sampling mass for hypothesis generation");
    app->add_option("--max-words", max_words, "Word limit per hypothesis");
    app->add_option("--max-in-flight", max_in_flight, "Concurrent backend calls per step");
  }
  void add_sampler(CLI::App* app) {
    app->add_option("-F,--frames", frame_budget, "Frame budget")->check(CLI::PositiveNumber);
    app->add_option("--tau-s", tau_s, "Sampling softmax temperature")->check(CLI::PositiveNumber);
    app->add_option("--normalize", normalize, "auto, none or minmax")
        ->check(CLI::IsMember({"auto", "none", "minmax"}));
    app->add_flag("--distinct", distinct, "Redraw repeated frames");
  }
  void add_eval(CLI::App* app) {
    app->add_option("-d,--delta", deltas, "Accuracy tolerance(s) in seconds")->delimiter(',');
    app->add_option("--rel-threshold", rel_threshold, "Window threshold relative to the peak")
        ->check(CLI::Range(0.0, 1.0));
  }

  void apply(RunConfig& cfg) const {
    auto& sc = cfg.scoring;
    if (seed) cfg.seed = *seed;
    sc.seed = cfg.seed;
    if (segments) sc.segments = *segments;
    if (hypotheses) sc.hypotheses = *hypotheses;
    if (window) sc.window = *window;
    if (tau) sc.tau = *tau;
    if (mode) sc.mode = parse_divergence_mode(*mode);
    if (posterior_mode) sc.posterior_mode = parse_posterior_mode(*posterior_mode);
    if (no_memory) sc.use_memory = false;
    if (budget_cap) sc.budget_cap = *budget_cap;
    if (memory_words) sc.memory_words = *memory_words;
    if (nucleus_p) sc.nucleus_p = *nucleus_p;
    if (max_words) sc.max_words = *max_words;
    if (max_in_flight) sc.max_in_flight = *max_in_flight;
    if (workers) cfg.workers = *workers;
    if (rollouts) cfg.rollouts = *rollouts;
    if (frame_budget) cfg.sampler.frame_budget = *frame_budget;
    if (tau_s) cfg.sampler.tau_s = *tau_s;
    if (normalize) {
      cfg.sampler.normalize = *normalize == "auto" ? std::nullopt
                                                   : std::optional(parse_normalize_method(*normalize));
    }
    if (distinct) cfg.sampler.distinct = true;
    if (!deltas.empty()) cfg.eval.deltas = deltas;
    if (rel_threshold) cfg.eval.rel_threshold = *rel_threshold;
  }
};

// sample and eval do not need a backend, so their config file is optional
// and only the sections they use are validated.
RunConfig resolve(const std::string& config_path, const Overrides& o, bool needs_backend) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = RunConfig::load(config_path);
  o.apply(cfg);
  if (needs_backend) {
    cfg.validate();
  } else {
    cfg.sampler.validate();
    if (!(cfg.eval.rel_threshold > 0.0 && cfg.eval.rel_threshold <= 1.0)) {
      throw InvalidParameter("rel_threshold must lie in (0, 1]");
    }
  }
  return cfg;
}

struct ScoreOptions {
  std::vector<std::string> manifests;
  std::string config;
  std::string out_dir = "out";
  Overrides over;
};

struct SampleOptions {
  std::string timeline;
  std::string config;
  std::string out_dir = "out";
  Overrides over;
};

struct EvalOptions {
  std::string timelines;
  std::string annotations;
  std::string config;
  std::string out_dir = "out";
  Overrides over;
};

struct RolloutOptions {
  std::string manifest;
  std::string config;
  std::optional<std::string> reference;
  std::string out_dir = "out";
  Overrides over;
};

struct ExtractOptions {
  std::string video;
  std::string from_dir;
  std::string frames_dir;
  std::string out;
  std::string video_id;
  double fps = 2.0;
  std::string ffmpeg = "ffmpeg";
  std::string ffprobe = "ffprobe";
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RunError("cannot write " + path.string());
  f << content;
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fp(const std::string& fp) { return fp.substr(0, 12); }

int cmd_score(const ScoreOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve(o.config, o.over, true);

  std::vector<FrameManifest> manifests;
  for (const auto& m : o.manifests) manifests.push_back(FrameManifest::load(m));
  auto backend = make_backend(cfg);
  const auto fp = cfg.fingerprint();

  std::vector<std::string> lines(manifests.size());
  detail::parallel_for(manifests.size(), cfg.workers, [&](std::size_t i) {
    const auto& manifest = manifests[i];
    auto tl = score_video(manifest, cfg.scoring, *backend);
    tl.fingerprint = fp;
    const fs::path base = fs::path(o.out_dir) / (manifest.video_id + "-" + short_fp(fp));
    write_file(base.string() + ".timeline.json", tl.to_json().dump(2) + "\n");

    std::string plot = "# video_id=" + manifest.video_id + " fingerprint=" + fp + "\ntime,score\n";
    for (const auto& r : tl.records) {
      plot += fmt_num(r.timestep()) + "," + (r.failed ? std::string("nan") : fmt_num(r.score.value)) + "\n";
    }
    write_file(base.string() + ".plot.csv", plot);

    const auto failed = std::count_if(tl.records.begin(), tl.records.end(), [](auto& r) { return r.failed; });
    lines[i] = manifest.video_id + ": " + std::to_string(tl.records.size()) + " segments (" +
               std::to_string(failed) + " failed), peak at " + fmt_num(argmax_surprise(tl)) +
               " s\n  " + base.string() + ".timeline.json\n  " + base.string() + ".plot.csv\n";
  });
  for (const auto& l : lines) out << l;
  return kExitOk;
}

int cmd_sample(const SampleOptions& o, std::ostream& out) {
  const auto tl = SurpriseTimeline::load(o.timeline);
  const RunConfig cfg = resolve(o.config, o.over, false);
  const SamplerConfig& sc = cfg.sampler;
  const std::uint64_t seed = cfg.seed;

  const auto norm = sc.normalization_for(tl.config.mode);
  const auto scores = normalize_scores(tl, norm);
  const auto probs = segment_probabilities(scores, Temperature{sc.tau_s});
  const auto segments = tl.segments();
  auto plan = sample_frames(probs, segments, tl.manifest, sc.frame_budget, seed, sc.distinct);
  plan.source_fingerprint = tl.fingerprint;

  json params{{"F", sc.frame_budget}, {"tau_s", sc.tau_s}, {"seed", seed},
              {"normalize", std::string(to_string(norm))}, {"distinct", sc.distinct}};
  const auto fp = stable_hash(tl.fingerprint + params.dump());
  json doc = plan.to_json();
  doc["format"] = "surprise-plan/1";
  doc["video_id"] = tl.video_id;
  doc["fingerprint"] = fp;
  doc["params"] = params;
  doc["probabilities"] = std::vector<double>(probs.probs().begin(), probs.probs().end());
  std::vector<double> times;
  for (auto idx : plan.frame_indices) times.push_back(tl.manifest.frames[idx].timestamp);
  doc["frame_times"] = times;

  const fs::path path = fs::path(o.out_dir) / (tl.video_id + "-" + short_fp(fp) + ".plan.json");
  write_file(path, doc.dump(2) + "\n");

  out << "segment,start,end,probability,count\n";
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out << i << "," << fmt_num(segments[i].start) << "," << fmt_num(segments[i].end) << ","
        << fmt_num(probs[i]) << "," << plan.per_segment_counts[i] << "\n";
  }
  out << path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  if (fs::is_directory(o.timelines)) {
    for (const auto& e : fs::directory_iterator(o.timelines)) {
      const auto name = e.path().filename().string();
      if (name.size() > 14 && name.ends_with(".timeline.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(o.timelines);
  }
  std::vector<SurpriseTimeline> timelines;
  for (const auto& f : files) timelines.push_back(SurpriseTimeline::load(f));
  const RunConfig cfg = resolve(o.config, o.over, false);
  const auto& deltas = cfg.eval.deltas;
  const double rel_threshold = cfg.eval.rel_threshold;
  const auto annotations = load_annotations(o.annotations);
  if (annotations.empty()) throw InvalidInput("annotation file " + o.annotations + " lists no videos");

  const auto report = evaluate(timelines, annotations, deltas, rel_threshold);
  for (const auto& id : report.unmatched_timelines) err << "warning: no annotation for " << id << "\n";
  for (const auto& id : report.unmatched_annotations) err << "warning: no timeline for " << id << "\n";
  if (report.videos.empty()) {
    err << "error: no timeline matched any annotated video\n";
    return kExitRuntime;
  }

  std::string material = json(deltas).dump() + fmt_num(rel_threshold);
  for (const auto& t : timelines) material += t.video_id + t.fingerprint;
  for (const auto& a : annotations) material += a.video_id + fmt_num(a.transition_time());
  const auto fp = stable_hash(material);
  json doc = report.to_json();
  doc["format"] = "surprise-metrics/1";
  doc["fingerprint"] = fp;
  const fs::path base = fs::path(o.out_dir) / ("metrics-" + short_fp(fp));
  write_file(base.string() + ".json", doc.dump(2) + "\n");
  write_file(base.string() + ".csv", report.to_csv());
  out << report.to_csv() << base.string() << ".json\n" << base.string() << ".csv\n";
  return kExitOk;
}

int cmd_rollout(const RolloutOptions& o, std::ostream& out) {
  const RunConfig cfg = resolve(o.config, o.over, true);

  const auto manifest = FrameManifest::load(o.manifest);
  auto backend = make_backend(cfg);

  std::string reference = o.reference.value_or(manifest.reference_caption);
  if (reference.empty()) {
    if (const auto* sb = dynamic_cast<const ScriptedBackend*>(backend.get())) {
      reference = sb->world().reference_caption;
    }
  }
  if (reference.empty()) {
    throw InvalidInput("no reference caption: pass --reference or set reference_caption in the manifest");
  }

  auto group = run_rollout(manifest, cfg.scoring, cfg.sampler, *backend, cfg.rollouts, cfg.seed);
  assign_rewards(group, *backend, reference);
  group.advantages = normalize_advantages(group.rewards);
  const double loss = belief_loss(group);

  const auto fp = stable_hash(cfg.fingerprint() + std::to_string(cfg.rollouts) + reference);
  json doc = group.to_json();
  doc["format"] = "surprise-rollout/1";
  doc["video_id"] = manifest.video_id;
  doc["fingerprint"] = fp;
  doc["config_fingerprint"] = cfg.fingerprint();
  doc["seed"] = cfg.seed;
  doc["M"] = cfg.rollouts;
  doc["reference"] = reference;
  doc["loss"] = loss;
  const fs::path path = fs::path(o.out_dir) / (manifest.video_id + "-" + short_fp(fp) + ".rollout.json");
  write_file(path, doc.dump(2) + "\n");

  out << "trajectory,seed,reward,advantage\n";
  for (std::size_t r = 0; r < group.trajectories.size(); ++r) {
    out << r << "," << group.trajectories[r].seed << "," << fmt_num(group.rewards[r]) << ","
        << fmt_num(group.advantages[r]) << "\n";
  }
  out << "loss," << fmt_num(loss) << "\n" << path.string() << "\n";
  return kExitOk;
}

std::optional<std::string> capture(const std::string& command) {
  std::array<char, 256> buf{};
  std::string result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return std::nullopt;
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) result += buf.data();
  if (pclose(pipe) != 0) return std::nullopt;
  return result;
}

std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += (c == '\'') ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

int cmd_extract(const ExtractOptions& o, std::ostream& out, std::ostream& err) {
  if (o.video.empty() == o.from_dir.empty()) {
    throw InvalidInput("pass exactly one of --video or --from-dir");
  }
  if (!(o.fps > 0.0)) throw InvalidParameter("--fps must be positive");
  fs::path frames_dir = o.from_dir;
  std::optional<double> duration;
  std::string video_id = o.video_id;

  if (!o.video.empty()) {
    if (!fs::exists(o.video)) throw InvalidInput("video not found: " + o.video);
    if (!capture(o.ffmpeg + " -version > /dev/null 2>&1 && echo ok")) {
      err << "error: '" << o.ffmpeg << "' is not available; extract frames with another tool and "
          << "rerun with --from-dir, or write the manifest by hand\n";
      return kExitRuntime;
    }
    frames_dir = o.frames_dir.empty() ? fs::path(fs::path(o.video).stem().string() + "_frames") : fs::path(o.frames_dir);
    fs::create_directories(frames_dir);
    char rate[32];
    std::snprintf(rate, sizeof rate, "%g", o.fps);
    const auto cmd = o.ffmpeg + " -loglevel error -y -i " + shell_quote(o.video) + " -vf fps=" + rate +
                     " " + shell_quote((frames_dir / "frame_%06d.jpg").string());
    if (std::system(cmd.c_str()) != 0) {
      err << "error: frame extraction failed: " << cmd << "\n";
      return kExitRuntime;
    }
    if (auto probed = capture(o.ffprobe + " -v error -show_entries format=duration -of csv=p=0 " +
                              shell_quote(o.video) + " 2>/dev/null")) {
      try {
        duration = std::stod(*probed);
      } catch (const std::exception&) {
      }
    }
    if (video_id.empty()) video_id = fs::path(o.video).stem().string();
  }

  if (!fs::is_directory(frames_dir)) throw InvalidInput("frame directory not found: " + frames_dir.string());
  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(frames_dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".webp") images.push_back(e.path());
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw InvalidInput("no frame images in " + frames_dir.string());

  FrameManifest m;
  m.video_id = video_id.empty() ? frames_dir.filename().string() : video_id;
  m.fps = o.fps;
  for (std::size_t i = 0; i < images.size(); ++i) {
    m.frames.push_back({i, static_cast<double>(i) / o.fps, fs::absolute(images[i]).string()});
  }
  m.duration = std::max(duration.value_or(0.0), static_cast<double>(images.size()) / o.fps);
  m.validate();
  const fs::path path = o.out.empty() ? fs::path(m.video_id + ".manifest.json") : fs::path(o.out);
  write_file(path, m.to_json().dump(2) + "\n");
  out << m.frames.size() << " frames, " << fmt_num(m.duration) << " s\n" << path.string() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Belief-tracking surprise scoring, surprise-weighted frame sampling and evaluation", "surprise"};
  app.require_subcommand(1);

  ScoreOptions score;
  auto* s = app.add_subcommand("score", "Score one or more videos into surprise timelines");
  s->add_option("manifests", score.manifests, "Frame manifest file(s)")->required()->check(CLI::ExistingFile);
  s->add_option("-c,--config", score.config, "Run config file")->required()->check(CLI::ExistingFile);
  s->add_option("-o,--out-dir", score.out_dir, "Output directory");
  s->add_option("--workers", score.over.workers, "Videos scored concurrently")->check(CLI::PositiveNumber);
  score.over.add_scoring(s);

  SampleOptions sample;
  auto* sa = app.add_subcommand("sample", "Turn a timeline into a surprise-weighted frame plan");
  sa->add_option("timeline", sample.timeline, "Timeline file")->required()->check(CLI::ExistingFile);
  sa->add_option("-c,--config", sample.config, "Run config file for sampler defaults")->check(CLI::ExistingFile);
  sa->add_option("--seed", sample.over.seed, "Sampling seed");
  sa->add_option("-o,--out-dir", sample.out_dir, "Output directory");
  sample.over.add_sampler(sa);

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Localization metrics against annotations");
  e->add_option("timelines", ev.timelines, "Timeline file or directory")->required()->check(CLI::ExistingPath);
  e->add_option("-a,--annotations", ev.annotations, "Annotation file")->required()->check(CLI::ExistingFile);
  e->add_option("-c,--config", ev.config, "Run config file for metric defaults")->check(CLI::ExistingFile);
  e->add_option("-o,--out-dir", ev.out_dir, "Output directory");
  ev.over.add_eval(e);

  RolloutOptions ro;
  auto* r = app.add_subcommand("rollout", "Rollout group, rewards, advantages and loss value");
  r->add_option("manifest", ro.manifest, "Frame manifest file")->required()->check(CLI::ExistingFile);
  r->add_option("-c,--config", ro.config, "Run config file")->required()->check(CLI::ExistingFile);
  r->add_option("-M,--rollouts", ro.over.rollouts, "Trajectories per group")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));
  r->add_option("--reference", ro.reference, "Reference caption for the judge");
  r->add_option("-o,--out-dir", ro.out_dir, "Output directory");
  ro.over.add_scoring(r);
  ro.over.add_sampler(r);

  ExtractOptions ex;
  auto* x = app.add_subcommand("extract", "Build a frame manifest from a video (via ffmpeg) or a frame directory");
  x->add_option("--video", ex.video, "Video file to decode with ffmpeg");
  x->add_option("--from-dir", ex.from_dir, "Existing directory of frame images");
  x->add_option("--frames-dir", ex.frames_dir, "Where extracted frames go");
  x->add_option("--fps", ex.fps, "Frame rate of the listed frames");
  x->add_option("--video-id", ex.video_id, "Video id (default: file or directory name)");
  x->add_option("-o,--out", ex.out, "Manifest path");
  x->add_option("--ffmpeg", ex.ffmpeg, "ffmpeg executable");
  x->add_option("--ffprobe", ex.ffprobe, "ffprobe executable");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::ParseError& pe) {
    app.exit(pe, out, err);
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_score(score, out);
    if (sa->parsed()) return cmd_sample(sample, out);
    if (e->parsed()) return cmd_eval(ev, out, err);
    if (r->parsed()) return cmd_rollout(ro, out);
    if (x->parsed()) return cmd_extract(ex, out, err);
  } catch (const Error& failure) {
    err << "error: " << failure.what() << "\n";
    switch (failure.kind()) {
      case ErrorKind::InvalidInput:
      case ErrorKind::InvalidParameter:
      case ErrorKind::Shape:
        return kExitUsage;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& failure) {
    err << "error: " << failure.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace surprise::cli
