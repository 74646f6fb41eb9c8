#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "surprise/belief.hpp"
#include "surprise/cli.hpp"
#include "surprise/config.hpp"
#include "surprise/error.hpp"
#include "surprise/eval.hpp"
#include "surprise/grpo.hpp"
#include "surprise/pipeline.hpp"
#include "surprise/sampler.hpp"
#include "surprise/scripted_backend.hpp"

namespace py = pybind11;
using namespace surprise;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// wraps these with json.loads/json.dumps.
std::string score_json(const std::string& manifest_json, const std::string& config_path) {
  const auto cfg = RunConfig::load(config_path);
  const auto manifest = FrameManifest::from_json(nlohmann::json::parse(manifest_json));
  auto backend = make_backend(cfg);
  py::gil_scoped_release release;
  auto tl = score_video(manifest, cfg.scoring, *backend);
  tl.fingerprint = cfg.fingerprint();
  return tl.to_json().dump();
}

std::string sample_json(const std::string& timeline_json, std::size_t frame_budget, double tau_s,
                        std::uint64_t seed, const std::string& normalize, bool distinct) {
  const auto tl = SurpriseTimeline::from_json(nlohmann::json::parse(timeline_json));
  SamplerConfig sc;
  sc.tau_s = tau_s;
  sc.frame_budget = frame_budget;
  sc.distinct = distinct;
  if (normalize != "auto") sc.normalize = parse_normalize_method(normalize);
  sc.validate();
  const auto scores = normalize_scores(tl, sc.normalization_for(tl.config.mode));
  const auto probs = segment_probabilities(scores, Temperature{tau_s});
  const auto segments = tl.segments();
  auto plan = sample_frames(probs, segments, tl.manifest, frame_budget, seed, distinct);
  plan.source_fingerprint = tl.fingerprint;
  return plan.to_json().dump();
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of surprise_engine";

  auto base = py::register_exception<Error>(m, "SurpriseError", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<CapabilityError>(m, "CapabilityError", base.ptr());
  py::register_exception<RewardParseError>(m, "RewardParseError", base.ptr());
  py::register_exception<RunError>(m, "RunError", base.ptr());

  m.def(
      "distribution_from_nll",
      [](const std::vector<double>& nlls, double tau) {
        const auto d = distribution_from_nll(nlls, Temperature{tau});
        return std::vector<double>(d.probs().begin(), d.probs().end());
      },
      py::arg("nlls"), py::arg("tau") = 1.0);
  m.def(
      "kl_divergence",
      [](const std::vector<double>& post, const std::vector<double>& prior) { return kl_divergence(post, prior); },
      py::arg("post"), py::arg("prior"));
  m.def(
      "jsd", [](const std::vector<double>& post, const std::vector<double>& prior) { return jsd(post, prior); },
      py::arg("post"), py::arg("prior"));
  m.def(
      "surprise",
      [](const std::vector<double>& prior_nlls, const std::vector<double>& post_nlls, double tau,
         const std::string& mode) {
        return surprise::surprise(prior_nlls, post_nlls, Temperature{tau}, parse_divergence_mode(mode)).value;
      },
      py::arg("prior_nlls"), py::arg("post_nlls"), py::arg("tau") = 1.0, py::arg("mode") = "kl");

  m.def("budget_for_duration", &budget_for_duration, py::arg("duration_s"), py::arg("cap") = 512);
  m.def(
      "segment_probabilities",
      [](const std::vector<double>& scores, double tau_s) {
        const auto d = segment_probabilities(scores, Temperature{tau_s});
        return std::vector<double>(d.probs().begin(), d.probs().end());
      },
      py::arg("scores"), py::arg("tau_s") = 0.7);

  m.def("score_json", &score_json, py::arg("manifest_json"), py::arg("config_path"));
  m.def("sample_json", &sample_json, py::arg("timeline_json"), py::arg("frame_budget"), py::arg("tau_s"),
        py::arg("seed"), py::arg("normalize"), py::arg("distinct"));

  m.def("accuracy_at_delta", &accuracy_at_delta, py::arg("predicted"), py::arg("truth"), py::arg("delta"));
  m.def(
      "temporal_iou",
      [](const std::vector<std::pair<double, double>>& pred, const std::vector<std::pair<double, double>>& truth) {
        auto to_set = [](const std::vector<std::pair<double, double>>& v) {
          std::vector<Interval> out;
          for (auto [s, e] : v) out.push_back({s, e});
          return IntervalSet(std::move(out));
        };
        return temporal_iou(to_set(pred), to_set(truth));
      },
      py::arg("predicted"), py::arg("truth"));
  m.def(
      "spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); },
      py::arg("a"), py::arg("b"));

  m.def("parse_reward", [](const std::string& s) { return parse_reward(s); }, py::arg("judge_output"));
  m.def(
      "normalize_advantages", [](const std::vector<double>& r) { return normalize_advantages(r); },
      py::arg("rewards"));
  m.def(
      "belief_loss",
      [](const std::vector<double>& advantages, const std::vector<std::vector<std::vector<double>>>& logprobs) {
        if (advantages.size() != logprobs.size()) throw ShapeError("one logprob grid per advantage");
        RolloutGroup g;
        g.advantages = advantages;
        for (const auto& grid : logprobs) {
          Trajectory t;
          t.hypothesis_logprobs = grid;
          g.trajectories.push_back(std::move(t));
        }
        return belief_loss(g);
      },
      py::arg("advantages"), py::arg("logprobs"));

  m.def("run_cli", &run_cli, py::arg("args"));
}
