#include "surprise/scripted_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "surprise/error.hpp"

namespace surprise {

const std::string& WorldScript::symbol_at(double t) const {
  for (const auto& s : spans) {
    if (t <= s.end) return s.symbol;
  }
  return spans.back().symbol;
}

void WorldScript::validate() const {
  if (spans.empty()) throw InvalidInput("world script has no spans");
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (!(spans[i].end > spans[i - 1].end)) {
      throw InvalidInput("world script span ends must be strictly increasing");
    }
  }
  for (const auto& s : spans) {
    const auto it = hypotheses.find(s.symbol);
    if (it == hypotheses.end() || it->second.empty()) {
      throw InvalidInput("world script has no hypotheses for symbol '" + s.symbol + "'");
    }
  }
  for (const auto& [sym, pool] : hypotheses) {
    for (const auto& h : pool) {
      if (h.text.empty()) throw InvalidInput("world script hypothesis text is empty");
      auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
      if (h.prior_nll && bad(*h.prior_nll)) throw InvalidInput("negative or non-finite prior_nll");
      for (const auto& [k, v] : h.nll) {
        if (bad(v)) throw InvalidInput("negative or non-finite nll for '" + h.text + "'");
      }
      for (const auto& [k, v] : h.yes) {
        if (bad(v) || v > 1.0) throw InvalidInput("yes-probability outside [0, 1]");
      }
    }
  }
}

WorldScript WorldScript::from_json(const nlohmann::json& j) {
  WorldScript w;
  try {
    w.world_id = j.value("world_id", "");
    for (const auto& s : j.at("spans")) {
      w.spans.push_back({s.at("end").get<double>(), s.at("symbol").get<std::string>()});
    }
    for (const auto& [sym, pool] : j.at("hypotheses").items()) {
      auto& dst = w.hypotheses[sym];
      for (const auto& h : pool) {
        ScriptedHypothesis sh;
        sh.text = h.at("text").get<std::string>();
        if (h.contains("prior_nll")) sh.prior_nll = h["prior_nll"].get<double>();
        if (h.contains("nll")) sh.nll = h["nll"].get<std::map<std::string, double>>();
        if (h.contains("yes")) sh.yes = h["yes"].get<std::map<std::string, double>>();
        dst.push_back(std::move(sh));
      }
    }
    if (j.contains("captions")) w.captions = j["captions"].get<std::map<std::string, std::string>>();
    w.default_nll = j.value("default_nll", 5.0);
    w.default_yes = j.value("default_yes", 0.05);
    w.reference_caption = j.value("reference_caption", "");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed world script: ") + e.what());
  }
  w.validate();
  return w;
}

WorldScript WorldScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open world script " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("world script " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json WorldScript::to_json() const {
  nlohmann::json j;
  j["world_id"] = world_id;
  j["spans"] = nlohmann::json::array();
  for (const auto& s : spans) j["spans"].push_back({{"end", s.end}, {"symbol", s.symbol}});
  j["hypotheses"] = nlohmann::json::object();
  for (const auto& [sym, pool] : hypotheses) {
    auto& arr = j["hypotheses"][sym] = nlohmann::json::array();
    for (const auto& h : pool) {
      nlohmann::json e{{"text", h.text}};
      if (h.prior_nll) e["prior_nll"] = *h.prior_nll;
      if (!h.nll.empty()) e["nll"] = h.nll;
      if (!h.yes.empty()) e["yes"] = h.yes;
      arr.push_back(std::move(e));
    }
  }
  j["captions"] = captions;
  j["default_nll"] = default_nll;
  j["default_yes"] = default_yes;
  j["reference_caption"] = reference_caption;
  return j;
}

ScriptedBackend::ScriptedBackend(WorldScript world) : world_(std::move(world)) {
  world_.validate();
  for (const auto& [sym, pool] : world_.hypotheses) {
    for (const auto& h : pool) by_text_.emplace(h.text, &h);
  }
}

const std::string& ScriptedBackend::context_symbol(const Context& ctx) const {
  if (ctx.prior_window.empty()) return world_.spans.front().symbol;
  return world_.symbol_at(ctx.prior_window.back().timestamp);
}

const ScriptedHypothesis* ScriptedBackend::find(std::string_view text) const {
  const auto it = by_text_.find(std::string(text));
  return it == by_text_.end() ? nullptr : it->second;
}

std::vector<std::string> ScriptedBackend::do_generate(const Context& ctx,
                                                      const GenerationParams& params) {
  const auto& pool = world_.hypotheses.at(context_symbol(ctx));
  // Portable Fisher-Yates so the draw does not depend on the standard library.
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  std::vector<std::string> out;
  out.reserve(params.n);
  for (int i = 0; i < params.n; ++i) out.push_back(pool[order[i % order.size()]].text);
  return out;
}

double ScriptedBackend::do_score_nll(std::string_view hypothesis, const Context& ctx) {
  const auto* h = find(hypothesis);
  if (!h) return world_.default_nll;
  if (!ctx.observed_frame && h->prior_nll) return *h->prior_nll;
  const auto& sym = ctx.observed_frame ? world_.symbol_at(ctx.observed_frame->timestamp)
                                       : context_symbol(ctx);
  const auto it = h->nll.find(sym);
  return it == h->nll.end() ? world_.default_nll : it->second;
}

double ScriptedBackend::do_score_yes(std::string_view hypothesis, const Context& ctx) {
  const auto* h = find(hypothesis);
  if (!h) return world_.default_yes;
  const auto it = h->yes.find(world_.symbol_at(ctx.observed_frame->timestamp));
  return it == h->yes.end() ? world_.default_yes : it->second;
}

std::string ScriptedBackend::do_summarize(std::string_view text, std::size_t word_budget) {
  return trim_to_word_budget(text, word_budget);
}

Embedding ScriptedBackend::do_embed(std::string_view text) { return hashed_bag_of_words(text); }

std::string ScriptedBackend::do_caption_event(const Context& ctx) {
  const auto it = world_.captions.find(world_.symbol_at(ctx.observed_frame->timestamp));
  return it == world_.captions.end() ? std::string("The scene continues.") : it->second;
}

std::string ScriptedBackend::do_caption_video(std::span<const FrameRef> frames) {
  std::vector<double> times;
  for (const auto& f : frames) times.push_back(f.timestamp);
  std::sort(times.begin(), times.end());
  std::string out;
  const std::string* prev = nullptr;
  for (double t : times) {
    const auto& sym = world_.symbol_at(t);
    if (prev && *prev == sym) continue;
    prev = &sym;
    const auto it = world_.captions.find(sym);
    if (it == world_.captions.end()) continue;
    if (!out.empty()) out += ' ';
    out += it->second;
  }
  return out.empty() ? std::string("The scene continues.") : out;
}

std::string ScriptedBackend::do_judge(std::string_view reference, std::string_view response) {
  const auto ref_words = tokenize_words(reference);
  const auto resp_words = tokenize_words(response);
  const std::set<std::string> ref(ref_words.begin(), ref_words.end());
  const std::set<std::string> resp(resp_words.begin(), resp_words.end());
  double recall = 0.0;
  if (!ref.empty()) {
    std::size_t hit = 0;
    for (const auto& w : ref) hit += resp.count(w);
    recall = static_cast<double>(hit) / static_cast<double>(ref.size());
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "Score: %.2f", recall);
  return buf;
}

}  // namespace surprise
