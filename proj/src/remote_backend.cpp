#include "surprise/remote_backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "surprise/error.hpp"

namespace surprise {

using nlohmann::json;

void RemoteConfig::validate() const {
  if (endpoint.empty()) throw InvalidParameter("remote backend: endpoint is required");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0) {
    throw InvalidParameter("remote backend: endpoint must start with http:// or https://");
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (endpoint.rfind("https://", 0) == 0) {
    throw CapabilityError("remote backend: built without OpenSSL, https endpoints are unavailable");
  }
#endif
  if (model.empty()) throw InvalidParameter("remote backend: model is required");
  if (!(timeout_s > 0.0)) throw InvalidParameter("remote backend: timeout must be positive");
  if (retries < 0) throw InvalidParameter("remote backend: retries must be >= 0");
  if (top_logprobs < 1) throw InvalidParameter("remote backend: top_logprobs must be >= 1");
  templates.validate();
}

RemoteConfig RemoteConfig::from_json(const json& j) {
  RemoteConfig c;
  try {
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.chat_path = j.value("chat_path", c.chat_path);
    c.embeddings_path = j.value("embeddings_path", c.embeddings_path);
    c.embedding_model = j.value("embedding_model", c.embedding_model);
    c.token_env = j.value("token_env", c.token_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.retries = j.value("retries", c.retries);
    c.retry_backoff_s = j.value("retry_backoff_s", c.retry_backoff_s);
    c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("remote backend config: ") + e.what());
  }
  return c;
}

json RemoteConfig::to_json() const {
  // The token itself is never serialized, only where to find it.
  return {{"endpoint", endpoint},           {"chat_path", chat_path},
          {"embeddings_path", embeddings_path}, {"model", model},
          {"embedding_model", embedding_model}, {"token_env", token_env},
          {"timeout_s", timeout_s},         {"retries", retries},
          {"retry_backoff_s", retry_backoff_s}, {"top_logprobs", top_logprobs}};
}

namespace wire {

namespace {

std::string mime_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return "image/jpeg";
}

json text_part(const std::string& text) { return {{"type", "text"}, {"text", text}}; }

// History text first, then prior-window images, then the observed image.
json user_message(const std::string& text, const Context& ctx) {
  json content = json::array({text_part(text)});
  for (const auto& f : ctx.prior_window) content.push_back(image_part(f));
  if (ctx.observed_frame) content.push_back(image_part(*ctx.observed_frame));
  return {{"role", "user"}, {"content", std::move(content)}};
}

const json& first_choice(const json& response) {
  if (!response.is_object() || !response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw ProtocolError("response has no choices");
  }
  return response["choices"][0];
}

const json& logprob_content(const json& choice) {
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw CapabilityError("backend did not return token log-probabilities");
  }
  const auto& lp = choice["logprobs"];
  if (!lp.contains("content") || !lp["content"].is_array()) {
    throw CapabilityError("backend did not return token log-probabilities");
  }
  return lp["content"];
}

std::string strip_label(std::string s) {
  auto ltrim = [](std::string& x) {
    x.erase(x.begin(), std::find_if(x.begin(), x.end(),
                                    [](unsigned char c) { return !std::isspace(c); }));
  };
  auto rtrim = [](std::string& x) {
    while (!x.empty() && std::isspace(static_cast<unsigned char>(x.back()))) x.pop_back();
  };
  ltrim(s);
  const std::string label = "hypothesis:";
  if (s.size() >= label.size()) {
    std::string head = s.substr(0, label.size());
    std::transform(head.begin(), head.end(), head.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (head == label) s.erase(0, label.size());
  }
  ltrim(s);
  rtrim(s);
  return s;
}

}  // namespace

json image_part(const FrameRef& frame) {
  const auto& uri = frame.uri;
  std::string url;
  if (uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0 || uri.rfind("data:", 0) == 0) {
    url = uri;
  } else {
    std::filesystem::path p = uri.rfind("file://", 0) == 0 ? uri.substr(7) : uri;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InvalidInput("cannot read frame " + uri);
    std::ostringstream buf;
    buf << in.rdbuf();
    url = "data:" + mime_for(p) + ";base64," + httplib::detail::base64_encode(buf.str());
  }
  return {{"type", "image_url"}, {"image_url", {{"url", url}}}};
}

json generation_request(const RemoteConfig& cfg, const Context& ctx, const GenerationParams& params,
                        int n) {
  const auto text = render(cfg.templates.generation, {{"memory_text", ctx.history_text}});
  return {{"model", cfg.model},
          {"messages", json::array({user_message(text, ctx)})},
          {"n", n},
          {"temperature", 1.0},
          {"top_p", params.nucleus_p},
          {"seed", params.seed},
          {"max_tokens", params.max_words * 4}};
}

json nll_request(const RemoteConfig& cfg, std::string_view hypothesis, const Context& ctx) {
  // The hypothesis placeholder marks where the scored continuation starts;
  // template text after it is not part of the scored prompt.
  const auto& tmpl = cfg.templates.prior_score;
  const auto cut = tmpl.find("{hypothesis}");
  const auto prefix = render(tmpl.substr(0, cut), {{"memory_text", ctx.history_text}});
  return {{"model", cfg.model},
          {"messages", json::array({user_message(prefix, ctx),
                                    {{"role", "assistant"}, {"content", std::string(hypothesis)}}})},
          {"echo", true},
          {"logprobs", true},
          {"max_tokens", 0},
          {"temperature", 0.0}};
}

json yes_request(const RemoteConfig& cfg, std::string_view hypothesis, const Context& ctx) {
  const auto text = render(cfg.templates.posterior_score,
                           {{"memory_text", ctx.history_text}, {"hypothesis", std::string(hypothesis)}});
  return {{"model", cfg.model},
          {"messages", json::array({user_message(text, ctx)})},
          {"max_tokens", 1},
          {"logprobs", true},
          {"top_logprobs", cfg.top_logprobs},
          {"temperature", 0.0}};
}

json text_request(const RemoteConfig& cfg, const std::string& prompt, std::span<const FrameRef> frames,
                  int max_tokens) {
  json content = json::array({text_part(prompt)});
  for (const auto& f : frames) content.push_back(image_part(f));
  return {{"model", cfg.model},
          {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})},
          {"max_tokens", max_tokens},
          {"temperature", 0.0}};
}

std::vector<std::string> parse_choice_texts(const json& response) {
  first_choice(response);
  std::vector<std::string> out;
  for (const auto& c : response["choices"]) {
    if (!c.contains("message") || !c["message"].contains("content") ||
        !c["message"]["content"].is_string()) {
      throw ProtocolError("choice without message content");
    }
    out.push_back(strip_label(c["message"]["content"].get<std::string>()));
  }
  return out;
}

double parse_continuation_nll(const json& response) {
  const auto& content = logprob_content(first_choice(response));
  if (content.empty()) throw ProtocolError("empty logprob list for scored continuation");
  double total = 0.0;
  for (const auto& tok : content) {
    if (!tok.contains("logprob") || !tok["logprob"].is_number()) {
      throw ProtocolError("token entry without numeric logprob");
    }
    const double lp = tok["logprob"].get<double>();
    if (!std::isfinite(lp) || lp > 0.0) throw ProtocolError("token logprob must be finite and <= 0");
    total += lp;
  }
  return -total;
}

double parse_yes_probability(const json& response) {
  const auto& content = logprob_content(first_choice(response));
  if (content.empty()) throw ProtocolError("no generated token in yes/no response");
  const auto& first = content[0];
  json alternatives = first.value("top_logprobs", json::array());
  if (alternatives.empty()) alternatives.push_back(first);
  double mass = 0.0;
  for (const auto& alt : alternatives) {
    std::string tok = alt.value("token", "");
    tok.erase(std::remove_if(tok.begin(), tok.end(),
                             [](unsigned char c) { return std::isspace(c) || std::ispunct(c); }),
              tok.end());
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (tok == "yes") mass += std::exp(alt.value("logprob", -INFINITY));
  }
  return std::clamp(mass, 0.0, 1.0);
}

Embedding parse_embedding(const json& response) {
  try {
    Embedding e;
    e.values = response.at("data").at(0).at("embedding").get<std::vector<double>>();
    for (double v : e.values) {
      if (!std::isfinite(v)) throw ProtocolError("non-finite embedding value");
    }
    return e;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed embedding response: ") + e.what());
  }
}

}  // namespace wire

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (const char* tok = std::getenv(cfg_.token_env.c_str())) token_ = tok;
}

json RemoteBackend::post(const std::string& path, const json& body) {
  const auto payload = body.dump();
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
  const int attempts = cfg_.retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(cfg_.endpoint);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
    } else if (res->status >= 400) {
      throw ProtocolError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                          res->body.substr(0, 200));
    } else {
      try {
        return json::parse(res->body);
      } catch (const json::exception&) {
        throw ProtocolError("response from " + path + " is not valid JSON");
      }
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(std::chrono::duration<double>(cfg_.retry_backoff_s * attempt));
    }
  }
  throw TransportError(cfg_.endpoint + path + " unreachable after " + std::to_string(attempts) +
                           " attempt(s): " + last_error,
                       attempts, true);
}

std::string RemoteBackend::first_text(const json& response) const {
  return wire::parse_choice_texts(response).front();
}

std::vector<std::string> RemoteBackend::do_generate(const Context& ctx,
                                                    const GenerationParams& params) {
  // Some servers ignore n; keep asking for the remainder a few times.
  std::vector<std::string> out;
  for (int round = 0; round < 3 && static_cast<int>(out.size()) < params.n; ++round) {
    GenerationParams p = params;
    p.seed = params.seed + static_cast<std::uint64_t>(round);
    const int want = params.n - static_cast<int>(out.size());
    for (auto& t : wire::parse_choice_texts(post(cfg_.chat_path, wire::generation_request(cfg_, ctx, p, want)))) {
      if (static_cast<int>(out.size()) < params.n && !t.empty()) out.push_back(std::move(t));
    }
  }
  if (static_cast<int>(out.size()) != params.n) {
    throw ProtocolError("backend produced " + std::to_string(out.size()) + " of " +
                        std::to_string(params.n) + " hypotheses");
  }
  return out;
}

double RemoteBackend::do_score_nll(std::string_view hypothesis, const Context& ctx) {
  return wire::parse_continuation_nll(post(cfg_.chat_path, wire::nll_request(cfg_, hypothesis, ctx)));
}

double RemoteBackend::do_score_yes(std::string_view hypothesis, const Context& ctx) {
  return wire::parse_yes_probability(post(cfg_.chat_path, wire::yes_request(cfg_, hypothesis, ctx)));
}

std::string RemoteBackend::do_summarize(std::string_view text, std::size_t word_budget) {
  const auto prompt = render(cfg_.templates.summarize,
                             {{"text", std::string(text)}, {"word_budget", std::to_string(word_budget)}});
  return first_text(post(cfg_.chat_path, wire::text_request(cfg_, prompt, {},
                                                            static_cast<int>(word_budget) * 2)));
}

Embedding RemoteBackend::do_embed(std::string_view text) {
  if (cfg_.embedding_model.empty()) return hashed_bag_of_words(text);
  return wire::parse_embedding(post(cfg_.embeddings_path,
                                    {{"model", cfg_.embedding_model}, {"input", std::string(text)}}));
}

std::string RemoteBackend::do_caption_event(const Context& ctx) {
  const auto prompt = render(cfg_.templates.caption, {{"memory_text", ctx.history_text}});
  std::vector<FrameRef> frames = ctx.prior_window;
  frames.push_back(*ctx.observed_frame);
  return first_text(post(cfg_.chat_path, wire::text_request(cfg_, prompt, frames, 96)));
}

std::string RemoteBackend::do_caption_video(std::span<const FrameRef> frames) {
  return first_text(post(cfg_.chat_path, wire::text_request(cfg_, cfg_.templates.video_caption, frames, 256)));
}

std::string RemoteBackend::do_judge(std::string_view reference, std::string_view response) {
  const auto prompt = render(cfg_.templates.judge,
                             {{"gt", std::string(reference)}, {"response", std::string(response)}});
  return first_text(post(cfg_.chat_path, wire::text_request(cfg_, prompt, {}, 8)));
}

}  // namespace surprise
