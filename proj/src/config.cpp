#include <algorithm>
#include <fstream>

#include "textxai/clips.hpp"
#include "textxai/dataset.hpp"
#include "textxai/digest.hpp"
#include "textxai/mock_backends.hpp"
#include "textxai/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace textxai {

namespace {

const std::vector<std::string> kKnownKeys = {
    "dataset_id", "container", "video_dir", "keyframe_dir", "prompts",   "summarizer",   "captioner",
    "embedders",  "adapters",  "explainers", "explainer",   "k",         "approaches",   "seed",
    "replacement", "video_set", "summary_size", "videos",   "output_dir", "cache_dir",   "workers"};

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::config_error, what); }

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

AdapterEndpoint endpoint_from_json(const std::string& id, const json& j) {
  if (!j.is_object()) bad("adapter '" + id + "' must be an object");
  AdapterEndpoint e;
  if (j.contains("command") == j.contains("url")) bad("adapter '" + id + "' needs exactly one of command / url");
  if (j.contains("command")) {
    e.kind = AdapterEndpoint::Kind::subprocess;
    e.command = j.at("command").get<std::vector<std::string>>();
    if (e.command.empty()) bad("adapter '" + id + "' has an empty command");
  } else {
    e.kind = AdapterEndpoint::Kind::http;
    e.url = j.at("url").get<std::string>();
  }
  if (j.contains("max_concurrency")) e.max_concurrency = j.at("max_concurrency").get<std::size_t>();
  if (j.contains("timeout_s")) e.timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(j.at("timeout_s").get<double>() * 1000.0));
  return e;
}

json endpoint_to_json(const AdapterEndpoint& e) {
  json j;
  if (e.kind == AdapterEndpoint::Kind::subprocess) {
    j["command"] = e.command;
  } else {
    j["url"] = e.url;
  }
  j["max_concurrency"] = e.max_concurrency;
  j["timeout_s"] = static_cast<double>(e.timeout.count()) / 1000.0;
  return j;
}

std::shared_ptr<AdapterTransport> transport_for(const RunConfig& config, const std::string& id,
                                                std::map<std::string, std::shared_ptr<AdapterTransport>>& made) {
  auto it = config.adapters.find(id);
  if (it == config.adapters.end()) bad("backend '" + id + "' needs an adapter endpoint");
  auto& slot = made[id];
  if (!slot) slot = make_transport(it->second);
  return slot;
}

std::size_t adapter_concurrency(const RunConfig& config, const std::string& id) {
  auto it = config.adapters.find(id);
  if (it == config.adapters.end()) bad("backend '" + id + "' needs an adapter endpoint");
  return it->second.max_concurrency;
}

const RegisteredBackend& registered(const std::string& id, BackendRole role) {
  const RegisteredBackend* b = find_registered_backend(id);
  if (!b || b->role != role) bad("unknown " + std::string(to_string(role)) + " '" + id + "'");
  return *b;
}

}  // namespace

void RunConfig::validate() const {
  if (dataset_id.empty()) bad("dataset_id must be non-empty");
  if (container.empty()) bad("container is required");
  if (summarizer.empty() || captioner.empty()) bad("summarizer and captioner are required");
  if (k.empty()) bad("k must list at least one value");
  for (auto v : k) {
    if (v < 1) bad("k values must be >= 1");
  }
  if (min_topk_fragments < 1) bad("video_set must be >= 1");
  if (summary_size < 1) bad("summary_size must be >= 1");
  if (workers < 1) bad("workers must be >= 1");
  for (auto a : approaches) {
    if (a == ApproachId::not_applicable) bad("approaches may only list approach1 / approach2");
  }
  for (auto e : explainers) {
    if (e == ExplainerId::fixed) bad("the fixed explainer cannot be configured");
  }
  explainer.validate();
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) bad("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) bad("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("dataset_id")) c.dataset_id = j.at("dataset_id").get<std::string>();
    if (j.contains("container")) c.container = resolve(base_dir, j.at("container").get<std::string>());
    if (j.contains("video_dir")) c.video_dir = resolve(base_dir, j.at("video_dir").get<std::string>());
    if (j.contains("keyframe_dir")) c.keyframe_dir = resolve(base_dir, j.at("keyframe_dir").get<std::string>());
    if (j.contains("prompts")) c.prompts = resolve(base_dir, j.at("prompts").get<std::string>());
    if (j.contains("summarizer")) c.summarizer = j.at("summarizer").get<std::string>();
    if (j.contains("captioner")) c.captioner = j.at("captioner").get<std::string>();
    if (j.contains("embedders")) c.embedders = j.at("embedders").get<std::vector<std::string>>();
    if (j.contains("adapters")) {
      for (const auto& [id, e] : j.at("adapters").items()) c.adapters[id] = endpoint_from_json(id, e);
    }
    if (j.contains("explainers")) {
      c.explainers.clear();
      for (const auto& s : j.at("explainers")) c.explainers.push_back(explainer_from_string(s.get<std::string>()));
    }
    if (j.contains("explainer")) {
      if (j.at("explainer").contains("seed")) bad("explainer.seed is derived from the top-level seed");
      c.explainer = j.at("explainer").get<ExplainerConfig>();
    }
    if (j.contains("replacement")) {
      c.explainer.replacement = replacement_from_string(j.at("replacement").get<std::string>());
    }
    if (j.contains("k")) c.k = j.at("k").get<std::vector<std::size_t>>();
    if (j.contains("approaches")) {
      c.approaches.clear();
      for (const auto& s : j.at("approaches")) c.approaches.push_back(approach_from_string(s.get<std::string>()));
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("video_set")) c.min_topk_fragments = j.at("video_set").get<std::size_t>();
    if (j.contains("summary_size")) c.summary_size = j.at("summary_size").get<std::size_t>();
    if (j.contains("videos")) c.videos = j.at("videos").get<std::vector<std::string>>();
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
  } catch (const json::exception& e) {
    bad(std::string("config: ") + e.what());
  }
  std::sort(c.k.begin(), c.k.end());
  c.k.erase(std::unique(c.k.begin(), c.k.end()), c.k.end());
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) bad("config " + path.string() + " is not valid JSON");
  return config_from_json(j, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  json j{{"dataset_id", c.dataset_id},
         {"container", c.container.string()},
         {"summarizer", c.summarizer},
         {"captioner", c.captioner},
         {"embedders", c.embedders},
         {"explainer", c.explainer},
         {"replacement", to_string(c.explainer.replacement)},
         {"k", c.k},
         {"seed", c.seed},
         {"video_set", c.min_topk_fragments},
         {"summary_size", c.summary_size},
         {"videos", c.videos},
         {"output_dir", c.output_dir.string()},
         {"workers", c.workers}};
  if (c.video_dir) j["video_dir"] = c.video_dir->string();
  if (c.keyframe_dir) j["keyframe_dir"] = c.keyframe_dir->string();
  if (c.prompts) j["prompts"] = c.prompts->string();
  if (c.cache_dir) j["cache_dir"] = c.cache_dir->string();
  json explainers = json::array(), approaches = json::array(), adapters = json::object();
  for (auto e : c.explainers) explainers.push_back(to_string(e));
  for (auto a : c.approaches) approaches.push_back(to_string(a));
  for (const auto& [id, e] : c.adapters) adapters[id] = endpoint_to_json(e);
  j["explainer"].erase("seed");
  j["explainers"] = explainers;
  j["approaches"] = approaches;
  j["adapters"] = adapters;
  return j;
}

std::string config_digest(const RunConfig& config) {
  json j = config_to_json(config);
  for (const char* key : {"output_dir", "cache_dir", "workers", "container", "video_dir", "keyframe_dir", "prompts"}) {
    j.erase(key);
  }
  j["container_digest"] = container_digest(config.container);
  if (config.prompts) j["prompts_digest"] = sha256_file(*config.prompts);
  j["clip_slideshow_fps"] = kSlideshowFps;
  // nlohmann::json objects keep keys sorted, so the dump is order-independent.
  return sha256_hex(j.dump());
}

BackendSet make_backends(const RunConfig& config) {
  BackendSet set;
  std::map<std::string, std::shared_ptr<AdapterTransport>> transports;

  if (config.summarizer == "mock-attn") {
    set.summarizer = std::make_shared<AttentionMockSummarizer>();
  } else {
    const auto& reg = registered(config.summarizer, BackendRole::summarizer);
    set.summarizer = std::make_shared<AdapterSummarizer>(
        reg.id, transport_for(config, reg.id, transports), SummarizerCapabilities{reg.provides_attention},
        adapter_concurrency(config, reg.id));
  }

  if (config.captioner == "mock-caption") {
    set.captioner = std::make_shared<MockCaptioner>();
  } else {
    const auto& reg = registered(config.captioner, BackendRole::captioner);
    set.captioner = std::make_shared<AdapterCaptioner>(reg.id, transport_for(config, reg.id, transports),
                                                       adapter_concurrency(config, reg.id));
  }

  for (const auto& id : config.embedders) {
    if (id == "mock-bow") {
      set.embedders.push_back(std::make_shared<BagOfTokensEmbedder>(BagOfTokensEmbedder::Tokens::words));
    } else if (id == "mock-trigram") {
      set.embedders.push_back(std::make_shared<BagOfTokensEmbedder>(BagOfTokensEmbedder::Tokens::char_trigrams));
    } else {
      const auto& reg = registered(id, BackendRole::embedder);
      set.embedders.push_back(std::make_shared<AdapterEmbedder>(reg.id, reg.dim, transport_for(config, reg.id, transports),
                                                                adapter_concurrency(config, reg.id)));
    }
  }
  return set;
}

CachedBackends::CachedBackends(const BackendSet& raw, std::shared_ptr<ResponseCache> cache)
    : summarizer_(std::make_shared<CachedSummarizer>(raw.summarizer, cache)),
      captioner_(std::make_shared<CachedCaptioner>(raw.captioner, cache)) {
  for (const auto& e : raw.embedders) {
    embedders_.push_back(std::make_shared<CachedEmbedder>(e, cache));
    embedder_view_.push_back(embedders_.back());
  }
}

std::size_t CachedBackends::backend_calls() const {
  std::size_t n = summarizer_->backend_calls() + captioner_->backend_calls();
  for (const auto& e : embedders_) n += e->backend_calls();
  return n;
}

}  // namespace textxai
