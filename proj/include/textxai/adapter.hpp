#pragma once

// External-adapter protocol. Heavy model runtimes live in separate processes
// and speak line-delimited JSON, either over a subprocess pipe or HTTP POST:
//
//   request  {"req_id": str, "role": "summarizer"|"captioner"|"embedder",
//             "op": str, "args": {...}}
//   response {"req_id": str, "ok": bool, "result": ..., "error": str?}
//
// Responses are matched to requests by req_id; adapters may answer out of
// order.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "textxai/backends.hpp"

namespace textxai {

enum class BackendRole { summarizer, captioner, embedder };

std::string_view to_string(BackendRole role);

nlohmann::json make_request(const std::string& req_id, BackendRole role, const std::string& op, nlohmann::json args);

struct AdapterResponse {
  std::string req_id;
  bool ok = false;
  nlohmann::json result;
  std::string error;
};

/// Throws BackendError (tagged with backend_id) when the message does not
/// follow the response schema.
AdapterResponse parse_response(const nlohmann::json& message, const std::string& backend_id);

/// Sends one request and waits for the matching response.
class AdapterTransport {
 public:
  virtual ~AdapterTransport() = default;
  /// Returns `result` of an ok response; throws BackendError otherwise.
  virtual nlohmann::json call(const std::string& backend_id, BackendRole role, const std::string& op,
                              nlohmann::json args) = 0;
};

/// Spawns `command` once and multiplexes requests over its stdin / stdout.
class SubprocessTransport final : public AdapterTransport {
 public:
  SubprocessTransport(std::vector<std::string> command, std::chrono::milliseconds timeout);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  nlohmann::json call(const std::string& backend_id, BackendRole role, const std::string& op,
                      nlohmann::json args) override;

 private:
  void reader_loop();
  void fail_all_pending(const std::string& why);

  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::thread reader_;
  std::mutex write_mu_;
  std::mutex pending_mu_;
  std::map<std::string, std::promise<AdapterResponse>> pending_;
  std::optional<std::string> dead_reason_;
  std::atomic<unsigned long long> next_id_{0};
};

/// POSTs each request as a JSON body to `url` (http://host:port/path).
class HttpTransport final : public AdapterTransport {
 public:
  HttpTransport(std::string url, std::chrono::milliseconds timeout);

  nlohmann::json call(const std::string& backend_id, BackendRole role, const std::string& op,
                      nlohmann::json args) override;

 private:
  std::string host_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::atomic<unsigned long long> next_id_{0};
};

struct AdapterEndpoint {
  enum class Kind { subprocess, http };
  Kind kind = Kind::subprocess;
  std::vector<std::string> command;
  std::string url;
  std::size_t max_concurrency = 1;
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

std::shared_ptr<AdapterTransport> make_transport(const AdapterEndpoint& endpoint);

class AdapterSummarizer final : public SummarizerBackend {
 public:
  AdapterSummarizer(std::string id, std::shared_ptr<AdapterTransport> transport, SummarizerCapabilities caps,
                    std::size_t max_concurrency);

  std::string id() const override { return id_; }
  SummarizerCapabilities capabilities() const override { return caps_; }
  std::size_t max_concurrency() const override { return max_concurrency_; }
  std::vector<double> score(const Matrix& features) const override;
  std::vector<double> attention(const Matrix& features) const override;

 private:
  std::vector<double> request_vector(const std::string& op, const Matrix& features) const;

  std::string id_;
  std::shared_ptr<AdapterTransport> transport_;
  SummarizerCapabilities caps_;
  std::size_t max_concurrency_;
};

/// Sends a reference to the encoded clip file plus its digest, never frames.
class AdapterCaptioner final : public CaptionerBackend {
 public:
  AdapterCaptioner(std::string id, std::shared_ptr<AdapterTransport> transport, std::size_t max_concurrency);

  std::string id() const override { return id_; }
  std::size_t max_concurrency() const override { return max_concurrency_; }
  std::string caption(const Clip& clip, const std::string& prompt) const override;
  std::string summarize(std::span<const std::string> descriptions, const std::string& prompt) const override;

 private:
  std::string id_;
  std::shared_ptr<AdapterTransport> transport_;
  std::size_t max_concurrency_;
};

class AdapterEmbedder final : public EmbedderBackend {
 public:
  AdapterEmbedder(std::string id, std::size_t dim, std::shared_ptr<AdapterTransport> transport,
                  std::size_t max_concurrency);

  std::string id() const override { return id_; }
  std::size_t dim() const override { return dim_; }
  std::size_t max_concurrency() const override { return max_concurrency_; }
  std::vector<double> embed(const std::string& text) const override;

 private:
  std::string id_;
  std::size_t dim_;
  std::shared_ptr<AdapterTransport> transport_;
  std::size_t max_concurrency_;
};

/// Real-model ids understood by the pipeline configuration.
struct RegisteredBackend {
  std::string id;
  BackendRole role;
  std::size_t dim = 0;            // embedders only
  bool provides_attention = false;  // summarizers only
};

const std::vector<RegisteredBackend>& registered_backends();
const RegisteredBackend* find_registered_backend(const std::string& id);

}  // namespace textxai
