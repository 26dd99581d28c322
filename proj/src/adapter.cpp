#include "textxai/adapter.hpp"

#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>

#include "textxai/digest.hpp"

namespace textxai {

std::string_view to_string(BackendRole role) {
  switch (role) {
    case BackendRole::summarizer: return "summarizer";
    case BackendRole::captioner: return "captioner";
    case BackendRole::embedder: return "embedder";
  }
  return "unknown";
}

nlohmann::json make_request(const std::string& req_id, BackendRole role, const std::string& op, nlohmann::json args) {
  return nlohmann::json{{"req_id", req_id}, {"role", to_string(role)}, {"op", op}, {"args", std::move(args)}};
}

AdapterResponse parse_response(const nlohmann::json& message, const std::string& backend_id) {
  if (!message.is_object() || !message.contains("req_id") || !message["req_id"].is_string() ||
      !message.contains("ok") || !message["ok"].is_boolean()) {
    throw BackendError(backend_id, "malformed adapter response: " + message.dump().substr(0, 200));
  }
  AdapterResponse r;
  r.req_id = message["req_id"].get<std::string>();
  r.ok = message["ok"].get<bool>();
  if (message.contains("result")) r.result = message["result"];
  if (message.contains("error") && message["error"].is_string()) r.error = message["error"].get<std::string>();
  return r;
}

namespace {

nlohmann::json unwrap(const AdapterResponse& r, const std::string& backend_id) {
  if (!r.ok) throw BackendError(backend_id, "adapter error: " + (r.error.empty() ? "unspecified" : r.error));
  if (r.result.is_null()) throw BackendError(backend_id, "adapter response has no result");
  return r.result;
}

void write_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const ssize_t n = ::write(fd, s.data() + off, s.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::backend_error, std::string("adapter pipe write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

SubprocessTransport::SubprocessTransport(std::vector<std::string> command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw Error(ErrorKind::config_error, "subprocess adapter needs a command");
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorKind::backend_error, "cannot create adapter pipes");
  }
  std::vector<char*> argv;
  for (auto& a : command_) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw Error(ErrorKind::backend_error, "fork failed for adapter " + command_[0]);
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  reader_ = std::thread([this] { reader_loop(); });
}

SubprocessTransport::~SubprocessTransport() {
  if (to_child_ >= 0) ::close(to_child_);
  if (reader_.joinable()) reader_.join();
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void SubprocessTransport::fail_all_pending(const std::string& why) {
  std::lock_guard lock(pending_mu_);
  dead_reason_ = why;
  for (auto& [id, promise] : pending_) {
    promise.set_exception(std::make_exception_ptr(Error(ErrorKind::backend_error, why)));
  }
  pending_.clear();
}

void SubprocessTransport::reader_loop() {
  std::string buffer;
  char chunk[4096];
  while (true) {
    const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty()) continue;
      AdapterResponse resp;
      try {
        resp = parse_response(nlohmann::json::parse(line), command_[0]);
      } catch (const std::exception&) {
        // A line we cannot attribute poisons every outstanding request.
        std::lock_guard lock(pending_mu_);
        for (auto& [id, promise] : pending_) {
          promise.set_exception(std::make_exception_ptr(
              Error(ErrorKind::backend_error, "malformed adapter response: " + line.substr(0, 200))));
        }
        pending_.clear();
        continue;
      }
      std::lock_guard lock(pending_mu_);
      auto it = pending_.find(resp.req_id);
      if (it == pending_.end()) continue;
      it->second.set_value(std::move(resp));
      pending_.erase(it);
    }
  }
  fail_all_pending("adapter process exited");
}

nlohmann::json SubprocessTransport::call(const std::string& backend_id, BackendRole role, const std::string& op,
                                         nlohmann::json args) {
  const std::string req_id = "r" + std::to_string(next_id_++);
  std::future<AdapterResponse> fut;
  {
    std::lock_guard lock(pending_mu_);
    if (dead_reason_) throw BackendError(backend_id, *dead_reason_);
    fut = pending_[req_id].get_future();
  }
  try {
    const std::string line = make_request(req_id, role, op, std::move(args)).dump() + "\n";
    std::lock_guard lock(write_mu_);
    write_all(to_child_, line);
  } catch (const std::exception& e) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(req_id);
    throw BackendError(backend_id, e.what());
  }
  if (fut.wait_for(timeout_) != std::future_status::ready) {
    std::lock_guard lock(pending_mu_);
    pending_.erase(req_id);
    throw BackendError(backend_id, "timeout waiting for " + op + " (" + req_id + ")");
  }
  AdapterResponse resp;
  try {
    resp = fut.get();
  } catch (const std::exception& e) {
    throw BackendError(backend_id, e.what());
  }
  return unwrap(resp, backend_id);
}

HttpTransport::HttpTransport(std::string url, std::chrono::milliseconds timeout) : timeout_(timeout) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::config_error, "adapter url needs a scheme: " + url);
  const auto path_pos = url.find('/', scheme + 3);
  host_ = url.substr(0, path_pos);
  path_ = path_pos == std::string::npos ? "/" : url.substr(path_pos);
}

nlohmann::json HttpTransport::call(const std::string& backend_id, BackendRole role, const std::string& op,
                                   nlohmann::json args) {
  const std::string req_id = "h" + std::to_string(next_id_++);
  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_).count();
  client.set_read_timeout(static_cast<time_t>(secs), 0);
  client.set_write_timeout(static_cast<time_t>(secs), 0);
  auto res = client.Post(path_, make_request(req_id, role, op, std::move(args)).dump(), "application/json");
  if (!res) throw BackendError(backend_id, "http request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError(backend_id, "http status " + std::to_string(res->status));
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const std::exception&) {
    throw BackendError(backend_id, "malformed adapter response: " + res->body.substr(0, 200));
  }
  auto resp = parse_response(body, backend_id);
  if (resp.req_id != req_id) throw BackendError(backend_id, "response req_id mismatch");
  return unwrap(resp, backend_id);
}

std::shared_ptr<AdapterTransport> make_transport(const AdapterEndpoint& endpoint) {
  if (endpoint.kind == AdapterEndpoint::Kind::http) return std::make_shared<HttpTransport>(endpoint.url, endpoint.timeout);
  return std::make_shared<SubprocessTransport>(endpoint.command, endpoint.timeout);
}

namespace {

std::vector<double> to_vector(const nlohmann::json& result, const std::string& backend_id) {
  if (!result.is_array()) throw BackendError(backend_id, "expected a numeric array result");
  std::vector<double> v;
  v.reserve(result.size());
  for (const auto& x : result) {
    if (!x.is_number()) throw BackendError(backend_id, "expected a numeric array result");
    v.push_back(x.get<double>());
  }
  return v;
}

std::string to_text(const nlohmann::json& result, const std::string& backend_id) {
  if (!result.is_string()) throw BackendError(backend_id, "expected a string result");
  auto s = result.get<std::string>();
  if (s.empty()) throw Error(ErrorKind::empty_response, backend_id + ": empty response");
  return s;
}

}  // namespace

AdapterSummarizer::AdapterSummarizer(std::string id, std::shared_ptr<AdapterTransport> transport,
                                     SummarizerCapabilities caps, std::size_t max_concurrency)
    : id_(std::move(id)), transport_(std::move(transport)), caps_(caps), max_concurrency_(max_concurrency) {}

std::vector<double> AdapterSummarizer::request_vector(const std::string& op, const Matrix& features) const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto row = features.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  nlohmann::json args{{"backend_id", id_},
                      {"payload_digest", matrix_digest(features)},
                      {"shape", {features.rows(), features.cols()}},
                      {"features", std::move(rows)}};
  return to_vector(transport_->call(id_, BackendRole::summarizer, op, std::move(args)), id_);
}

std::vector<double> AdapterSummarizer::score(const Matrix& features) const {
  return request_vector("score_frames", features);
}

std::vector<double> AdapterSummarizer::attention(const Matrix& features) const {
  if (!caps_.provides_attention) return SummarizerBackend::attention(features);
  return request_vector("attention_signal", features);
}

AdapterCaptioner::AdapterCaptioner(std::string id, std::shared_ptr<AdapterTransport> transport,
                                   std::size_t max_concurrency)
    : id_(std::move(id)), transport_(std::move(transport)), max_concurrency_(max_concurrency) {}

std::string AdapterCaptioner::caption(const Clip& clip, const std::string& prompt) const {
  nlohmann::json args{{"backend_id", id_},
                      {"payload_digest", clip.digest},
                      {"clip_path", clip.path.string()},
                      {"clip_fps", clip.fps},
                      {"prompt", prompt},
                      {"temperature", temperature()}};
  return to_text(transport_->call(id_, BackendRole::captioner, "caption_clip", std::move(args)), id_);
}

std::string AdapterCaptioner::summarize(std::span<const std::string> descriptions, const std::string& prompt) const {
  std::vector<std::string> texts(descriptions.begin(), descriptions.end());
  nlohmann::json args{{"backend_id", id_},
                      {"payload_digest", sha256_hex(nlohmann::json(texts).dump())},
                      {"descriptions", texts},
                      {"prompt", prompt},
                      {"temperature", temperature()}};
  return to_text(transport_->call(id_, BackendRole::captioner, "summarize_texts", std::move(args)), id_);
}

AdapterEmbedder::AdapterEmbedder(std::string id, std::size_t dim, std::shared_ptr<AdapterTransport> transport,
                                 std::size_t max_concurrency)
    : id_(std::move(id)), dim_(dim), transport_(std::move(transport)), max_concurrency_(max_concurrency) {}

std::vector<double> AdapterEmbedder::embed(const std::string& text) const {
  nlohmann::json args{{"backend_id", id_}, {"payload_digest", sha256_hex(text)}, {"text", text}};
  return to_vector(transport_->call(id_, BackendRole::embedder, "embed_text", std::move(args)), id_);
}

const std::vector<RegisteredBackend>& registered_backends() {
  static const std::vector<RegisteredBackend> kBackends = {
      {"casum-summe", BackendRole::summarizer, 0, true},
      {"casum-tvsum", BackendRole::summarizer, 0, true},
      {"llava-onevision-7b-4bit", BackendRole::captioner, 0, false},
      {"sbert-all-mpnet-base-v2", BackendRole::embedder, 768, false},
      {"simcse-sup-bert-base-uncased", BackendRole::embedder, 768, false},
  };
  return kBackends;
}

const RegisteredBackend* find_registered_backend(const std::string& id) {
  for (const auto& b : registered_backends()) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

}  // namespace textxai
