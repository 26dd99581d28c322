#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace textxai {

enum class ErrorKind {
  invalid_input,
  invariant_violation,
  out_of_range,
  backend_error,
  unsupported_capability,
  empty_response,
  clip_unavailable,
  malformed_container,
  missing_key,
  integrity_error,
  undefined_similarity,
  config_error,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers can route
/// it (quarantine a video, fail one combination, abort the run).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by backend gateways; the message is prefixed with the backend id.
class BackendError : public Error {
 public:
  BackendError(std::string backend_id, const std::string& message)
      : Error(ErrorKind::backend_error, backend_id + ": " + message),
        backend_id_(std::move(backend_id)) {}

  const std::string& backend_id() const noexcept { return backend_id_; }

 private:
  std::string backend_id_;
};

}  // namespace textxai
