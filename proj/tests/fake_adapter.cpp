// Line-delimited JSON adapter used by the adapter tests.
//
//   fake_adapter [--mode normal|reverse|malformed|exit|error] [--dim N] [--log FILE]
//
// reverse buffers every request that arrives within 200 ms and answers the
// batch last-first.

#include <poll.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fake_adapter_logic.hpp"

namespace {

bool read_line(std::string& buffer, std::string& line, int timeout_ms) {
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    pollfd p{STDIN_FILENO, POLLIN, 0};
    if (::poll(&p, 1, timeout_ms) <= 0) return false;
    char chunk[4096];
    const ssize_t n = ::read(STDIN_FILENO, chunk, sizeof chunk);
    if (n <= 0) std::exit(0);
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

void emit(const std::string& s) {
  std::cout << s << "\n";
  std::cout.flush();
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "normal", log_path;
  std::size_t dim = 26;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--mode") mode = argv[i + 1];
    if (flag == "--dim") dim = std::stoul(argv[i + 1]);
    if (flag == "--log") log_path = argv[i + 1];
  }
  std::ofstream log;
  if (!log_path.empty()) log.open(log_path, std::ios::app);

  std::string buffer, line;
  while (true) {
    if (!read_line(buffer, line, -1)) continue;
    if (log.is_open()) log << line << std::endl;
    if (mode == "exit") return 3;
    const auto req = nlohmann::json::parse(line);
    if (mode == "malformed") {
      emit("this is not json");
    } else if (mode == "error") {
      emit(nlohmann::json{{"req_id", req.at("req_id")}, {"ok", false}, {"error", "boom"}}.dump());
    } else if (mode == "reverse") {
      std::vector<nlohmann::json> batch{req};
      while (read_line(buffer, line, 200)) batch.push_back(nlohmann::json::parse(line));
      for (auto it = batch.rbegin(); it != batch.rend(); ++it) emit(fake_adapter::respond(*it, dim).dump());
    } else {
      emit(fake_adapter::respond(req, dim).dump());
    }
  }
}
