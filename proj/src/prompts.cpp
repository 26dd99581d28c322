#include "textxai/prompts.hpp"

#include <fstream>

#include <json.hpp>

#include "textxai/error.hpp"

namespace textxai {

PromptRegistry::PromptRegistry() {
  prompts_.emplace(kDescribePromptId, kDescribePrompt);
  prompts_.emplace(kMergePromptId, kMergePrompt);
}

PromptRegistry PromptRegistry::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config_error, "cannot read prompt registry " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorKind::config_error, "prompt registry " + path.string() + " is not a JSON object");
  }
  PromptRegistry reg;
  for (const auto& [id, text] : j.items()) {
    if (!text.is_string()) throw Error(ErrorKind::config_error, "prompt '" + id + "' is not a string");
    reg.add(id, text.get<std::string>());
  }
  return reg;
}

void PromptRegistry::add(const std::string& id, const std::string& text) {
  if (id.empty() || text.empty()) throw Error(ErrorKind::config_error, "prompt id and text must be non-empty");
  if (auto it = prompts_.find(id); it != prompts_.end()) {
    if (it->second != text) throw Error(ErrorKind::config_error, "prompt '" + id + "' redeclared with different text");
    return;
  }
  prompts_.emplace(id, text);
}

const std::string& PromptRegistry::get(const std::string& id) const {
  auto it = prompts_.find(id);
  if (it == prompts_.end()) throw Error(ErrorKind::invalid_input, "unknown prompt id '" + id + "'");
  return it->second;
}

std::string PromptRegistry::merge_prompt(std::size_t count) const {
  std::string text = get(std::string(kMergePromptId));
  if (count == 3) return text;
  const std::string needle = " all 3 ";
  if (auto pos = text.find(needle); pos != std::string::npos) {
    text.replace(pos, needle.size(), " all " + std::to_string(count) + " ");
  }
  return text;
}

}  // namespace textxai
