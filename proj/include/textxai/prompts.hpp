#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace textxai {

inline constexpr std::string_view kDescribePromptId = "describe_v1";
inline constexpr std::string_view kMergePromptId = "merge_v1";

inline constexpr std::string_view kDescribePrompt =
    "Describe the most prominent objects and events in the video, in 3 sentences. "
    "Don't mention background details.";
inline constexpr std::string_view kMergePrompt =
    "Write a brief summary that covers all 3 descriptions equally. "
    "Avoid assumptions and background details.";

/// id -> exact prompt string. Always holds the two built-in prompts; they
/// can be re-declared by a registry file only with byte-identical text.
class PromptRegistry {
 public:
  PromptRegistry();

  /// Loads a UTF-8 JSON object {"id": "prompt", ...} on top of the built-ins.
  static PromptRegistry from_file(const std::filesystem::path& path);

  void add(const std::string& id, const std::string& text);
  bool contains(const std::string& id) const { return prompts_.count(id) > 0; }
  /// Throws invalid_input for an unregistered id.
  const std::string& get(const std::string& id) const;

  /// The merge prompt with its description count substituted; the literal
  /// built-in string when count == 3.
  std::string merge_prompt(std::size_t count) const;

  const std::map<std::string, std::string>& all() const noexcept { return prompts_; }

 private:
  std::map<std::string, std::string> prompts_;
};

}  // namespace textxai
