#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace upsd::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Lowercase alphanumerics only: "Comment-then Shift" -> "commentthenshift".
std::string fold_label(std::string_view s);

/// Strips surrounding code fences, matching quote pairs and a leading
/// "Psychologist:" / "Inquirer:" speaker tag.
std::string unwrap_utterance(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace upsd::text
