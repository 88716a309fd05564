#pragma once

#include <string>
#include <string_view>

namespace srvf::text {

std::string trim(std::string_view s);

// Collapses runs of whitespace to a single space and strips both ends.
std::string normalize_ws(std::string_view s);

std::string to_lower(std::string_view s);

// Canonical form used to compare label strings coming back from an LLM:
// spaces around '-' and '_' are dropped, ASCII letters lowered.
std::string normalize_label(std::string_view s);

bool contains(std::string_view hay, std::string_view needle);

}  // namespace srvf::text
