#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mms::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercased tokens split on non-alphanumeric bytes (UTF-8 bytes >= 0x80 are
// kept inside tokens).
std::vector<std::string> alnum_tokens(std::string_view s);

// Raw whitespace split, no case folding.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Splits on sentence terminators (.!?) and newlines; pieces are trimmed and
// non-empty.
std::vector<std::string> split_sentences(std::string_view s);

// chars/4 heuristic, backend-agnostic.
std::size_t estimate_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

} // namespace mms::text
