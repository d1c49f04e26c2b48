#include "mms/text.hpp"

#include <cctype>

namespace mms::text {

namespace {

bool is_token_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

} // namespace

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> alnum_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : s) {
        if (is_token_byte(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.push_back(static_cast<char>(c));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> sentences;
    std::string current;
    for (char c : s) {
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            std::string piece = trim(current);
            if (!piece.empty()) sentences.push_back(std::move(piece));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    std::string piece = trim(current);
    if (!piece.empty()) sentences.push_back(std::move(piece));
    return sentences;
}

std::size_t estimate_tokens(std::string_view s) {
    return (s.size() + 3) / 4;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

} // namespace mms::text
