#include "upsd/text.hpp"

#include <cctype>

namespace upsd::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

std::string strip_fences(std::string_view s) {
    std::string t = trim(s);
    if (t.rfind("```", 0) != 0) return t;
    auto first_newline = t.find('\n');
    if (first_newline == std::string::npos) return trim(std::string_view(t).substr(3));
    std::string_view body = std::string_view(t).substr(first_newline + 1);
    auto close = body.rfind("```");
    if (close != std::string_view::npos) body = body.substr(0, close);
    return trim(body);
}

}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string fold_label(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
    }
    return out;
}

std::string unwrap_utterance(std::string_view s) {
    std::string t = strip_fences(s);
    for (std::string_view tag : {"Psychologist:", "Inquirer:"}) {
        if (starts_with_ci(t, tag)) {
            t = trim(std::string_view(t).substr(tag.size()));
            break;
        }
    }
    // Peel matching quote pairs; a model sometimes double-wraps.
    while (t.size() >= 2) {
        char f = t.front();
        char b = t.back();
        if ((f == '"' && b == '"') || (f == '\'' && b == '\'') || (f == '`' && b == '`')) {
            t = trim(std::string_view(t).substr(1, t.size() - 2));
        } else if (t.rfind("\xE2\x80\x9C", 0) == 0 && t.size() >= 6 &&
                   t.compare(t.size() - 3, 3, "\xE2\x80\x9D") == 0) {
            t = trim(std::string_view(t).substr(3, t.size() - 6));
        } else {
            break;
        }
    }
    return t;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

}  // namespace upsd::text
