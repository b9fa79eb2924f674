#include <algorithm>
#include <array>
#include <cctype>

#include "qacost/vqa_client.hpp"

namespace qacost {

namespace {

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::optional<int> first_standalone_severity(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && is_digit(s[j])) ++j;
        const bool glued_before = i > 0 && (is_alnum(s[i - 1]) || (s[i - 1] == '.' && i > 1 && is_digit(s[i - 2])));
        const bool glued_after = j < s.size() && (is_alnum(s[j]) || (s[j] == '.' && j + 1 < s.size() && is_digit(s[j + 1])));
        if (!glued_before && !glued_after && j - i == 1 && s[i] >= '1' && s[i] <= '3') return s[i] - '0';
        i = j;
    }
    return std::nullopt;
}

std::optional<int> first_phrase_severity(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    constexpr std::array<std::pair<std::string_view, int>, 3> kPhrases{{
        {"no defect", 1},
        {"some defect", 2},
        {"significant defect", 3},
    }};
    std::optional<int> best;
    std::size_t best_pos = std::string::npos;
    for (const auto& [phrase, severity] : kPhrases) {
        for (std::size_t pos = lower.find(phrase); pos != std::string::npos; pos = lower.find(phrase, pos + 1)) {
            if (pos > 0 && std::isalpha(static_cast<unsigned char>(lower[pos - 1]))) continue;
            if (pos < best_pos) {
                best_pos = pos;
                best = severity;
            }
            break;
        }
    }
    return best;
}

}  // namespace

VqaResponse parse_severity(std::string_view raw_text) {
    VqaResponse r{std::string(raw_text), first_standalone_severity(raw_text)};
    if (!r.parsed_severity) r.parsed_severity = first_phrase_severity(raw_text);
    return r;
}

}  // namespace qacost
