#include "ragfuse/text.hpp"

#include <algorithm>

namespace ragfuse::text {

namespace {

struct CodeRange {
    char32_t first;
    char32_t last;
};

struct CaseMapping {
    char32_t from;
    char32_t to;
};

#include "unicode_tables.inc"

constexpr char32_t kReplacement = 0xFFFD;

bool is_ascii_space(unsigned char c) {
    return c == ' ' || (c >= '\t' && c <= '\r');
}

}  // namespace

bool is_space(char32_t cp) noexcept {
    switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x1C: case 0x1D: case 0x1E: case 0x1F:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punctuation(char32_t cp) noexcept {
    auto it = std::upper_bound(std::begin(kPunctuationRanges), std::end(kPunctuationRanges), cp,
                               [](char32_t v, const CodeRange& r) { return v < r.first; });
    if (it == std::begin(kPunctuationRanges)) return false;
    --it;
    return cp <= it->last;
}

char32_t to_lower(char32_t cp) noexcept {
    if (cp < 0x80) {
        return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    }
    auto it = std::lower_bound(std::begin(kLowercaseMappings), std::end(kLowercaseMappings), cp,
                               [](const CaseMapping& m, char32_t v) { return m.from < v; });
    if (it != std::end(kLowercaseMappings) && it->from == cp) return it->to;
    return cp;
}

std::u32string decode_utf8(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        int len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            out.push_back(c);
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > s.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (int j = 1; j < len; ++j) {
            auto cc = static_cast<unsigned char>(s[i + j]);
            if ((cc & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        if (!ok || cp > 0x10FFFF) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) {
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }
    return out;
}

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> words;
    // ASCII fast path avoids a full decode for the common case.
    if (std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
        std::size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
            std::size_t start = i;
            while (i < s.size() && !is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
            if (i > start) words.emplace_back(s.substr(start, i - start));
        }
        return words;
    }
    std::u32string cur;
    for (char32_t cp : decode_utf8(s)) {
        if (is_space(cp)) {
            if (!cur.empty()) {
                words.push_back(encode_utf8(cur));
                cur.clear();
            }
        } else {
            cur.push_back(cp);
        }
    }
    if (!cur.empty()) words.push_back(encode_utf8(cur));
    return words;
}

std::size_t count_words(std::string_view s) {
    return split_whitespace(s).size();
}

std::string lowercase(std::string_view s) {
    std::u32string cps = decode_utf8(s);
    for (auto& cp : cps) cp = to_lower(cp);
    return encode_utf8(cps);
}

std::string ascii_lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace ragfuse::text
