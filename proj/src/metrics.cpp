#include "ragfuse/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "ragfuse/text.hpp"

namespace ragfuse {

std::string normalize_answer(std::string_view input) {
    std::u32string cps = text::decode_utf8(input);
    std::u32string kept;
    kept.reserve(cps.size());
    for (char32_t cp : cps) {
        cp = text::to_lower(cp);
        if (!text::is_punctuation(cp)) kept.push_back(cp);
    }
    std::vector<std::string> words = text::split_whitespace(text::encode_utf8(kept));
    std::string out;
    for (const auto& w : words) {
        if (w == "a" || w == "an" || w == "the") continue;
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

int exact_match(std::string_view prediction, const std::vector<std::string>& gold_answers) {
    const std::string p = normalize_answer(prediction);
    for (const auto& g : gold_answers) {
        if (p == normalize_answer(g)) return 1;
    }
    return 0;
}

double f1_single(std::string_view prediction, std::string_view reference) {
    auto pred = text::split_whitespace(normalize_answer(prediction));
    auto gold = text::split_whitespace(normalize_answer(reference));
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::unordered_map<std::string, int> counts;
    for (const auto& t : gold) ++counts[t];
    int overlap = 0;
    for (const auto& t : pred) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(pred.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

double f1_score(std::string_view prediction, const std::vector<std::string>& gold_answers) {
    double best = 0.0;
    for (const auto& g : gold_answers) best = std::max(best, f1_single(prediction, g));
    return best;
}

}  // namespace ragfuse
