#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ragfuse {

/// Lowercase, delete Unicode punctuation, drop the articles a/an/the, and
/// collapse whitespace.
std::string normalize_answer(std::string_view text);

/// 1 iff the normalized prediction equals some normalized gold alias.
int exact_match(std::string_view prediction, const std::vector<std::string>& gold_answers);

/// Token-level F1 with clipped multiset overlap, maximized over gold aliases.
double f1_score(std::string_view prediction, const std::vector<std::string>& gold_answers);

/// F1 against a single reference.
double f1_single(std::string_view prediction, std::string_view reference);

}  // namespace ragfuse
