#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragfuse/answer.hpp"
#include "ragfuse/corpus.hpp"

namespace ragfuse {

enum class PromptKind { ClosedBook, Concatenation, PostFusionSingle, Pruning, Summary, Distill };

std::string_view to_string(PromptKind kind);

/// Bumped whenever any template text changes; recorded in run manifests.
inline constexpr std::string_view kPromptTemplateVersion = "v1";

struct UnknownPolicy {
    std::string sentinel = "unknown";
    std::vector<std::string> extra_patterns;  // case-insensitive literal substrings
};

namespace prompts {

/// "Passage <index>: <title>. <text>", index 1-based.
std::string passage_block(std::size_t index, const Passage& passage);

std::string render_concatenation(std::span<const Passage> passages, const Question& question,
                                 std::string_view sentinel = "unknown");
std::string render_post_fusion_single(const Passage& passage, const Question& question,
                                      std::string_view sentinel = "unknown");
std::string render_pruning(std::span<const Passage> passages, const Question& question,
                           std::string_view sentinel = "unknown");
std::string render_summary(std::span<const Passage> passages, const Question& question,
                           std::string_view sentinel = "unknown");
std::string render_distill(std::span<const Passage> passages, const Question& question,
                           const std::vector<std::string>& candidates);
std::string render_closed_book(const Question& question, std::string_view sentinel = "unknown");

/// Candidate pool for the distill prompt: duplicates by normalized form are
/// dropped, keeping the first surface form.
std::vector<std::string> dedup_candidates(const std::vector<std::string>& candidates);

/// Demonstration text shared by every pruning / summary prompt.
std::string_view pruning_demonstration();
std::string_view summary_demonstration();

}  // namespace prompts

/// Final line of `text` with any "Answer:" prefix removed, trimmed.
std::string extract_answer_line(std::string_view text);

Answer classify_response(std::string_view text, const UnknownPolicy& policy);

}  // namespace ragfuse
