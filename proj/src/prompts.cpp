#include "ragfuse/prompts.hpp"

#include <unordered_set>

#include "ragfuse/errors.hpp"
#include "ragfuse/metrics.hpp"
#include "ragfuse/text.hpp"

namespace ragfuse {

std::string_view to_string(PromptKind kind) {
    switch (kind) {
    case PromptKind::ClosedBook: return "closed_book";
    case PromptKind::Concatenation: return "concatenation";
    case PromptKind::PostFusionSingle: return "post_fusion_single";
    case PromptKind::Pruning: return "pruning";
    case PromptKind::Summary: return "summary";
    case PromptKind::Distill: return "distill";
    }
    return "?";
}

namespace prompts {

namespace {

constexpr std::string_view kDemoPassages =
    "Passage 1: Port Alder Lighthouse. The Port Alder Lighthouse stands on the northern breakwater "
    "of the harbor. Construction began in 1868 and the light was first lit in 1871. It was "
    "automated in 1962.\n"
    "Passage 2: Alder River. The Alder River rises in the eastern hills and flows west for about "
    "140 kilometers before it reaches the sea near Port Alder.\n"
    "Passage 3: Coastal shipping. Coastal shipping along the western shore declined after the "
    "railway opened, although small fishing fleets still use the harbor.\n"
    "Question: In what year was the Port Alder Lighthouse first lit?\n";

const std::string kPruningDemo = std::string("Example:\n") + std::string(kDemoPassages) +
    "Eliminated passages: 2, 3. Passage 2 is about the river and passage 3 is about shipping; "
    "neither says when the lighthouse was first lit.\n"
    "Answer: 1871\n";

const std::string kSummaryDemo = std::string("Example:\n") + std::string(kDemoPassages) +
    "Summary: The Port Alder Lighthouse is on the northern breakwater of the harbor. Its "
    "construction began in 1868 and the light was first lit in 1871. The other passages describe "
    "the Alder River and coastal shipping.\n"
    "Answer: 1871\n";

void require_passages(std::span<const Passage> passages, std::string_view what) {
    if (passages.empty()) {
        throw ValidationError(std::string(what) + " prompt needs at least one passage");
    }
}

std::string passage_section(std::span<const Passage> passages) {
    std::string out;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        out += passage_block(i + 1, passages[i]);
        out += '\n';
    }
    return out;
}

std::string final_answer_rule(std::string_view sentinel) {
    return "Give the final answer on its own last line in the form \"Answer: <short answer>\". "
           "If none of the passages can answer the question, write \"Answer: " +
           std::string(sentinel) + "\".";
}

}  // namespace

std::string passage_block(std::size_t index, const Passage& passage) {
    std::string out = "Passage " + std::to_string(index) + ": ";
    if (!passage.title.empty()) out += passage.title + ". ";
    out += passage.text;
    return out;
}

std::string render_concatenation(std::span<const Passage> passages, const Question& question,
                                 std::string_view sentinel) {
    require_passages(passages, "concatenation");
    std::string out = passage_section(passages);
    out += "Question: " + question.text + "\n";
    out += "Answer the question using the passages above. Reply with a short answer of a few "
           "words. If the passages do not contain the answer, reply exactly with \"" +
           std::string(sentinel) + "\".\n";
    out += "Answer:";
    return out;
}

std::string render_post_fusion_single(const Passage& passage, const Question& question,
                                      std::string_view sentinel) {
    return render_concatenation(std::span<const Passage>(&passage, 1), question, sentinel);
}

std::string render_pruning(std::span<const Passage> passages, const Question& question,
                           std::string_view sentinel) {
    require_passages(passages, "pruning");
    std::string out =
        "Read the passages and answer the question. Some passages may be irrelevant. First list "
        "the passages that cannot answer the question and eliminate them, then answer using only "
        "the remaining passages. " + final_answer_rule(sentinel) + "\n\n";
    out += kPruningDemo;
    out += "\nTask:\n";
    out += passage_section(passages);
    out += "Question: " + question.text + "\n";
    out += "Eliminated passages:";
    return out;
}

std::string render_summary(std::span<const Passage> passages, const Question& question,
                           std::string_view sentinel) {
    require_passages(passages, "summary");
    std::string out =
        "Read the passages and answer the question. First summarize the information in the "
        "passages that is useful for answering the question, then give the answer. " +
        final_answer_rule(sentinel) + "\n\n";
    out += kSummaryDemo;
    out += "\nTask:\n";
    out += passage_section(passages);
    out += "Question: " + question.text + "\n";
    out += "Summary:";
    return out;
}

std::vector<std::string> dedup_candidates(const std::vector<std::string>& candidates) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& c : candidates) {
        if (seen.insert(normalize_answer(c)).second) out.push_back(c);
    }
    return out;
}

std::string render_distill(std::span<const Passage> passages, const Question& question,
                           const std::vector<std::string>& candidates) {
    require_passages(passages, "distill");
    if (candidates.empty()) throw ValidationError("distill prompt needs at least one candidate");
    std::string out = passage_section(passages);
    out += "Question: " + question.text + "\n";
    out += "Answer candidates:\n";
    for (const auto& c : dedup_candidates(candidates)) out += "- " + c + "\n";
    out += "Select the correct answer to the question from the answer candidates, using the "
           "passages above. Reply with the selected answer only.\n";
    out += "Answer:";
    return out;
}

std::string render_closed_book(const Question& question, std::string_view sentinel) {
    std::string out = "Question: " + question.text + "\n";
    out += "Answer the question with a short answer of a few words. If you do not know the "
           "answer, reply exactly with \"" + std::string(sentinel) + "\".\n";
    out += "Answer:";
    return out;
}

std::string_view pruning_demonstration() { return kPruningDemo; }
std::string_view summary_demonstration() { return kSummaryDemo; }

}  // namespace prompts

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return text::ascii_lowercase(s.substr(0, prefix.size())) == text::ascii_lowercase(prefix);
}

// Lowercased and trimmed, with surrounding quotes and terminal punctuation removed.
std::string sentinel_form(std::string_view s) {
    std::string t = text::lowercase(text::trim(s));
    auto strip_char = [](char c) {
        return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' || c == '"' ||
               c == '\'' || c == '*' || c == ' ';
    };
    while (!t.empty() && strip_char(t.back())) t.pop_back();
    std::size_t b = 0;
    while (b < t.size() && (t[b] == '"' || t[b] == '\'' || t[b] == '*')) ++b;
    return t.substr(b);
}

}  // namespace

std::string extract_answer_line(std::string_view response) {
    std::string_view last;
    std::size_t pos = 0;
    while (pos <= response.size()) {
        std::size_t nl = response.find('\n', pos);
        std::string_view line = text::trim(response.substr(pos, nl == std::string_view::npos ? response.npos : nl - pos));
        if (!line.empty()) last = line;
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (starts_with_ci(last, "answer:")) last = text::trim(last.substr(7));
    return std::string(last);
}

Answer classify_response(std::string_view response, const UnknownPolicy& policy) {
    std::string line = extract_answer_line(response);
    if (line.empty()) return Answer::unknown();
    if (sentinel_form(line) == sentinel_form(policy.sentinel)) return Answer::unknown();
    std::string lowered = text::lowercase(line);
    for (const auto& pattern : policy.extra_patterns) {
        if (!pattern.empty() && lowered.find(text::lowercase(pattern)) != std::string::npos) {
            return Answer::unknown();
        }
    }
    return Answer::text(std::move(line));
}

}  // namespace ragfuse
