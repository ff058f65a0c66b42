#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragfuse/corpus.hpp"

namespace ragfuse {

enum class PlacementMode { RetrievalOrder, GoldTop, GoldBottom, GoldRandom, NoGold };

std::string_view to_string(PlacementMode mode);
PlacementMode parse_placement(std::string_view name);

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct RetrievalConfig {
    std::size_t k = 5;
    std::size_t max_passage_words = 100;   // L
    std::size_t model_input_budget = 16000;  // M, in words
    Bm25Params bm25;
    PlacementMode placement = PlacementMode::NoGold;
    std::uint64_t rng_seed = 0;

    /// Throws ConfigError unless k >= 1, k*L < M, k1 >= 0 and 0 <= b <= 1.
    void validate() const;
};

struct RankedEntry {
    std::string passage_id;
    double score = 0.0;

    bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
    std::string question_id;
    std::vector<RankedEntry> entries;
    bool gold_inserted = false;

    std::vector<std::string> passage_ids() const;

    bool operator==(const RankedList&) const = default;
};

/// Lowercases ASCII and splits on anything that is not [a-z0-9] or a non-ASCII byte.
std::vector<std::string> index_tokens(std::string_view text);

/// Okapi BM25 over passage text. Immutable once built.
class Bm25Index {
public:
    struct Posting {
        std::uint32_t passage;
        std::uint32_t tf;
    };

    static Bm25Index build(const std::vector<Passage>& passages, Bm25Params params = {});
    static Bm25Index load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    std::size_t num_passages() const noexcept { return ids_.size(); }
    double average_length() const noexcept { return avg_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    const std::string& passage_id(std::size_t i) const { return ids_.at(i); }
    std::uint32_t length(std::size_t i) const { return lengths_.at(i); }
    std::size_t document_frequency(const std::string& term) const;
    std::uint32_t term_frequency(const std::string& term, std::size_t passage) const;

    /// Inverse document frequency, ln(1 + (N - df + 0.5) / (df + 0.5)).
    double idf(const std::string& term) const;
    double score(std::string_view query, std::size_t passage) const;

    /// The min(k, N) best passages, score-descending, ties by passage id ascending.
    RankedList retrieve_top_k(std::string_view query, std::size_t k) const;

private:
    Bm25Params params_;
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> lengths_;
    double avg_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;

    void finalize();
    double term_weight(double idf, std::uint32_t tf, std::uint32_t len) const;
};

/// Puts the gold passage into `ranked` according to `config.placement`.
/// `gold_score` is recorded on a freshly inserted entry; defaults to 0.
RankedList apply_gold_placement(RankedList ranked, const Question& question,
                                const RetrievalConfig& config,
                                std::optional<double> gold_score = std::nullopt);

/// Seed-deterministic slot in [0, n) for a question; independent of call order.
std::size_t placement_slot(std::uint64_t seed, std::string_view question_id, std::size_t n);

/// Source of ranked passages for a question.
class Retriever {
public:
    virtual ~Retriever() = default;
    virtual RankedList retrieve(const Question& question, std::size_t k) const = 0;
    /// Score the retriever assigns `passage_id` for `question`, if it has one.
    virtual std::optional<double> score_of(const Question& question,
                                           const std::string& passage_id) const = 0;
};

class Bm25Retriever final : public Retriever {
public:
    explicit Bm25Retriever(const Bm25Index& index);
    RankedList retrieve(const Question& question, std::size_t k) const override;
    std::optional<double> score_of(const Question& question,
                                   const std::string& passage_id) const override;

private:
    const Bm25Index& index_;
    std::unordered_map<std::string, std::size_t> position_;
};

/// Replays rankings produced elsewhere (e.g. a dense retriever), one
/// {question_id, ranked_passage_ids} record per line. Scores are synthetic: 0.
class PrecomputedRetriever final : public Retriever {
public:
    static PrecomputedRetriever load(const std::filesystem::path& path);
    explicit PrecomputedRetriever(std::unordered_map<std::string, std::vector<std::string>> rankings);

    RankedList retrieve(const Question& question, std::size_t k) const override;
    std::optional<double> score_of(const Question&, const std::string&) const override {
        return std::nullopt;
    }

private:
    std::unordered_map<std::string, std::vector<std::string>> rankings_;
};

}  // namespace ragfuse
