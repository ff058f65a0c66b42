#include "ragfuse/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/text.hpp"

namespace ragfuse {

using nlohmann::json;

namespace {

constexpr int kSnapshotVersion = 1;

bool is_token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::vector<std::string> unique_terms(std::string_view query) {
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (auto& t : index_tokens(query)) {
        if (seen.insert(t).second) terms.push_back(std::move(t));
    }
    return terms;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(PlacementMode mode) {
    switch (mode) {
    case PlacementMode::RetrievalOrder: return "retrieval_order";
    case PlacementMode::GoldTop: return "gold_top";
    case PlacementMode::GoldBottom: return "gold_bottom";
    case PlacementMode::GoldRandom: return "gold_random";
    case PlacementMode::NoGold: return "no_gold";
    }
    return "?";
}

PlacementMode parse_placement(std::string_view name) {
    for (auto m : {PlacementMode::RetrievalOrder, PlacementMode::GoldTop, PlacementMode::GoldBottom,
                   PlacementMode::GoldRandom, PlacementMode::NoGold}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown placement mode '" + std::string(name) + "'");
}

void RetrievalConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (max_passage_words < 1) throw ConfigError("max_passage_words must be >= 1");
    if (k * max_passage_words >= model_input_budget) {
        throw ConfigError("k * L must be < M (k=" + std::to_string(k) + ", L=" +
                          std::to_string(max_passage_words) + ", M=" +
                          std::to_string(model_input_budget) + ")");
    }
    if (!(bm25.k1 >= 0.0)) throw ConfigError("bm25_k1 must be >= 0");
    if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) throw ConfigError("bm25_b must be in [0, 1]");
}

std::vector<std::string> RankedList::passage_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& e : entries) ids.push_back(e.passage_id);
    return ids;
}

std::vector<std::string> index_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : ch);
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Bm25Index Bm25Index::build(const std::vector<Passage>& passages, Bm25Params params) {
    if (passages.empty()) throw ValidationError("cannot build an index over zero passages");
    Bm25Index idx;
    idx.params_ = params;
    idx.ids_.reserve(passages.size());
    idx.lengths_.reserve(passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i) {
        auto tokens = index_tokens(passages[i].text);
        idx.ids_.push_back(passages[i].passage_id);
        idx.lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) {
            idx.postings_[term].push_back({static_cast<std::uint32_t>(i), count});
        }
    }
    idx.finalize();
    return idx;
}

void Bm25Index::finalize() {
    for (auto& [term, list] : postings_) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.passage < b.passage; });
    }
    double total = std::accumulate(lengths_.begin(), lengths_.end(), 0.0);
    avg_length_ = ids_.empty() ? 0.0 : total / static_cast<double>(ids_.size());
}

std::size_t Bm25Index::document_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

std::uint32_t Bm25Index::term_frequency(const std::string& term, std::size_t passage) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return 0;
    auto p = std::lower_bound(it->second.begin(), it->second.end(), passage,
                              [](const Posting& a, std::size_t v) { return a.passage < v; });
    return (p != it->second.end() && p->passage == passage) ? p->tf : 0;
}

double Bm25Index::idf(const std::string& term) const {
    const double n = static_cast<double>(ids_.size());
    const double df = static_cast<double>(document_frequency(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::term_weight(double idf_value, std::uint32_t tf, std::uint32_t len) const {
    const double norm = avg_length_ > 0.0 ? static_cast<double>(len) / avg_length_ : 1.0;
    const double t = static_cast<double>(tf);
    return idf_value * (t * (params_.k1 + 1.0)) /
           (t + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

double Bm25Index::score(std::string_view query, std::size_t passage) const {
    double s = 0.0;
    for (const auto& term : unique_terms(query)) {
        std::uint32_t tf = term_frequency(term, passage);
        if (tf > 0) s += term_weight(idf(term), tf, lengths_.at(passage));
    }
    return s;
}

RankedList Bm25Index::retrieve_top_k(std::string_view query, std::size_t k) const {
    std::vector<double> scores(ids_.size(), 0.0);
    for (const auto& term : unique_terms(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& p : it->second) {
            scores[p.passage] += term_weight(w, p.tf, lengths_[p.passage]);
        }
    }
    std::vector<std::uint32_t> order(ids_.size());
    std::iota(order.begin(), order.end(), 0u);
    const std::size_t n = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return ids_[a] < ids_[b];
                      });
    RankedList out;
    out.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.entries.push_back({ids_[order[i]], scores[order[i]]});
    return out;
}

void Bm25Index::save(const std::filesystem::path& path) const {
    json postings = json::object();
    for (const auto& [term, list] : postings_) {
        json arr = json::array();
        for (const auto& p : list) arr.push_back({p.passage, p.tf});
        postings[term] = std::move(arr);
    }
    json snap = {{"version", kSnapshotVersion},
                 {"k1", params_.k1},
                 {"b", params_.b},
                 {"passage_ids", ids_},
                 {"lengths", lengths_},
                 {"postings", std::move(postings)}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << snap.dump() << '\n';
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    json snap;
    try {
        snap = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 1, std::string("malformed index snapshot: ") + e.what());
    }
    try {
        if (snap.at("version").get<int>() != kSnapshotVersion) {
            throw ValidationError("unsupported index snapshot version");
        }
        Bm25Index idx;
        idx.params_ = {snap.at("k1").get<double>(), snap.at("b").get<double>()};
        idx.ids_ = snap.at("passage_ids").get<std::vector<std::string>>();
        idx.lengths_ = snap.at("lengths").get<std::vector<std::uint32_t>>();
        if (idx.ids_.size() != idx.lengths_.size() || idx.ids_.empty()) {
            throw ValidationError("inconsistent index snapshot");
        }
        for (const auto& [term, arr] : snap.at("postings").items()) {
            auto& list = idx.postings_[term];
            for (const auto& p : arr) {
                list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
                if (list.back().passage >= idx.ids_.size()) {
                    throw ValidationError("posting refers to unknown passage");
                }
            }
        }
        idx.finalize();
        return idx;
    } catch (const json::exception& e) {
        throw ValidationError("invalid index snapshot " + path.string() + ": " + e.what());
    }
}

std::size_t placement_slot(std::uint64_t seed, std::string_view question_id, std::size_t n) {
    if (n == 0) return 0;
    return static_cast<std::size_t>(splitmix64(seed ^ fnv1a64(question_id)) % n);
}

RankedList apply_gold_placement(RankedList ranked, const Question& question,
                                const RetrievalConfig& config, std::optional<double> gold_score) {
    ranked.gold_inserted = false;
    if (config.placement == PlacementMode::NoGold) return ranked;
    if (!question.gold_passage_id) {
        throw ValidationError("question '" + question.question_id + "' has no gold_passage_id but placement is " +
                              std::string(to_string(config.placement)));
    }
    const std::string& gold = *question.gold_passage_id;
    auto& entries = ranked.entries;
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const RankedEntry& e) { return e.passage_id == gold; });

    if (it != entries.end()) {
        RankedEntry entry = *it;
        if (config.placement == PlacementMode::GoldTop) {
            entries.erase(it);
            entries.insert(entries.begin(), std::move(entry));
        } else if (config.placement == PlacementMode::GoldBottom) {
            entries.erase(it);
            entries.push_back(std::move(entry));
        }
        return ranked;
    }

    if (entries.size() >= config.k && !entries.empty()) {
        entries.resize(config.k - 1);
    }
    RankedEntry entry{gold, gold_score.value_or(0.0)};
    std::size_t pos = 0;
    switch (config.placement) {
    case PlacementMode::GoldTop:
        pos = 0;
        break;
    case PlacementMode::GoldBottom:
    case PlacementMode::RetrievalOrder:
        // An absent gold passage ranks below every retrieved entry.
        pos = entries.size();
        break;
    case PlacementMode::GoldRandom:
        pos = placement_slot(config.rng_seed, question.question_id, entries.size() + 1);
        break;
    case PlacementMode::NoGold:
        break;
    }
    entries.insert(entries.begin() + static_cast<std::ptrdiff_t>(pos), std::move(entry));
    ranked.gold_inserted = true;
    return ranked;
}

Bm25Retriever::Bm25Retriever(const Bm25Index& index) : index_(index) {
    for (std::size_t i = 0; i < index_.num_passages(); ++i) position_.emplace(index_.passage_id(i), i);
}

RankedList Bm25Retriever::retrieve(const Question& question, std::size_t k) const {
    RankedList r = index_.retrieve_top_k(question.text, k);
    r.question_id = question.question_id;
    return r;
}

std::optional<double> Bm25Retriever::score_of(const Question& question,
                                              const std::string& passage_id) const {
    auto it = position_.find(passage_id);
    if (it == position_.end()) return std::nullopt;
    return index_.score(question.text, it->second);
}

PrecomputedRetriever::PrecomputedRetriever(
    std::unordered_map<std::string, std::vector<std::string>> rankings)
    : rankings_(std::move(rankings)) {}

PrecomputedRetriever PrecomputedRetriever::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::unordered_map<std::string, std::vector<std::string>> rankings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            json rec = json::parse(line);
            auto qid = rec.at("question_id").get<std::string>();
            auto ids = rec.at("ranked_passage_ids").get<std::vector<std::string>>();
            std::unordered_set<std::string> seen;
            for (const auto& id : ids) {
                if (!seen.insert(id).second) {
                    throw ParseError(path.string(), line_no, "duplicate passage id '" + id + "'");
                }
            }
            if (!rankings.emplace(std::move(qid), std::move(ids)).second) {
                throw ParseError(path.string(), line_no, "duplicate question id");
            }
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return PrecomputedRetriever(std::move(rankings));
}

RankedList PrecomputedRetriever::retrieve(const Question& question, std::size_t k) const {
    auto it = rankings_.find(question.question_id);
    if (it == rankings_.end()) {
        throw ValidationError("no precomputed ranking for question '" + question.question_id + "'");
    }
    RankedList r;
    r.question_id = question.question_id;
    for (std::size_t i = 0; i < it->second.size() && i < k; ++i) r.entries.push_back({it->second[i], 0.0});
    return r;
}

}  // namespace ragfuse
