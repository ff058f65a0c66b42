#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ragfuse {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
};

/// A contiguous run of at most L words from one document.
struct Passage {
    std::string passage_id;  // "<doc_id>#<chunk_index>"
    std::string doc_id;
    std::string title;
    std::string text;
    std::size_t word_count = 0;
};

struct Question {
    std::string question_id;
    std::string text;
    std::vector<std::string> gold_answers;  // never empty
    std::optional<std::string> gold_passage_id;
};

struct CorpusStats {
    std::size_t num_documents = 0;
    std::size_t num_passages = 0;
    std::size_t num_questions = 0;
};

/// Non-overlapping word chunks; every chunk but the last has exactly `max_words` words.
std::vector<Passage> chunk_document(const Document& doc, std::size_t max_words);
std::vector<Passage> chunk_corpus(const std::vector<Document>& docs, std::size_t max_words);

/// JSON-lines, one {id, title, text} record per line. Blank lines are skipped.
std::vector<Document> load_corpus(const std::filesystem::path& path);

/// JSON-lines, one {id, question, answers, gold_passage_id?} record per line.
std::vector<Question> load_questions(const std::filesystem::path& path);

void write_questions(const std::filesystem::path& path, const std::vector<Question>& questions);

/// Read-only lookup from passage id to passage.
class PassageStore {
public:
    explicit PassageStore(std::vector<Passage> passages);

    const std::vector<Passage>& passages() const noexcept { return passages_; }
    const Passage* find(const std::string& passage_id) const;
    const Passage& at(const std::string& passage_id) const;
    std::size_t size() const noexcept { return passages_.size(); }

private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace ragfuse
