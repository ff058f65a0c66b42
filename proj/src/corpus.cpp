#include "ragfuse/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/text.hpp"

namespace ragfuse {

using nlohmann::json;

namespace {

std::string require_string(const json& rec, const char* field, const std::string& path,
                           std::size_t line) {
    auto it = rec.find(field);
    if (it == rec.end()) {
        throw ParseError(path, line, std::string("missing field '") + field + "'");
    }
    if (!it->is_string()) {
        throw ParseError(path, line, std::string("field '") + field + "' must be a string");
    }
    return it->get<std::string>();
}

// Calls `fn(record, line_no)` for every non-blank line.
template <typename Fn>
void for_each_record(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string(), line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!rec.is_object()) throw ParseError(path.string(), line_no, "record must be an object");
        fn(rec, line_no);
    }
}

}  // namespace

std::vector<Passage> chunk_document(const Document& doc, std::size_t max_words) {
    if (max_words == 0) throw ValidationError("max_words must be >= 1");
    std::vector<std::string> words = text::split_whitespace(doc.body);
    std::vector<Passage> out;
    out.reserve((words.size() + max_words - 1) / max_words);
    for (std::size_t start = 0, idx = 0; start < words.size(); start += max_words, ++idx) {
        std::size_t end = std::min(words.size(), start + max_words);
        Passage p;
        p.passage_id = doc.doc_id + "#" + std::to_string(idx);
        p.doc_id = doc.doc_id;
        p.title = doc.title;
        p.word_count = end - start;
        for (std::size_t i = start; i < end; ++i) {
            if (i > start) p.text += ' ';
            p.text += words[i];
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> chunk_corpus(const std::vector<Document>& docs, std::size_t max_words) {
    std::vector<Passage> all;
    for (const auto& d : docs) {
        auto ps = chunk_document(d, max_words);
        all.insert(all.end(), std::make_move_iterator(ps.begin()), std::make_move_iterator(ps.end()));
    }
    return all;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) {
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    const std::string p = path.string();
    for_each_record(path, [&](const json& rec, std::size_t line) {
        Document d;
        d.doc_id = require_string(rec, "id", p, line);
        d.body = require_string(rec, "text", p, line);
        if (rec.contains("title")) d.title = require_string(rec, "title", p, line);
        if (!seen.insert(d.doc_id).second) {
            throw ParseError(p, line, "duplicate doc id '" + d.doc_id + "'");
        }
        docs.push_back(std::move(d));
    });
    return docs;
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
    std::vector<Question> qs;
    std::unordered_set<std::string> seen;
    const std::string p = path.string();
    for_each_record(path, [&](const json& rec, std::size_t line) {
        Question q;
        q.question_id = require_string(rec, "id", p, line);
        q.text = require_string(rec, "question", p, line);
        auto it = rec.find("answers");
        if (it == rec.end() || !it->is_array()) {
            throw ParseError(p, line, "field 'answers' must be a list of strings");
        }
        for (const auto& a : *it) {
            if (!a.is_string()) throw ParseError(p, line, "answers must be strings");
            q.gold_answers.push_back(a.get<std::string>());
        }
        if (q.gold_answers.empty()) throw ParseError(p, line, "answers must not be empty");
        if (auto g = rec.find("gold_passage_id"); g != rec.end() && !g->is_null()) {
            q.gold_passage_id = require_string(rec, "gold_passage_id", p, line);
        }
        if (!seen.insert(q.question_id).second) {
            throw ParseError(p, line, "duplicate question id '" + q.question_id + "'");
        }
        qs.push_back(std::move(q));
    });
    return qs;
}

void write_questions(const std::filesystem::path& path, const std::vector<Question>& questions) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& q : questions) {
        json rec = {{"id", q.question_id}, {"question", q.text}, {"answers", q.gold_answers}};
        if (q.gold_passage_id) rec["gold_passage_id"] = *q.gold_passage_id;
        out << rec.dump() << '\n';
    }
}

PassageStore::PassageStore(std::vector<Passage> passages) : passages_(std::move(passages)) {
    by_id_.reserve(passages_.size());
    for (std::size_t i = 0; i < passages_.size(); ++i) {
        if (!by_id_.emplace(passages_[i].passage_id, i).second) {
            throw ValidationError("duplicate passage id '" + passages_[i].passage_id + "'");
        }
    }
}

const Passage* PassageStore::find(const std::string& passage_id) const {
    auto it = by_id_.find(passage_id);
    return it == by_id_.end() ? nullptr : &passages_[it->second];
}

const Passage& PassageStore::at(const std::string& passage_id) const {
    if (const Passage* p = find(passage_id)) return *p;
    throw ValidationError("unknown passage id '" + passage_id + "'");
}

}  // namespace ragfuse
