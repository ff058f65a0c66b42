#include "ragfuse/eval.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ragfuse/errors.hpp"
#include "ragfuse/text.hpp"

namespace ragfuse {

using nlohmann::json;

EvalRecord score_trace(const StrategyTrace& trace, const Question& question) {
    EvalRecord r;
    r.question_id = question.question_id;
    r.strategy = std::string(to_string(trace.strategy));
    r.is_unknown = trace.final_answer.is_unknown();
    if (!r.is_unknown) {
        r.final_answer = trace.final_answer.value();
        r.em = exact_match(*r.final_answer, question.gold_answers);
        r.f1 = f1_score(*r.final_answer, question.gold_answers);
    }
    if (finalizes_by_vote(trace) && trace.per_passage_answers) {
        bool gold_in_pool = false;
        for (const auto& a : *trace.per_passage_answers) {
            if (!a.is_unknown() && exact_match(a.value(), question.gold_answers) == 1) {
                gold_in_pool = true;
                break;
            }
        }
        r.pool_contains_gold = gold_in_pool;
        r.nm_event = gold_in_pool && r.em == 0;
    }
    r.rounds_used = trace.rounds_used;
    r.off_pool = trace.off_pool;
    r.prompt_tokens = trace.prompt_tokens_total;
    r.completion_tokens = trace.completion_tokens_total;
    return r;
}

FilterResult filter_dataset(const std::vector<Question>& questions, StrategyContext& ctx) {
    FilterResult out;
    for (const auto& q : questions) {
        CompletionRequest req;
        req.prompt_text = prompts::render_closed_book(q, ctx.policy.sentinel);
        req.max_response_tokens = ctx.max_response_tokens;
        req.tag = {q.question_id, "closed_book", {}};
        CompletionResponse resp;
        try {
            resp = ctx.client.complete(req);
        } catch (const ScriptError& e) {
            throw ScriptError("question '" + q.question_id + "': " + e.what());
        } catch (const TransportError& e) {
            throw TransportError("question '" + q.question_id + "': " + e.what());
        }
        Answer a = classify_response(resp.text, ctx.policy);
        if (!a.is_unknown() && exact_match(a.value(), q.gold_answers) == 1) {
            out.removed.push_back(q);
        } else {
            out.kept.push_back(q);
        }
    }
    return out;
}

NmDenominator parse_nm_denominator(std::string_view name) {
    if (name == "pool_with_gold") return NmDenominator::PoolWithGold;
    if (name == "all_questions") return NmDenominator::AllQuestions;
    throw ConfigError("unknown nm_denominator '" + std::string(name) + "'");
}

std::string_view to_string(NmDenominator d) {
    return d == NmDenominator::PoolWithGold ? "pool_with_gold" : "all_questions";
}

const ReportRow* EvalReport::find(std::string_view placement, std::string_view strategy) const {
    for (const auto& r : rows) {
        if (r.placement == placement && r.strategy == strategy) return &r;
    }
    return nullptr;
}

EvalReport aggregate(const std::vector<EvalRecord>& records, NmDenominator nm_denominator) {
    struct Acc {
        std::size_t n = 0;
        std::int64_t em = 0;
        double f1 = 0.0;
        std::size_t unk = 0;
        std::size_t nm = 0;
        std::size_t pools = 0;
        std::int64_t prompt = 0;
        std::int64_t completion = 0;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Acc> accs;
    for (const auto& r : records) {
        auto key = std::make_pair(r.placement, r.strategy);
        auto [it, fresh] = accs.try_emplace(key);
        if (fresh) order.push_back(key);
        Acc& a = it->second;
        ++a.n;
        a.em += r.em;
        a.f1 += r.f1;
        a.unk += r.is_unknown ? 1 : 0;
        a.pools += r.pool_contains_gold.value_or(false) ? 1 : 0;
        a.nm += r.nm_event.value_or(false) ? 1 : 0;
        a.prompt += r.prompt_tokens;
        a.completion += r.completion_tokens;
    }
    EvalReport report;
    for (const auto& key : order) {
        const Acc& a = accs.at(key);
        const double n = static_cast<double>(a.n);
        ReportRow row;
        row.placement = key.first;
        row.strategy = key.second;
        row.n_questions = a.n;
        row.em = 100.0 * static_cast<double>(a.em) / n;
        row.f1 = 100.0 * a.f1 / n;
        row.unk_rate = static_cast<double>(a.unk) / n;
        row.nm_events = a.nm;
        row.nm_pools = a.pools;
        const std::size_t den = nm_denominator == NmDenominator::PoolWithGold ? a.pools : a.n;
        row.nm_rate = den == 0 ? 0.0 : static_cast<double>(a.nm) / static_cast<double>(den);
        row.total_prompt_tokens = a.prompt;
        row.total_completion_tokens = a.completion;
        row.mean_prompt_tokens = static_cast<double>(a.prompt) / n;
        row.mean_completion_tokens = static_cast<double>(a.completion) / n;
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

json to_json(const EvalRecord& r) {
    json j = {{"question_id", r.question_id},
              {"strategy", r.strategy},
              {"placement", r.placement},
              {"em", r.em},
              {"f1", r.f1},
              {"is_unknown", r.is_unknown},
              {"pool_contains_gold", nullptr},
              {"nm_event", nullptr},
              {"final_answer", nullptr},
              {"rounds_used", r.rounds_used},
              {"off_pool", r.off_pool},
              {"prompt_tokens", r.prompt_tokens},
              {"completion_tokens", r.completion_tokens}};
    if (r.pool_contains_gold) j["pool_contains_gold"] = *r.pool_contains_gold;
    if (r.nm_event) j["nm_event"] = *r.nm_event;
    if (r.final_answer) j["final_answer"] = *r.final_answer;
    return j;
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

// Shortest representation that parses back to the same double.
std::string exact(double v) {
    return json(v).dump();
}

}  // namespace

void write_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
    auto out = open_for_write(path);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<EvalRecord> read_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open records file " + path.string());
    std::vector<EvalRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            EvalRecord r;
            r.question_id = j.at("question_id").get<std::string>();
            r.strategy = j.at("strategy").get<std::string>();
            r.placement = j.at("placement").get<std::string>();
            r.em = j.at("em").get<int>();
            r.f1 = j.at("f1").get<double>();
            r.is_unknown = j.at("is_unknown").get<bool>();
            r.pool_contains_gold = optional_field<bool>(j, "pool_contains_gold");
            r.nm_event = optional_field<bool>(j, "nm_event");
            r.final_answer = optional_field<std::string>(j, "final_answer");
            r.rounds_used = j.value("rounds_used", 1);
            r.off_pool = j.value("off_pool", false);
            r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
            r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return records;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
    auto out = open_for_write(path);
    out << "placement,strategy,n_questions,em,f1,unk_rate,nm_rate,nm_events,nm_pools,"
           "mean_prompt_tokens,mean_completion_tokens\n";
    for (const auto& r : report.rows) {
        out << r.placement << ',' << r.strategy << ',' << r.n_questions << ',' << exact(r.em) << ','
            << exact(r.f1) << ',' << exact(r.unk_rate) << ',' << exact(r.nm_rate) << ','
            << r.nm_events << ',' << r.nm_pools << ',' << exact(r.mean_prompt_tokens) << ','
            << exact(r.mean_completion_tokens) << '\n';
    }
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"placement", r.placement},
                        {"strategy", r.strategy},
                        {"n_questions", r.n_questions},
                        {"em", r.em},
                        {"f1", r.f1},
                        {"unk_rate", r.unk_rate},
                        {"nm_rate", r.nm_rate},
                        {"nm_events", r.nm_events},
                        {"nm_pools", r.nm_pools},
                        {"mean_prompt_tokens", r.mean_prompt_tokens},
                        {"mean_completion_tokens", r.mean_completion_tokens},
                        {"total_prompt_tokens", r.total_prompt_tokens},
                        {"total_completion_tokens", r.total_completion_tokens}});
    }
    auto out = open_for_write(path);
    out << json({{"rows", rows}}).dump(2) << '\n';
}

void write_token_usage_csv(const std::filesystem::path& path, const EvalReport& report) {
    auto out = open_for_write(path);
    out << "placement,strategy,n_questions,mean_prompt_tokens,mean_completion_tokens,"
           "mean_total_tokens,total_prompt_tokens,total_completion_tokens\n";
    for (const auto& r : report.rows) {
        out << r.placement << ',' << r.strategy << ',' << r.n_questions << ','
            << exact(r.mean_prompt_tokens) << ',' << exact(r.mean_completion_tokens) << ','
            << exact(r.mean_prompt_tokens + r.mean_completion_tokens) << ',' << r.total_prompt_tokens
            << ',' << r.total_completion_tokens << '\n';
    }
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-16s %5s %7s %7s %7s %7s %10s %10s\n", "placement",
                  "strategy", "n", "EM", "F1", "%Unk", "%NM", "prompt_tok", "compl_tok");
    os << line;
    for (const auto& r : report.rows) {
        std::string name = r.strategy;
        try {
            name = std::string(display_name(parse_strategy(r.strategy)));
        } catch (const ConfigError&) {
        }
        std::snprintf(line, sizeof line, "%-16s %-16s %5zu %7s %7s %6s%% %6s%% %10s %10s\n",
                      r.placement.c_str(), name.c_str(), r.n_questions, fixed(r.em, 1).c_str(),
                      fixed(r.f1, 1).c_str(), fixed(100.0 * r.unk_rate, 1).c_str(),
                      fixed(100.0 * r.nm_rate, 1).c_str(), fixed(r.mean_prompt_tokens, 1).c_str(),
                      fixed(r.mean_completion_tokens, 1).c_str());
        os << line;
    }
    return os.str();
}

}  // namespace ragfuse
