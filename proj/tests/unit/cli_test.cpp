#include <catch_amalgamated.hpp>

#include "ragfuse/cli.hpp"
#include "test_support.hpp"

using namespace ragfuse;
using namespace ragfuse::testing;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "ragfuse");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const char* name) { return fixture(name).string(); }

}  // namespace

TEST_CASE("cli index prints corpus statistics", "[cli]") {
    TempDir dir("cli_index");
    auto r = invoke({"index", "--corpus", fx("mini_corpus.jsonl"), "--max-passage-words", "8", "--out",
                     dir.path().string()});
    CHECK(r.code == 0);
    CHECK(r.out.starts_with("docs 3, passages 5"));
    CHECK(std::filesystem::exists(dir / "index.json"));
}

TEST_CASE("cli filter with a scripted backend", "[cli]") {
    TempDir dir("cli_filter");
    auto r = invoke({"filter", "--questions", fx("mini_questions.jsonl"), "--backend", "script", "--script",
                     fx("mini_script.jsonl"), "--out", dir.path().string()});
    CHECK(r.code == 0);
    CHECK(r.out == "kept 2 removed 1\n");
}

TEST_CASE("cli run then report", "[cli]") {
    TempDir dir("cli_run");
    const auto out = dir.path().string();
    auto run = invoke({"run", "--corpus", fx("toy_corpus.jsonl"), "--questions", fx("toy_questions.jsonl"),
                       "--max-passage-words", "50", "--placement", "gold_random", "--seed", "17",
                       "--strategies", "concat,post_fusion", "--workers", "2", "--out", out});
    REQUIRE(run.code == 0);
    CHECK(run.out.find("Concatenation") != std::string::npos);
    CHECK(run.out.find("Post-Fusion") != std::string::npos);
    CHECK(run.out.find("Pruning") == std::string::npos);

    auto report = invoke({"report", "--out", out});
    CHECK(report.code == 0);
    CHECK(report.out == run.out);
}

TEST_CASE("cli reads a key-value config file and flags override it", "[cli]") {
    TempDir dir("cli_config");
    write_file(dir / "run.toml", "corpus = \"" + fx("mini_corpus.jsonl") + "\"\n" +
                                     "max-passage-words = 8\n"
                                     "k = 2\n"
                                     "strategies = [\"concat\"]\n"
                                     "out = \"" + (dir / "from_config").string() + "\"\n");
    auto r = invoke({"index", "--config", (dir / "run.toml").string()});
    CHECK(r.code == 0);
    CHECK(std::filesystem::exists(dir / "from_config" / "index.json"));

    auto o = invoke({"index", "--config", (dir / "run.toml").string(), "--out", (dir / "flag").string()});
    CHECK(o.code == 0);
    CHECK(std::filesystem::exists(dir / "flag" / "index.json"));
}

TEST_CASE("cli exit codes", "[cli]") {
    TempDir dir("cli_errors");
    auto guard = invoke({"run", "--corpus", fx("mini_corpus.jsonl"), "--questions", fx("mini_questions.jsonl"),
                         "--k", "5", "--max-passage-words", "100", "--model-input-budget", "400", "--out",
                         dir.path().string()});
    CHECK(guard.code == 2);
    CHECK(guard.err.find("config error") != std::string::npos);

    CHECK(invoke({"run", "--strategies", "concat,vote"}).code == 2);
    CHECK(invoke({"run", "--placement", "middle"}).code == 2);
    CHECK(invoke({"report", "--records", (dir / "missing.jsonl").string()}).code == 2);
    CHECK(invoke({}).code != 0);
    CHECK(invoke({"run", "--no-such-flag"}).code != 0);

    write_file(dir / "bad.jsonl", "{\"id\": \"a\"}\n");
    auto bad = invoke({"index", "--corpus", (dir / "bad.jsonl").string(), "--out", dir.path().string()});
    CHECK(bad.code == 1);
    CHECK(bad.err.find(":1:") != std::string::npos);
}
