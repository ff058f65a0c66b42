#include <catch_amalgamated.hpp>

#include "ragfuse/text.hpp"

using namespace ragfuse;

TEST_CASE("split_whitespace handles ASCII and Unicode separators", "[text]") {
    CHECK(text::split_whitespace("a b  c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(text::split_whitespace("  \t\n ").empty());
    // no-break space and ideographic space separate words; punctuation stays attached
    CHECK(text::split_whitespace("caf\xC3\xA9\xC2\xA0ol\xC3\xA9!\xE3\x80\x80x") ==
          std::vector<std::string>{"caf\xC3\xA9", "ol\xC3\xA9!", "x"});
}

TEST_CASE("punctuation follows the Unicode P categories", "[text]") {
    CHECK(text::is_punctuation(U'!'));
    CHECK(text::is_punctuation(U'-'));
    CHECK(text::is_punctuation(U'¿'));  // inverted question mark
    CHECK(text::is_punctuation(U'\u2014'));  // Pd
    CHECK(text::is_punctuation(U'。'));  // ideographic full stop
    CHECK_FALSE(text::is_punctuation(U'$'));  // Sc
    CHECK_FALSE(text::is_punctuation(U'+'));  // Sm
    CHECK_FALSE(text::is_punctuation(U'a'));
}

TEST_CASE("lowercase maps Latin and Greek letters", "[text]") {
    CHECK(text::lowercase("ABC") == "abc");
    CHECK(text::lowercase("\xC3\x89T\xC3\x89") == "\xC3\xA9t\xC3\xA9");  // ÉTÉ
    CHECK(text::lowercase("\xCE\xA3") == "\xCF\x83");                  // Σ -> σ
}

TEST_CASE("UTF-8 round trip and invalid bytes", "[text]") {
    const std::string s = "x\xE2\x82\xAC\xF0\x9F\x98\x80y";
    CHECK(text::encode_utf8(text::decode_utf8(s)) == s);
    CHECK(text::decode_utf8("\xFF") == std::u32string(1, U'�'));
}

TEST_CASE("trim and join", "[text]") {
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::trim("") == "");
    CHECK(text::join({"a", "b", "c"}, ", ") == "a, b, c");
}
