#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by chunking, tokenization and answer normalization.
namespace ragfuse::text {

bool is_space(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;
char32_t to_lower(char32_t cp) noexcept;

/// Decodes UTF-8; invalid bytes decode to U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

/// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t count_words(std::string_view s);

std::string lowercase(std::string_view s);
std::string ascii_lowercase(std::string_view s);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace ragfuse::text
