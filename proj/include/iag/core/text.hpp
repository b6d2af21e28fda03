#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace iag {

enum class Tokenizer { whitespace };

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Number of maximal non-whitespace runs.
std::size_t count_tokens(std::string_view text, Tokenizer tokenizer = Tokenizer::whitespace);

std::vector<std::string> split_whitespace(std::string_view text);
std::string collapse_whitespace(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool icontains(std::string_view haystack, std::string_view needle);
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from = 0);
std::size_t icount(std::string_view haystack, std::string_view needle);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace iag
