#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hag {

std::string to_lower(std::string_view s);

// Lowercases and splits on whitespace and punctuation; each punctuation
// character becomes its own token. Apostrophes and hyphens between two
// alphanumerics stay inside the word ("don't", "well-made").
std::vector<std::string> tokenize(std::string_view text);

// Tokenizes and splits into sentences after ".", "!" and "?" tokens.
std::vector<std::vector<std::string>> split_sentences(std::string_view text);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::vector<std::string> split_ws(std::string_view s);

}  // namespace hag
