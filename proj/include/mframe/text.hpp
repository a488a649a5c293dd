#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mframe {

// Lowercased ASCII.
std::string case_fold(std::string_view text);

// Whitespace and punctuation splitting; tokens are case-folded. Apostrophes
// inside a word are kept ("don't").
std::vector<std::string> tokenize(std::string_view text);

// Porter (1980) suffix stripping on a single lowercase word.
std::string porter_stem(std::string_view word);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace mframe
