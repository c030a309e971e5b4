#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace switchminer::baselines {

/// Lowercases, splits on any run of non-alphanumeric bytes, and drops terms
/// shorter than two characters. Non-ASCII bytes act as separators.
std::vector<std::string> tokenize(std::string_view text);

std::size_t token_count(std::string_view text);

}  // namespace switchminer::baselines
