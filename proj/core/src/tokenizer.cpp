#include "switchminer/tokenizer.hpp"

namespace switchminer::baselines {

namespace {
constexpr bool is_alnum_ascii(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
constexpr char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : static_cast<char>(c); }
}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> terms;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) terms.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_alnum_ascii(c)) {
      current.push_back(lower(c));
    } else {
      flush();
    }
  }
  flush();
  return terms;
}

std::size_t token_count(std::string_view text) { return tokenize(text).size(); }

}  // namespace switchminer::baselines
