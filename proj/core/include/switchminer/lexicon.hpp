#pragma once

#include <filesystem>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/modality.hpp"

namespace switchminer::switching {

enum class MatchKind { Matched, Excluded, Unmatched };

struct MatchResult {
  MatchKind kind = MatchKind::Unmatched;
  Modality modality = Modality::None;  // meaningful only when kind == Matched
  bool operator==(const MatchResult&) const = default;
};

/// Ordered case-insensitive patterns mapping medication strings to modalities.
/// Exclusion patterns (non-drug and emergency contraceptives) are checked
/// before inclusion patterns; among inclusions the first match wins.
class ModalityLexicon {
 public:
  struct Entry {
    bool exclude = false;
    Modality modality = Modality::None;
    std::string pattern;
    std::regex regex;
  };

  /// Parses `modality<TAB>regex` / `exclude<TAB>regex` lines; `#` starts a
  /// comment line. Throws InvalidInput naming the line on a bad modality or a
  /// pattern that does not compile.
  static ModalityLexicon parse(std::string_view text);
  static ModalityLexicon load(const std::filesystem::path& path);
  /// The shipped lexicon (identical to data/lexicon.tsv).
  static const ModalityLexicon& builtin();
  static std::string_view builtin_text();

  [[nodiscard]] MatchResult map(std::string_view raw_name) const;

  /// Modalities of every inclusion pattern that matches (used to verify that
  /// a name is unambiguous).
  [[nodiscard]] ModalitySet all_matches(std::string_view raw_name) const;

  [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

inline MatchResult map_to_modality(std::string_view raw_name, const ModalityLexicon& lexicon) {
  return lexicon.map(raw_name);
}

}  // namespace switchminer::switching
