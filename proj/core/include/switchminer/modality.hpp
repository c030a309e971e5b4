#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace switchminer {

enum class Modality : std::uint8_t { Oral, Implant, IUD, Injection, Transdermal, Intravaginal, None };

/// The six modalities that can actually be prescribed (None excluded).
inline constexpr std::array<Modality, 6> kPrescribedModalities = {
    Modality::Oral,        Modality::Implant,     Modality::IUD,
    Modality::Injection,   Modality::Transdermal, Modality::Intravaginal};

std::string_view to_string(Modality m);
std::optional<Modality> parse_modality(std::string_view name);

/// Set of prescribed modalities, stored as a bitmask.
class ModalitySet {
 public:
  constexpr ModalitySet() = default;
  ModalitySet(std::initializer_list<Modality> items);

  void insert(Modality m);
  [[nodiscard]] bool contains(Modality m) const { return (bits_ >> static_cast<int>(m)) & 1U; }
  [[nodiscard]] bool empty() const { return bits_ == 0; }
  [[nodiscard]] std::size_t size() const;

  /// Members in enum order.
  [[nodiscard]] std::vector<Modality> members() const;

  /// Lexicographically smallest modality name, or None for the empty set.
  [[nodiscard]] Modality primary() const;

  [[nodiscard]] ModalitySet minus(ModalitySet other) const { return from_bits(bits_ & ~other.bits_); }
  [[nodiscard]] ModalitySet intersect(ModalitySet other) const { return from_bits(bits_ & other.bits_); }
  [[nodiscard]] ModalitySet unite(ModalitySet other) const { return from_bits(bits_ | other.bits_); }

  [[nodiscard]] std::uint8_t bits() const { return bits_; }
  static ModalitySet from_bits(std::uint8_t bits);

  /// Names joined with ", "; "none" when empty.
  [[nodiscard]] std::string to_string() const;

  bool operator==(const ModalitySet&) const = default;
  auto operator<=>(const ModalitySet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

std::vector<std::string> modality_names(ModalitySet set);
ModalitySet modality_set_from_names(const std::vector<std::string>& names);

}  // namespace switchminer
