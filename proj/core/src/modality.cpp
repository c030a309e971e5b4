#include "switchminer/modality.hpp"

#include <algorithm>
#include <bit>

namespace switchminer {

namespace {
constexpr std::array<std::string_view, 7> kNames = {"Oral",        "Implant",      "IUD", "Injection",
                                                    "Transdermal", "Intravaginal", "None"};
}

std::string_view to_string(Modality m) { return kNames[static_cast<std::size_t>(m)]; }

std::optional<Modality> parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Modality>(i);
  }
  return std::nullopt;
}

ModalitySet::ModalitySet(std::initializer_list<Modality> items) {
  for (Modality m : items) insert(m);
}

void ModalitySet::insert(Modality m) {
  if (m == Modality::None) return;
  bits_ |= static_cast<std::uint8_t>(1U << static_cast<int>(m));
}

std::size_t ModalitySet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<Modality> ModalitySet::members() const {
  std::vector<Modality> out;
  for (Modality m : kPrescribedModalities) {
    if (contains(m)) out.push_back(m);
  }
  return out;
}

Modality ModalitySet::primary() const {
  std::optional<Modality> best;
  for (Modality m : members()) {
    if (!best || switchminer::to_string(m) < switchminer::to_string(*best)) best = m;
  }
  return best.value_or(Modality::None);
}

ModalitySet ModalitySet::from_bits(std::uint8_t bits) {
  ModalitySet s;
  s.bits_ = bits & 0x3F;
  return s;
}

std::string ModalitySet::to_string() const {
  if (empty()) return "none";
  std::string out;
  for (Modality m : members()) {
    if (!out.empty()) out += ", ";
    out += switchminer::to_string(m);
  }
  return out;
}

std::vector<std::string> modality_names(ModalitySet set) {
  std::vector<std::string> out;
  for (Modality m : set.members()) out.emplace_back(to_string(m));
  return out;
}

ModalitySet modality_set_from_names(const std::vector<std::string>& names) {
  ModalitySet s;
  for (const auto& n : names) {
    if (auto m = parse_modality(n)) s.insert(*m);
  }
  return s;
}

}  // namespace switchminer
