#include "switchminer/lexicon.hpp"

#include <sstream>

#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"

namespace switchminer::switching {

namespace {

constexpr std::string_view kBuiltinLexicon = R"(# Contraceptive modality lexicon: <modality|exclude><TAB><regex>, case-insensitive.
# Exclusions are checked first; otherwise the first matching line wins.
exclude	emergency
exclude	\bplan b\b
exclude	ulipristal
exclude	\bella\b
exclude	levonorgestrel 1\.5
exclude	condom
exclude	diaphragm
exclude	cervical cap
exclude	spermicid|nonoxynol
exclude	phexxi|vaginal ph|contraceptive gel
exclude	\bsponge\b
IUD	\bmirena\b
IUD	\bkyleena\b
IUD	\bskyla\b
IUD	\bliletta\b
IUD	\bparagard\b
IUD	copper\s*(t|iud)
IUD	intrauterine
IUD	\biuds?\b
Implant	\bnexplanon\b
Implant	\bimplanon\b
Implant	subdermal
Implant	\bimplants?\b
Injection	depo[- ]?(subq[- ]?)?provera
Injection	\bdepo\b
Injection	medroxyprogesterone
Injection	\binject(ion|ions|able|ables)?\b
Transdermal	\bxulane\b
Transdermal	\btwirla\b
Transdermal	ortho[- ]?evra
Transdermal	norelgestromin
Transdermal	transdermal
Transdermal	\bpatch(es)?\b
Intravaginal	\bnuvaring\b
Intravaginal	\bannovera\b
Intravaginal	\beluryng\b
Intravaginal	vaginal (ring|system)
Intravaginal	intravaginal
Intravaginal	\brings?\b
Oral	\bsprintec\b
Oral	\bjunel\b
Oral	\byaz\b
Oral	\byasmin\b
Oral	\bcamila\b
Oral	\bloestrin\b
Oral	\bmicrogestin\b
Oral	ortho[- ]?tri[- ]?cyclen
Oral	norethindrone
Oral	norgestimate
Oral	drospirenone
Oral	desogestrel
Oral	levonorgestrel[- ]ethinyl
Oral	\btablets?\b
Oral	\bpills?\b
Oral	\boral\b
Oral	\bocps?\b
)";

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ModalityLexicon ModalityLexicon::parse(std::string_view text) {
  ModalityLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string::npos) {
      throw InvalidInput("lexicon line " + std::to_string(number) + ": expected <modality><TAB><regex>");
    }
    const std::string kind = trim(t.substr(0, tab));
    Entry e;
    e.pattern = trim(t.substr(tab + 1));
    if (kind == "exclude") {
      e.exclude = true;
    } else {
      auto m = parse_modality(kind);
      if (!m || *m == Modality::None) {
        throw InvalidInput("lexicon line " + std::to_string(number) + ": unknown modality '" + kind + "'");
      }
      e.modality = *m;
    }
    try {
      e.regex = std::regex(e.pattern, std::regex::ECMAScript | std::regex::icase | std::regex::optimize);
    } catch (const std::regex_error& err) {
      throw InvalidInput("lexicon line " + std::to_string(number) + ": bad pattern: " + err.what());
    }
    lex.entries_.push_back(std::move(e));
  }
  return lex;
}

ModalityLexicon ModalityLexicon::load(const std::filesystem::path& path) { return parse(read_text_file(path)); }

std::string_view ModalityLexicon::builtin_text() { return kBuiltinLexicon; }

const ModalityLexicon& ModalityLexicon::builtin() {
  static const ModalityLexicon kLexicon = parse(kBuiltinLexicon);
  return kLexicon;
}

MatchResult ModalityLexicon::map(std::string_view raw_name) const {
  const std::string text(raw_name);
  for (const auto& e : entries_) {
    if (e.exclude && std::regex_search(text, e.regex)) return {MatchKind::Excluded, Modality::None};
  }
  for (const auto& e : entries_) {
    if (!e.exclude && std::regex_search(text, e.regex)) return {MatchKind::Matched, e.modality};
  }
  return {};
}

ModalitySet ModalityLexicon::all_matches(std::string_view raw_name) const {
  const std::string text(raw_name);
  ModalitySet out;
  for (const auto& e : entries_) {
    if (!e.exclude && std::regex_search(text, e.regex)) out.insert(e.modality);
  }
  return out;
}

}  // namespace switchminer::switching
