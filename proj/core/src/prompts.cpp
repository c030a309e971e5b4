#include "switchminer/prompts.hpp"

#include <map>
#include <set>
#include <sstream>

#include "switchminer/error.hpp"
#include "switchminer/jsonl.hpp"

namespace switchminer::extraction {

namespace {

constexpr std::string_view kGenericSystem = "You are a helpful assistant.";
constexpr std::string_view kSpecialistSystem =
    "You are a clinical specialist in contraception and family planning who reads outpatient clinical notes and "
    "reports medication changes precisely.";

constexpr std::string_view kTask =
    "Read the clinical note below. Identify 1) which contraceptive was stopped, 2) which new contraceptive was "
    "started, and 3) why the contraceptive switch occurred. Answer \"none\" for anything the note does not "
    "mention.\n\nClinical note:\n{note}\n\n";

std::string format_block(OutputFormat f) {
  switch (f) {
    case OutputFormat::StructuredObject:
      return "Respond with only a JSON object with the keys \"started\", \"stopped\" and \"reason\", for example:\n"
             "{\"started\": \"<contraceptive>\", \"stopped\": \"<contraceptive>\", \"reason\": \"<reason>\"}";
    case OutputFormat::PipeDelimited:
      return "Respond with a single line in exactly this form:\n"
             "started: <contraceptive> | stopped: <contraceptive> | reason: <reason>";
    case OutputFormat::LabeledLines:
      return "Respond with exactly three lines:\nStarted: <contraceptive>\nStopped: <contraceptive>\nReason: <reason>";
  }
  return {};
}

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view to_string(SystemRole r) {
  return r == SystemRole::GenericAssistant ? "generic_assistant" : "clinical_specialist";
}

std::string_view to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::StructuredObject:
      return "structured_object";
    case OutputFormat::PipeDelimited:
      return "pipe_delimited";
    case OutputFormat::LabeledLines:
      return "labeled_lines";
  }
  return "structured_object";
}

std::optional<SystemRole> parse_system_role(std::string_view s) {
  if (s == "generic_assistant") return SystemRole::GenericAssistant;
  if (s == "clinical_specialist") return SystemRole::ClinicalSpecialist;
  return std::nullopt;
}

std::optional<OutputFormat> parse_output_format(std::string_view s) {
  for (auto f : {OutputFormat::StructuredObject, OutputFormat::PipeDelimited, OutputFormat::LabeledLines}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

PromptSpec parse_prompt_fixture(int prompt_id, std::string_view text) {
  const std::string where = "prompt " + std::to_string(prompt_id);
  const auto sep = text.find("\n---\n");
  if (sep == std::string_view::npos) throw InvalidInput(where + ": missing '---' separator");
  std::map<std::string, std::string> headers;
  std::istringstream head{std::string(text.substr(0, sep))};
  std::string line;
  while (std::getline(head, line)) {
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw InvalidInput(where + ": bad header line '" + line + "'");
    headers[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }
  PromptSpec spec;
  spec.prompt_id = prompt_id;
  auto role = parse_system_role(headers["role"]);
  auto format = parse_output_format(headers["format"]);
  if (!role) throw InvalidInput(where + ": unknown role '" + headers["role"] + "'");
  if (!format) throw InvalidInput(where + ": unknown format '" + headers["format"] + "'");
  if (headers["system"].empty()) throw InvalidInput(where + ": empty system message");
  spec.system_role = *role;
  spec.output_format = *format;
  spec.system_message = headers["system"];
  spec.template_text = std::string(text.substr(sep + 5));
  while (!spec.template_text.empty() && spec.template_text.back() == '\n') spec.template_text.pop_back();
  const auto n = count_occurrences(spec.template_text, kNotePlaceholder);
  if (n != 1) {
    throw InvalidInput(where + ": template must contain exactly one {note} placeholder, found " + std::to_string(n));
  }
  return spec;
}

std::string format_prompt_fixture(const PromptSpec& spec) {
  std::string out;
  out += "role: " + std::string(to_string(spec.system_role)) + "\n";
  out += "format: " + std::string(to_string(spec.output_format)) + "\n";
  out += "system: " + spec.system_message + "\n";
  out += "---\n";
  out += spec.template_text + "\n";
  return out;
}

const std::vector<PromptSpec>& builtin_prompts() {
  static const std::vector<PromptSpec> kPrompts = [] {
    std::vector<PromptSpec> out;
    int id = 0;
    for (auto role : {SystemRole::GenericAssistant, SystemRole::ClinicalSpecialist}) {
      for (auto f : {OutputFormat::StructuredObject, OutputFormat::PipeDelimited, OutputFormat::LabeledLines}) {
        PromptSpec p;
        p.prompt_id = ++id;
        p.system_role = role;
        p.output_format = f;
        p.system_message = std::string(role == SystemRole::GenericAssistant ? kGenericSystem : kSpecialistSystem);
        p.template_text = std::string(kTask) + format_block(f);
        out.push_back(std::move(p));
      }
    }
    return out;
  }();
  return kPrompts;
}

void check_prompt_cross(const std::vector<PromptSpec>& prompts) {
  std::set<std::pair<SystemRole, OutputFormat>> cells;
  std::set<int> ids;
  for (const auto& p : prompts) {
    cells.emplace(p.system_role, p.output_format);
    ids.insert(p.prompt_id);
  }
  if (prompts.size() != 6 || cells.size() != 6 || ids != std::set<int>{1, 2, 3, 4, 5, 6}) {
    throw InvalidInput("prompt set must contain ids 1..6 covering every system role x output format pair");
  }
}

std::vector<PromptSpec> load_prompts(const std::filesystem::path& dir) {
  std::vector<PromptSpec> out;
  for (int id = 1; id <= 6; ++id) {
    out.push_back(parse_prompt_fixture(id, read_text_file(dir / ("prompt_" + std::to_string(id) + ".txt"))));
  }
  check_prompt_cross(out);
  return out;
}

std::vector<ChatMessage> render_prompt(const PromptSpec& spec, const corpus::ClinicalNote& note) {
  if (note.text.empty()) throw InvalidInput("render_prompt: note " + note.note_id + " has empty text");
  const auto pos = spec.template_text.find(kNotePlaceholder);
  if (pos == std::string::npos) throw InvalidInput("render_prompt: template has no {note} placeholder");
  std::string user = spec.template_text.substr(0, pos);
  user += note.text;
  user += spec.template_text.substr(pos + kNotePlaceholder.size());
  return {{"system", spec.system_message}, {"user", std::move(user)}};
}

}  // namespace switchminer::extraction
