#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "switchminer/corpus.hpp"

namespace switchminer::extraction {

enum class SystemRole { GenericAssistant, ClinicalSpecialist };
enum class OutputFormat { StructuredObject, PipeDelimited, LabeledLines };

std::string_view to_string(SystemRole r);
std::string_view to_string(OutputFormat f);
std::optional<SystemRole> parse_system_role(std::string_view s);
std::optional<OutputFormat> parse_output_format(std::string_view s);

inline constexpr std::string_view kNotePlaceholder = "{note}";

struct PromptSpec {
  int prompt_id = 0;
  SystemRole system_role = SystemRole::GenericAssistant;
  OutputFormat output_format = OutputFormat::StructuredObject;
  std::string system_message;
  std::string template_text;  // contains kNotePlaceholder exactly once
  bool operator==(const PromptSpec&) const = default;
};

/// Parses a prompt fixture:
///
///     role: clinical_specialist
///     format: structured_object
///     system: <system message>
///     ---
///     <user template with one {note}>
///
/// Throws InvalidInput when a header is missing or the placeholder count is not one.
PromptSpec parse_prompt_fixture(int prompt_id, std::string_view text);
std::string format_prompt_fixture(const PromptSpec& spec);

/// The six shipped prompts, ids 1..6: generic roles first, formats in
/// declaration order within each role. Prompt 4 is (specialist, structured_object).
const std::vector<PromptSpec>& builtin_prompts();

/// Loads prompt_1.txt .. prompt_6.txt and checks that they cover the full
/// role × format cross.
std::vector<PromptSpec> load_prompts(const std::filesystem::path& dir);
void check_prompt_cross(const std::vector<PromptSpec>& prompts);

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

/// System message plus the user template with the note substituted once.
/// Throws InvalidInput for an empty note.
std::vector<ChatMessage> render_prompt(const PromptSpec& spec, const corpus::ClinicalNote& note);

}  // namespace switchminer::extraction
