#pragma once

/// Oracle prompt templates and reply grammars. The two query templates follow
/// the published wording verbatim; golden copies live under assets/prompts/
/// and a test keeps the embedded constants in sync with them.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairsel/model.hpp"

namespace pairsel {

inline constexpr std::string_view kMembershipPromptTemplate =
    "You are provided with the partial docstring of a Python function and multiple "
    "input-output examples from two different programs (Program 1 and Program 2). Your task "
    "is to analyze these examples and determine which program's outputs better align with "
    "the function's intended behavior as described in the docstring. **Please provide only "
    "the classification as a single term: \"Program 1\" or \"Program 2\". Do not include any "
    "additional text or explanations.**\n"
    "Here is the information provided:\n"
    "\n"
    "- **Docstring:**\n"
    "{{docstring}}\n"
    "\n"
    "- **Input-Output Examples:**\n"
    "{{examples}}\n";

inline constexpr std::string_view kMembershipExampleTemplate =
    "Example {{index}}:\n"
    "For Input: {{input}}\n"
    "Output of Program 1:\n"
    "{{output_1}}\n"
    "Output of Program 2:\n"
    "{{output_2}}";

inline constexpr std::string_view kEquivalencePromptTemplate =
    "You are given the following partial docstring of a Python function:\n"
    "\n"
    "{{docstring}}\n"
    "\n"
    "and two Python programs implementing this function:\n"
    "\n"
    "**Program 1:**\n"
    "\n"
    "{{program_1}}\n"
    "\n"
    "**Program 2:**\n"
    "\n"
    "{{program_2}}\n"
    "\n"
    "**Task:** Find an input example such that when this input is provided to both programs, "
    "they produce different outputs.\n"
    "\n"
    "**Important:** The input should be **valid according to the function's description**.\n"
    "\n"
    "**Output Format:** If you find such an input, please return it in the format:\n"
    "parameter_name1=input_value1, parameter_name2=input_value2, ...\n"
    "\n"
    "If you cannot find such an input, please return the term \"NO_DIFF\".\n"
    "\n"
    "**Important:** Provide **only** the input in the specified format or the term "
    "\"NO_DIFF\", without any additional explanations or output.\n";

inline constexpr std::string_view kInputGenPromptTemplate =
    "You are given the following partial docstring of a Python function:\n"
    "\n"
    "{{docstring}}\n"
    "\n"
    "**Task:** Provide {{count}} distinct input examples that are valid according to the "
    "function's description.\n"
    "\n"
    "**Output Format:** Return one input example per line, each in the format:\n"
    "parameter_name1=input_value1, parameter_name2=input_value2, ...\n"
    "\n"
    "**Important:** Provide **only** the input examples in the specified format, without any "
    "additional explanations or output.\n";

namespace detail {

inline std::string fill_slot(std::string tmpl, std::string_view slot, std::string_view text) {
    std::size_t pos = 0;
    while ((pos = tmpl.find(slot, pos)) != std::string::npos) {
        tmpl.replace(pos, slot.size(), text);
        pos += text.size();
    }
    return tmpl;
}

// Slot contents are inserted with trailing whitespace stripped so that
// sources ending in newlines do not create ragged blank lines.
inline std::string rstrip(std::string_view s) {
    std::size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1])))
        --end;
    return std::string(s.substr(0, end));
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

} // namespace detail

// FUNCTION mode: "name=value, name=value" in parameter order. STDIO: the raw
// bytes verbatim.
inline std::string render_input_assignments(const Task& task, const InputExample& input) {
    if (task.io_mode == IoMode::Stdio) {
        const Value& v = input.args.at(0);
        return v.kind() == ValueKind::Raw ? v.raw_bytes() : render(v);
    }
    std::string out;
    for (std::size_t i = 0; i < task.params.size(); ++i) {
        if (i)
            out += ", ";
        out += task.params[i];
        out += '=';
        out += render(input.args.at(i));
    }
    return out;
}

inline std::string render_membership_prompt(const Task& task,
                                            const std::vector<InputExample>& inputs,
                                            const std::vector<std::string>& outputs_a,
                                            const std::vector<std::string>& outputs_b) {
    std::string examples;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (i)
            examples += "\n\n";
        std::string block(kMembershipExampleTemplate);
        block = detail::fill_slot(std::move(block), "{{index}}", std::to_string(i + 1));
        block = detail::fill_slot(std::move(block), "{{input}}",
                                  render_input_assignments(task, inputs[i]));
        block = detail::fill_slot(std::move(block), "{{output_1}}", outputs_a.at(i));
        block = detail::fill_slot(std::move(block), "{{output_2}}", outputs_b.at(i));
        examples += block;
    }
    std::string prompt(kMembershipPromptTemplate);
    prompt = detail::fill_slot(std::move(prompt), "{{docstring}}",
                               detail::rstrip(task.description));
    prompt = detail::fill_slot(std::move(prompt), "{{examples}}", examples);
    return prompt;
}

inline std::string render_equivalence_prompt(const Task& task, const std::string& source_a,
                                             const std::string& source_b) {
    std::string prompt(kEquivalencePromptTemplate);
    prompt = detail::fill_slot(std::move(prompt), "{{docstring}}",
                               detail::rstrip(task.description));
    prompt = detail::fill_slot(std::move(prompt), "{{program_1}}", detail::rstrip(source_a));
    prompt = detail::fill_slot(std::move(prompt), "{{program_2}}", detail::rstrip(source_b));
    return prompt;
}

inline std::string render_input_gen_prompt(const Task& task, std::size_t count) {
    std::string prompt(kInputGenPromptTemplate);
    prompt = detail::fill_slot(std::move(prompt), "{{docstring}}",
                               detail::rstrip(task.description));
    prompt = detail::fill_slot(std::move(prompt), "{{count}}", std::to_string(count));
    return prompt;
}

// A reply containing exactly one of the tokens "Program 1"/"Program 2"
// (case-insensitive) names the winner; anything else is unparseable.
inline std::optional<MembershipWinner> parse_membership_reply(std::string_view reply) {
    bool saw1 = false, saw2 = false;
    constexpr std::string_view word = "program";
    for (std::size_t i = 0; i + word.size() < reply.size() + 1; ++i) {
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(reply[i - 1])) ||
                      reply[i - 1] == '_'))
            continue;
        std::size_t j = 0;
        while (j < word.size() &&
               std::tolower(static_cast<unsigned char>(reply[i + j])) == word[j])
            ++j;
        if (j != word.size())
            continue;
        std::size_t k = i + j;
        while (k < reply.size() && (reply[k] == ' ' || reply[k] == '\t'))
            ++k;
        if (k >= reply.size())
            continue;
        char d = reply[k];
        bool digit_follows = k + 1 < reply.size() &&
                             std::isdigit(static_cast<unsigned char>(reply[k + 1]));
        if (digit_follows)
            continue;
        if (d == '1')
            saw1 = true;
        else if (d == '2')
            saw2 = true;
    }
    if (saw1 == saw2)
        return std::nullopt;
    return saw1 ? MembershipWinner::First : MembershipWinner::Second;
}

namespace detail {

inline bool is_no_diff(std::string_view line) {
    std::string t = trim(line);
    if (t.size() >= 2 && ((t.front() == '"' && t.back() == '"') ||
                          (t.front() == '\'' && t.back() == '\'')))
        t = t.substr(1, t.size() - 2);
    if (!t.empty() && t.back() == '.')
        t.pop_back();
    return iequals(t, "NO_DIFF");
}

// assignment := name "=" value-literal; reply := assignment ("," assignment)*
inline std::optional<std::vector<std::pair<std::string, Value>>>
parse_assignment_list(std::string_view text) {
    std::vector<std::pair<std::string, Value>> out;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    };
    while (true) {
        skip_ws();
        std::size_t name_start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == name_start ||
            std::isdigit(static_cast<unsigned char>(text[name_start])))
            return std::nullopt;
        std::string name(text.substr(name_start, pos - name_start));
        skip_ws();
        if (pos >= text.size() || text[pos] != '=')
            return std::nullopt;
        ++pos;
        try {
            LiteralParser parser(text);
            Value v = parser.parse_prefix(pos);
            out.emplace_back(std::move(name), std::move(v));
        } catch (const ParseError&) {
            return std::nullopt;
        }
        skip_ws();
        if (pos == text.size())
            return out;
        if (text[pos] != ',')
            return std::nullopt;
        ++pos;
    }
}

// Checks the names against task.params as a set and reorders the arguments to
// parameter order. Never produces an arity-mismatched input.
inline std::optional<InputExample>
assignments_to_input(const Task& task, std::vector<std::pair<std::string, Value>> assignments) {
    if (assignments.size() != task.params.size())
        return std::nullopt;
    InputExample input;
    input.args.resize(task.params.size());
    std::vector<bool> filled(task.params.size(), false);
    for (auto& [name, value] : assignments) {
        auto it = std::find(task.params.begin(), task.params.end(), name);
        if (it == task.params.end())
            return std::nullopt;
        std::size_t idx = static_cast<std::size_t>(it - task.params.begin());
        if (filled[idx])
            return std::nullopt;
        input.args[idx] = std::move(value);
        filled[idx] = true;
    }
    return input;
}

inline std::optional<InputExample> parse_function_reply_line(std::string_view line,
                                                             const Task& task) {
    auto assignments = parse_assignment_list(line);
    if (!assignments)
        return std::nullopt;
    return assignments_to_input(task, std::move(*assignments));
}

} // namespace detail

// One input example in the reply grammar, e.g. "string='Apple'". STDIO mode
// takes the remainder after an optional "stdin=" prefix as raw bytes.
inline std::optional<InputExample> parse_input_line(std::string_view line, const Task& task) {
    if (task.io_mode == IoMode::Stdio) {
        std::string t = detail::trim(line);
        std::string_view rest = t;
        constexpr std::string_view prefix = "stdin=";
        if (rest.size() >= prefix.size() &&
            detail::iequals(rest.substr(0, prefix.size()), prefix))
            rest = rest.substr(prefix.size());
        InputExample input;
        input.args.push_back(Value::raw(std::string(rest)));
        return input;
    }
    return detail::parse_function_reply_line(line, task);
}

// Full equivalence-reply grammar: NO_DIFF, or an assignment list naming every
// task parameter exactly once. If the whole reply fails, surrounding prose is
// stripped only when exactly one line parses. Ambiguity yields UNPARSEABLE.
inline EquivalenceAnswer parse_equivalence_reply(std::string_view reply, const Task& task) {
    std::string raw(reply);
    std::string whole = detail::trim(reply);
    if (whole.empty())
        return EquivalenceAnswer::unparseable(std::move(raw));
    if (detail::is_no_diff(whole))
        return EquivalenceAnswer::equivalent(std::move(raw));

    if (task.io_mode == IoMode::Stdio) {
        auto input = parse_input_line(whole, task);
        return EquivalenceAnswer::diff(std::move(*input), std::move(raw));
    }

    if (auto input = detail::parse_function_reply_line(whole, task))
        return EquivalenceAnswer::diff(std::move(*input), std::move(raw));

    std::optional<EquivalenceAnswer> found;
    std::size_t parseable = 0;
    std::size_t start = 0;
    while (start <= whole.size()) {
        std::size_t nl = whole.find('\n', start);
        std::string_view line = nl == std::string::npos
                                    ? std::string_view(whole).substr(start)
                                    : std::string_view(whole).substr(start, nl - start);
        std::string trimmed = detail::trim(line);
        if (!trimmed.empty()) {
            if (detail::is_no_diff(trimmed)) {
                ++parseable;
                found = EquivalenceAnswer::equivalent(raw);
            } else if (auto input = detail::parse_function_reply_line(trimmed, task)) {
                ++parseable;
                found = EquivalenceAnswer::diff(std::move(*input), raw);
            }
        }
        if (nl == std::string::npos)
            break;
        start = nl + 1;
    }
    if (parseable == 1)
        return std::move(*found);
    return EquivalenceAnswer::unparseable(std::move(raw));
}

} // namespace pairsel
