#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impactkit/chat_gateway.hpp"
#include "impactkit/paper_record.hpp"

namespace impactkit::keyphrase {

/// User-prompt template for topic key-phrase extraction. The body must
/// contain the {title} and {abstract} placeholders exactly once each.
struct PromptTemplate {
    std::string name;
    std::string body;
    std::optional<std::string> system_preamble;
};

/// The three built-in extraction templates, in ranked order; the last
/// (focused on application area + key technology) is the default.
std::span<const PromptTemplate> builtin_templates();
const PromptTemplate& default_template();
const PromptTemplate* find_template(std::string_view name);

/// Verbatim placeholder substitution. Throws MissingPlaceholderError when
/// either placeholder is absent or duplicated.
std::string render_keyphrase_prompt(const PromptTemplate& tmpl,
                                    std::string_view title,
                                    std::string_view abstract);

/// Reply cleanup before comparison or storage: trim whitespace, strip one
/// or more layers of wrapping quotes, drop trailing periods, lowercase.
/// Idempotent.
std::string normalize_response(std::string_view raw);

/// Renders the prompt, sends it through the gateway, and returns the
/// normalized reply. Throws EmptyResponseError when the reply normalizes
/// to nothing.
std::string extract_keyphrase(const PaperRecord& paper, const PromptTemplate& tmpl,
                              ChatGateway& gateway);

struct AnnotatedTopicExample {
    std::string title;
    std::string abstract;
    std::string gold_phrase;
};

enum class FailurePolicy { FailFast, SkipAndCount };

struct TemplateEvaluation {
    double mean_ned = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

/// Mean normalized edit distance between extracted and gold phrases over
/// the example set; lower is better. Gateway failures either abort
/// (FailFast) or are skipped and counted (SkipAndCount). `parallelism`
/// bounds the extraction fan-out; results aggregate in example order
/// either way.
TemplateEvaluation evaluate_template(const PromptTemplate& tmpl,
                                     std::span<const AnnotatedTopicExample> examples,
                                     ChatGateway& gateway,
                                     FailurePolicy policy = FailurePolicy::FailFast,
                                     std::size_t parallelism = 1);

}  // namespace impactkit::keyphrase
