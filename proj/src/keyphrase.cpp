#include "impactkit/keyphrase.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <thread>

#include "impactkit/errors.hpp"
#include "impactkit/ranking_eval.hpp"

namespace impactkit::keyphrase {

namespace {

constexpr std::string_view kTitleSlot = "{title}";
constexpr std::string_view kAbstractSlot = "{abstract}";

const std::vector<PromptTemplate>& builtins() {
    static const std::vector<PromptTemplate> templates = {
        {"research-field",
         "Identify the research field from the given title and abstract. You "
         "MUST respond with the keyword ONLY in this format: xxx\n"
         "Title: {title}\nAbstract: {abstract}",
         std::nullopt},
        {"main-area-keyword",
         "Based on the title and abstract, determine the main area of study "
         "for the paper, focusing on a keyword that accurately represents the "
         "field. You MUST respond with the keyword ONLY in this format: xxx.\n"
         "Title: {title}\nAbstract: {abstract}",
         std::nullopt},
        {"application-technology",
         "Given the title and abstract below, determine the specific research "
         "field by focusing on the main application area and the key "
         "technology. You MUST respond with the keyword ONLY in this format: "
         "xxx.\nTitle: {title}\nAbstract: {abstract}",
         std::nullopt},
    };
    return templates;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

void replace_slot(std::string& body, std::string_view slot, std::string_view value) {
    const std::size_t pos = body.find(slot);
    body.replace(pos, slot.size(), value);
}

}  // namespace

std::span<const PromptTemplate> builtin_templates() { return builtins(); }

const PromptTemplate& default_template() { return builtins().back(); }

const PromptTemplate* find_template(std::string_view name) {
    for (const auto& t : builtins()) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::string render_keyphrase_prompt(const PromptTemplate& tmpl,
                                    std::string_view title,
                                    std::string_view abstract) {
    for (const auto slot : {kTitleSlot, kAbstractSlot}) {
        const std::size_t n = count_occurrences(tmpl.body, slot);
        if (n != 1) {
            throw MissingPlaceholderError(
                "template \"" + tmpl.name + "\" must contain " +
                std::string(slot) + " exactly once (found " + std::to_string(n) +
                ")");
        }
    }
    std::string out = tmpl.body;
    // Substitute the abstract first so a {title} occurring inside the
    // abstract text is never treated as a placeholder.
    replace_slot(out, kAbstractSlot, abstract);
    replace_slot(out, kTitleSlot, title);
    return out;
}

std::string normalize_response(std::string_view raw) {
    std::string_view s = raw;
    const auto is_space = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) != 0;
    };
    for (;;) {
        while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
        while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
        if (s.size() >= 2 &&
            ((s.front() == '"' && s.back() == '"') ||
             (s.front() == '\'' && s.back() == '\''))) {
            s.remove_prefix(1);
            s.remove_suffix(1);
            continue;
        }
        if (!s.empty() && s.back() == '.') {
            s.remove_suffix(1);
            continue;
        }
        break;
    }
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return char(std::tolower(c));
    });
    return out;
}

std::string extract_keyphrase(const PaperRecord& paper, const PromptTemplate& tmpl,
                              ChatGateway& gateway) {
    if (paper.title.empty() || paper.abstract.empty()) {
        throw InvalidArgumentError("key-phrase extraction needs a title and an "
                                   "abstract (paper " + paper.paper_id + ")");
    }
    std::vector<ChatMessage> messages;
    if (tmpl.system_preamble) messages.push_back({"system", *tmpl.system_preamble});
    messages.push_back(
        {"user", render_keyphrase_prompt(tmpl, paper.title, paper.abstract)});
    const std::string phrase = normalize_response(gateway.complete(messages));
    if (phrase.empty()) {
        throw EmptyResponseError("gateway returned an empty key phrase for " +
                                 paper.paper_id);
    }
    return phrase;
}

TemplateEvaluation evaluate_template(const PromptTemplate& tmpl,
                                     std::span<const AnnotatedTopicExample> examples,
                                     ChatGateway& gateway, FailurePolicy policy,
                                     std::size_t parallelism) {
    if (examples.empty()) {
        throw EmptyInputError("template evaluation needs at least one example");
    }
    if (parallelism == 0) parallelism = 1;

    struct Slot {
        double ned = 0.0;
        bool ok = false;
        std::string error;
    };
    std::vector<Slot> slots(examples.size());

    const auto run_one = [&](std::size_t idx) {
        const auto& ex = examples[idx];
        PaperRecord paper;
        paper.paper_id = "example-" + std::to_string(idx);
        paper.title = ex.title;
        paper.abstract = ex.abstract;
        try {
            const std::string got = extract_keyphrase(paper, tmpl, gateway);
            slots[idx].ned = eval::ned(got, normalize_response(ex.gold_phrase));
            slots[idx].ok = true;
        } catch (const Error& e) {
            slots[idx].error = e.what();
        }
    };

    if (parallelism == 1) {
        for (std::size_t i = 0; i < examples.size(); ++i) {
            run_one(i);
            if (!slots[i].ok && policy == FailurePolicy::FailFast) {
                throw GatewayError("example " + std::to_string(i) + " failed: " +
                                   slots[i].error);
            }
        }
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> workers;
        const std::size_t n_workers = std::min(parallelism, examples.size());
        workers.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t idx = cursor.fetch_add(1);
                    if (idx >= slots.size()) return;
                    run_one(idx);
                }
            });
        }
        for (auto& t : workers) t.join();
    }

    TemplateEvaluation result;
    double sum = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].ok) {
            sum += slots[i].ned;
            ++result.evaluated;
        } else if (policy == FailurePolicy::FailFast) {
            throw GatewayError("example " + std::to_string(i) + " failed: " +
                               slots[i].error);
        } else {
            ++result.skipped;
        }
    }
    if (result.evaluated == 0) {
        throw GatewayError("every example failed during template evaluation");
    }
    result.mean_ned = sum / double(result.evaluated);
    return result;
}

}  // namespace impactkit::keyphrase
