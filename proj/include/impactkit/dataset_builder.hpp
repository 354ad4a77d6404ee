#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "impactkit/chat_gateway.hpp"
#include "impactkit/core_metrics.hpp"
#include "impactkit/keyphrase.hpp"
#include "impactkit/paper_record.hpp"
#include "impactkit/scholar_gateway.hpp"

namespace impactkit::dataset {

/// Provenance of a label: the fit it came from and the cohort size behind
/// it, kept so downstream consumers can audit label quality.
struct CohortMeta {
    metrics::ExponentialFit fit;
    std::size_t cohort_size = 0;

    friend bool operator==(const CohortMeta&, const CohortMeta&) = default;
};

struct LabeledExample {
    PaperRecord paper;
    std::optional<double> tncsi;
    double tncsi_sp = 0.0;
    CohortMeta cohort_meta;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct LabelFailure {
    std::string paper_id;
    std::string reason;
};

struct LabelConfig {
    keyphrase::PromptTemplate prompt = keyphrase::default_template();
    std::size_t cohort_capacity = 1000;
    int half_span_months = 6;
    // Labels fitted on fewer members than this are rejected; windowing can
    // shrink a cohort far below the retrieval cap.
    std::size_t min_cohort_size = 30;
    bool compute_tncsi = false;
    std::function<void(const std::string&)> warn;
};

struct LabelOutcome {
    std::vector<LabeledExample> examples;
    std::vector<LabelFailure> failures;
};

/// Full labeling pipeline per paper: key phrase -> windowed cohort ->
/// same-period score (plus optionally an unwindowed cohort for the
/// cumulative score). Per-paper problems become LabelFailure entries;
/// output order follows input order. Throws AllFailedError when no paper
/// could be labeled.
LabelOutcome label_papers(std::span<const PaperRecord> papers,
                          scholar::ScholarGateway& gateway, ChatGateway& chat,
                          const LabelConfig& config);

/// Equal-width binning of tncsi_sp over [0, 1] with at most per_bin
/// examples kept per bin (seeded sampling without replacement).
/// Under-populated bins keep everything they have and emit a warning.
/// Duplicate paper ids are dropped up front. Output order: bin by bin,
/// input order within each bin.
std::vector<LabeledExample> stratify_uniform(
    std::span<const LabeledExample> examples, std::size_t bins, std::size_t per_bin,
    std::uint64_t seed, const std::function<void(const std::string&)>& warn = {});

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
    std::uint64_t seed = 0;
};

/// Seeded shuffle followed by a contiguous cut. Validation and test sizes
/// round down; the remainder goes to train. Identical (input, seed) yields
/// an identical partition. Throws TooFewExamplesError below 10 examples.
DatasetSplit split(std::span<const LabeledExample> examples,
                   std::array<unsigned, 3> ratios, std::uint64_t seed);

inline DatasetSplit split(std::span<const LabeledExample> examples,
                          std::uint64_t seed) {
    return split(examples, {8, 1, 1}, seed);
}

/// JSON-lines persistence. One record per line with fields
///   {id, arxiv_id, title, abstract, cites, pub_date, categories, tncsi,
///    tncsi_sp, extras{sota_claim, released_dataset, open_access_code, rqm},
///    cohort{lambda, mean, n}, split, schema_version}
/// The split field is present in dataset files and absent in plain example
/// files. read_* throw SchemaViolationError naming the offending line for
/// malformed JSON, unknown fields, or missing required fields.
void write_examples(std::span<const LabeledExample> examples,
                    const std::filesystem::path& path);
std::vector<LabeledExample> read_examples(const std::filesystem::path& path);

void write_dataset(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit read_dataset(const std::filesystem::path& path);

/// Serialization of a single record; `split_label` adds the split field.
nlohmann::json example_to_json(const LabeledExample& example,
                               std::optional<std::string_view> split_label = {});
LabeledExample example_from_json(const nlohmann::json& record,
                                 std::optional<std::string>* split_label = nullptr);

constexpr int kSchemaVersion = 1;

}  // namespace impactkit::dataset
