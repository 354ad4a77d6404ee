#include "impactkit/dataset_builder.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "impactkit/errors.hpp"
#include "impactkit/rng.hpp"

namespace impactkit::dataset {

namespace {

using nlohmann::json;

const std::unordered_set<std::string>& known_fields() {
    static const std::unordered_set<std::string> fields = {
        "id",    "arxiv_id",   "title",  "abstract", "cites",
        "pub_date", "categories", "tncsi",  "tncsi_sp", "extras",
        "cohort",   "split",      "schema_version"};
    return fields;
}

json extras_to_json(const std::optional<ExtrasRecord>& extras) {
    if (!extras) return nullptr;
    json out;
    out["sota_claim"] =
        extras->sota_claim ? json(*extras->sota_claim) : json();
    out["released_dataset"] =
        extras->released_dataset ? json(*extras->released_dataset) : json();
    out["open_access_code"] =
        extras->open_access_code ? json(*extras->open_access_code) : json();
    out["rqm"] = extras->rqm ? json(*extras->rqm) : json();
    return out;
}

std::optional<ExtrasRecord> extras_from_json(const json& obj) {
    if (obj.is_null()) return std::nullopt;
    ExtrasRecord extras;
    const auto opt_bool = [&](const char* field) -> std::optional<bool> {
        if (!obj.contains(field) || obj[field].is_null()) return std::nullopt;
        return obj[field].get<bool>();
    };
    extras.sota_claim = opt_bool("sota_claim");
    extras.released_dataset = opt_bool("released_dataset");
    extras.open_access_code = opt_bool("open_access_code");
    if (obj.contains("rqm") && !obj["rqm"].is_null()) {
        extras.rqm = obj["rqm"].get<double>();
        if (*extras.rqm < 0.0 || *extras.rqm > 1.0) {
            throw SchemaViolationError("rqm outside [0, 1]");
        }
    }
    return extras;
}

}  // namespace

json example_to_json(const LabeledExample& example,
                     std::optional<std::string_view> split_label) {
    const PaperRecord& p = example.paper;
    json out;
    out["id"] = p.paper_id;
    out["arxiv_id"] = p.arxiv_id ? json(*p.arxiv_id) : json();
    out["title"] = p.title;
    out["abstract"] = p.abstract;
    out["cites"] = p.citation_count;
    out["pub_date"] =
        p.publication_date ? json(format_date(*p.publication_date)) : json();
    out["categories"] = p.categories;
    out["tncsi"] = example.tncsi ? json(*example.tncsi) : json();
    out["tncsi_sp"] = example.tncsi_sp;
    out["extras"] = extras_to_json(p.extras);
    out["cohort"] = {{"lambda", example.cohort_meta.fit.lambda},
                     {"mean", example.cohort_meta.fit.sample_mean},
                     {"n", example.cohort_meta.cohort_size}};
    if (split_label) out["split"] = std::string(*split_label);
    out["schema_version"] = kSchemaVersion;
    return out;
}

LabeledExample example_from_json(const json& record,
                                 std::optional<std::string>* split_label) {
    if (!record.is_object()) throw SchemaViolationError("record is not an object");
    for (const auto& [field, _] : record.items()) {
        if (!known_fields().count(field)) {
            throw SchemaViolationError("unknown field \"" + field + "\"");
        }
    }
    for (const char* required :
         {"id", "title", "abstract", "cites", "tncsi_sp", "schema_version"}) {
        if (!record.contains(required)) {
            throw SchemaViolationError(std::string("missing field \"") + required +
                                       "\"");
        }
    }
    if (record["schema_version"].get<int>() != kSchemaVersion) {
        throw SchemaViolationError("unsupported schema_version");
    }

    LabeledExample out;
    out.paper.paper_id = record["id"].get<std::string>();
    if (record.contains("arxiv_id") && !record["arxiv_id"].is_null()) {
        out.paper.arxiv_id = record["arxiv_id"].get<std::string>();
    }
    out.paper.title = record["title"].get<std::string>();
    out.paper.abstract = record["abstract"].get<std::string>();
    out.paper.citation_count = record["cites"].get<std::uint64_t>();
    if (record.contains("pub_date") && !record["pub_date"].is_null()) {
        const auto d = parse_date(record["pub_date"].get<std::string>());
        if (!d) throw SchemaViolationError("unparseable pub_date");
        out.paper.publication_date = d;
    }
    if (record.contains("categories")) {
        out.paper.categories =
            record["categories"].get<std::vector<std::string>>();
    }
    if (record.contains("extras")) {
        out.paper.extras = extras_from_json(record["extras"]);
    }
    if (record.contains("tncsi") && !record["tncsi"].is_null()) {
        out.tncsi = record["tncsi"].get<double>();
        if (*out.tncsi < 0.0 || *out.tncsi > 1.0) {
            throw SchemaViolationError("tncsi outside [0, 1]");
        }
    }
    out.tncsi_sp = record["tncsi_sp"].get<double>();
    if (out.tncsi_sp < 0.0 || out.tncsi_sp > 1.0) {
        throw SchemaViolationError("tncsi_sp outside [0, 1]");
    }
    if (record.contains("cohort") && !record["cohort"].is_null()) {
        const auto& c = record["cohort"];
        out.cohort_meta.fit.lambda = c.at("lambda").get<double>();
        out.cohort_meta.fit.sample_mean = c.at("mean").get<double>();
        out.cohort_meta.cohort_size = c.at("n").get<std::size_t>();
        out.cohort_meta.fit.n = out.cohort_meta.cohort_size;
    }
    if (split_label) {
        if (record.contains("split") && !record["split"].is_null()) {
            *split_label = record["split"].get<std::string>();
        } else {
            *split_label = std::nullopt;
        }
    }
    return out;
}

LabelOutcome label_papers(std::span<const PaperRecord> papers,
                          scholar::ScholarGateway& gateway, ChatGateway& chat,
                          const LabelConfig& config) {
    if (papers.empty()) throw InvalidArgumentError("no papers to label");

    LabelOutcome outcome;
    for (const auto& paper : papers) {
        const auto fail = [&](std::string reason) {
            if (config.warn) {
                config.warn("label_papers: " + paper.paper_id + ": " + reason);
            }
            outcome.failures.push_back({paper.paper_id, std::move(reason)});
        };
        try {
            if (!paper.publication_date) {
                fail("missing_publication_date");
                continue;
            }
            const std::string phrase =
                keyphrase::extract_keyphrase(paper, config.prompt, chat);
            const DateWindow window = metrics::same_period_window(
                *paper.publication_date, config.half_span_months);
            metrics::Cohort cohort =
                gateway.search_cohort(phrase, window, config.cohort_capacity);
            cohort.anchor_date = paper.publication_date;
            cohort.members = metrics::dedupe_members(cohort.members);
            if (cohort.members.size() < config.min_cohort_size) {
                fail("cohort_too_small: n=" +
                     std::to_string(cohort.members.size()) + " < " +
                     std::to_string(config.min_cohort_size));
                continue;
            }

            LabeledExample example;
            example.paper = paper;
            const metrics::ImpactScore sp =
                metrics::score_paper(paper, cohort, metrics::ImpactKind::TNCSI_SP);
            example.tncsi_sp = sp.value;
            example.cohort_meta = CohortMeta{sp.fit, sp.cohort_size};

            if (config.compute_tncsi) {
                metrics::Cohort full = gateway.search_cohort(
                    phrase, std::nullopt, config.cohort_capacity);
                full.members = metrics::dedupe_members(full.members);
                example.tncsi =
                    metrics::score_paper(paper, full, metrics::ImpactKind::TNCSI)
                        .value;
            }
            outcome.examples.push_back(std::move(example));
        } catch (const Error& e) {
            fail(std::string(e.kind()) + ": " + e.what());
        }
    }

    if (outcome.examples.empty()) {
        throw AllFailedError("none of the " + std::to_string(papers.size()) +
                             " papers could be labeled");
    }
    return outcome;
}

std::vector<LabeledExample> stratify_uniform(
    std::span<const LabeledExample> examples, std::size_t bins, std::size_t per_bin,
    std::uint64_t seed, const std::function<void(const std::string&)>& warn) {
    if (bins < 2) throw InvalidArgumentError("stratification needs bins >= 2");
    if (per_bin == 0) throw InvalidArgumentError("per_bin must be positive");

    // Deduplicate by paper id, first occurrence wins.
    std::vector<const LabeledExample*> unique;
    unique.reserve(examples.size());
    std::unordered_set<std::string> seen;
    for (const auto& ex : examples) {
        if (seen.insert(ex.paper.paper_id).second) unique.push_back(&ex);
    }

    std::vector<std::vector<const LabeledExample*>> binned(bins);
    for (const auto* ex : unique) {
        const double label = ex->tncsi_sp;
        auto idx = std::size_t(label * double(bins));
        if (idx >= bins) idx = bins - 1;  // label == 1.0 lands in the top bin
        binned[idx].push_back(ex);
    }

    SplitMix64 rng(seed);
    std::vector<LabeledExample> out;
    for (std::size_t b = 0; b < bins; ++b) {
        auto& bucket = binned[b];
        if (bucket.size() <= per_bin) {
            if (bucket.size() < per_bin && warn) {
                warn("bin " + std::to_string(b) + " holds only " +
                     std::to_string(bucket.size()) + " of " +
                     std::to_string(per_bin) + " requested examples");
            }
            for (const auto* ex : bucket) out.push_back(*ex);
            continue;
        }
        // Partial Fisher-Yates: choose per_bin without replacement, then
        // restore input order for a stable output.
        std::vector<std::size_t> indices(bucket.size());
        std::iota(indices.begin(), indices.end(), 0);
        for (std::size_t i = 0; i < per_bin; ++i) {
            const std::size_t j =
                i + std::size_t(rng.next_below(indices.size() - i));
            std::swap(indices[i], indices[j]);
        }
        indices.resize(per_bin);
        std::sort(indices.begin(), indices.end());
        for (const std::size_t i : indices) out.push_back(*bucket[i]);
    }
    return out;
}

DatasetSplit split(std::span<const LabeledExample> examples,
                   std::array<unsigned, 3> ratios, std::uint64_t seed) {
    if (examples.size() < 10) {
        throw TooFewExamplesError("need at least 10 examples to split, got " +
                                  std::to_string(examples.size()));
    }
    const unsigned total = ratios[0] + ratios[1] + ratios[2];
    if (ratios[0] == 0 || ratios[1] == 0 || ratios[2] == 0) {
        throw InvalidArgumentError("split ratios must all be positive");
    }

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(seed);
    deterministic_shuffle(order, rng);

    const std::size_t n = examples.size();
    const std::size_t n_validation = n * ratios[1] / total;
    const std::size_t n_test = n * ratios[2] / total;
    const std::size_t n_train = n - n_validation - n_test;

    DatasetSplit result;
    result.seed = seed;
    result.train.reserve(n_train);
    result.validation.reserve(n_validation);
    result.test.reserve(n_test);
    std::size_t i = 0;
    for (; i < n_train; ++i) result.train.push_back(examples[order[i]]);
    for (; i < n_train + n_validation; ++i) {
        result.validation.push_back(examples[order[i]]);
    }
    for (; i < n; ++i) result.test.push_back(examples[order[i]]);
    return result;
}

namespace {

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::pair<const LabeledExample*,
                                             std::optional<std::string_view>>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write dataset file " + path.string());
    for (const auto& [example, label] : rows) {
        out << example_to_json(*example, label).dump() << "\n";
    }
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

template <typename OnRecord>
void read_lines(const std::filesystem::path& path, OnRecord&& on_record) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            throw SchemaViolationError(path.string() + " line " +
                                       std::to_string(lineno) +
                                       ": not valid JSON");
        }
        try {
            on_record(record, lineno);
        } catch (const SchemaViolationError& e) {
            throw SchemaViolationError(path.string() + " line " +
                                       std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

void write_examples(std::span<const LabeledExample> examples,
                    const std::filesystem::path& path) {
    std::vector<std::pair<const LabeledExample*, std::optional<std::string_view>>>
        rows;
    rows.reserve(examples.size());
    for (const auto& ex : examples) rows.emplace_back(&ex, std::nullopt);
    write_lines(path, rows);
}

std::vector<LabeledExample> read_examples(const std::filesystem::path& path) {
    std::vector<LabeledExample> out;
    read_lines(path, [&](const json& record, std::size_t) {
        out.push_back(example_from_json(record));
    });
    return out;
}

void write_dataset(const DatasetSplit& dataset, const std::filesystem::path& path) {
    std::vector<std::pair<const LabeledExample*, std::optional<std::string_view>>>
        rows;
    rows.reserve(dataset.train.size() + dataset.validation.size() +
                 dataset.test.size());
    for (const auto& ex : dataset.train) rows.emplace_back(&ex, "train");
    for (const auto& ex : dataset.validation) rows.emplace_back(&ex, "validation");
    for (const auto& ex : dataset.test) rows.emplace_back(&ex, "test");
    write_lines(path, rows);
}

DatasetSplit read_dataset(const std::filesystem::path& path) {
    DatasetSplit out;
    read_lines(path, [&](const json& record, std::size_t) {
        std::optional<std::string> label;
        LabeledExample example = example_from_json(record, &label);
        if (!label) throw SchemaViolationError("missing field \"split\"");
        if (*label == "train") {
            out.train.push_back(std::move(example));
        } else if (*label == "validation") {
            out.validation.push_back(std::move(example));
        } else if (*label == "test") {
            out.test.push_back(std::move(example));
        } else {
            throw SchemaViolationError("unknown split \"" + *label + "\"");
        }
    });
    return out;
}

}  // namespace impactkit::dataset
