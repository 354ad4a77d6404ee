#include "impactkit/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "impactkit/chat_gateway.hpp"
#include "impactkit/core_metrics.hpp"
#include "impactkit/dataset_builder.hpp"
#include "impactkit/errors.hpp"
#include "impactkit/journal_report.hpp"
#include "impactkit/keyphrase.hpp"
#include "impactkit/predictor.hpp"
#include "impactkit/ranking_eval.hpp"
#include "impactkit/scholar_gateway.hpp"

namespace impactkit::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Shared option bundles
// ---------------------------------------------------------------------------

struct CommonOptions {
    bool pretty = false;
};

struct GatewayOptions {
    std::string base_url = "https://api.semanticscholar.org/graph/v1";
    std::string api_key;
    std::string cache_dir = ".impactkit-cache";
    bool live = false;
    std::size_t requests_per_window = 1;
    std::size_t retry_budget = 3;
};

struct ChatOptions {
    std::string base_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string model = "gpt-3.5-turbo-0125";
    std::string fixture;
    std::string record;
    bool live = false;
};

void add_gateway_options(CLI::App* cmd, GatewayOptions& opts) {
    cmd->add_option("--s2-base-url", opts.base_url,
                    "Semantic Scholar-compatible API root")
        ->envname("IMPACTKIT_S2_BASE_URL");
    cmd->add_option("--s2-api-key", opts.api_key, "API key (x-api-key header)")
        ->envname("IMPACTKIT_S2_API_KEY");
    cmd->add_option("--cache-dir", opts.cache_dir, "Response cache directory")
        ->envname("IMPACTKIT_CACHE_DIR");
    cmd->add_flag("--live", opts.live,
                  "Allow live network requests (default: cache only)");
    cmd->add_option("--requests-per-window", opts.requests_per_window,
                    "Outbound request budget per rate window");
    cmd->add_option("--retry-budget", opts.retry_budget,
                    "Retries for throttled/failing requests");
}

void add_chat_options(CLI::App* cmd, ChatOptions& opts) {
    cmd->add_option("--chat-base-url", opts.base_url,
                    "Chat-completion API root")
        ->envname("IMPACTKIT_CHAT_BASE_URL");
    cmd->add_option("--chat-api-key", opts.api_key, "Chat API key")
        ->envname("IMPACTKIT_CHAT_API_KEY");
    cmd->add_option("--chat-model", opts.model, "Chat model id")
        ->envname("IMPACTKIT_CHAT_MODEL");
    cmd->add_option("--chat-fixture", opts.fixture,
                    "Replay chat replies from this JSONL fixture");
    cmd->add_option("--chat-record", opts.record,
                    "Record live chat replies into this JSONL fixture");
}

scholar::ScholarGateway make_gateway(const GatewayOptions& opts, std::ostream& err) {
    scholar::GatewayConfig config;
    config.base_url = opts.base_url;
    if (!opts.api_key.empty()) config.api_key = opts.api_key;
    config.cache_dir = opts.cache_dir;
    config.offline = !opts.live;
    config.max_requests_per_window = opts.requests_per_window;
    config.retry_budget = opts.retry_budget;
    config.warn = [&err](const std::string& m) { err << "warning: " << m << "\n"; };
    return scholar::ScholarGateway(std::move(config));
}

std::unique_ptr<ChatGateway> make_chat(const ChatOptions& opts, bool live_allowed) {
    if (!opts.fixture.empty()) {
        return std::make_unique<ReplayChatGateway>(
            ReplayChatGateway::from_file(opts.fixture));
    }
    if (live_allowed) {
        ChatConfig config;
        config.base_url = opts.base_url;
        if (!opts.api_key.empty()) config.api_key = opts.api_key;
        config.model = opts.model;
        if (!opts.record.empty()) config.record_fixture = opts.record;
        return std::make_unique<HttpChatGateway>(std::move(config));
    }
    throw GatewayError(
        "no chat backend: pass --chat-fixture for offline replay or --live for "
        "network access");
}

// ---------------------------------------------------------------------------
// Small IO helpers
// ---------------------------------------------------------------------------

template <typename OnRecord>
void for_each_jsonl(const std::string& path, OnRecord&& on_record) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw SchemaViolationError(path + " line " + std::to_string(lineno) +
                                       ": not a JSON object");
        }
        on_record(record, lineno);
    }
}

std::vector<metrics::CohortMember> read_cohort_members(const std::string& path) {
    std::vector<metrics::CohortMember> members;
    for_each_jsonl(path, [&](const json& record, std::size_t lineno) {
        if (!record.contains("id") || !record.contains("cites")) {
            throw SchemaViolationError(path + " line " + std::to_string(lineno) +
                                       ": cohort member needs id and cites");
        }
        metrics::CohortMember m;
        m.paper_id = record["id"].get<std::string>();
        m.citation_count = record["cites"].get<std::uint64_t>();
        if (record.contains("pub_date") && record["pub_date"].is_string()) {
            m.publication_date = parse_date(record["pub_date"].get<std::string>());
        }
        members.push_back(std::move(m));
    });
    return members;
}

Date require_date(const std::string& text, const std::string& flag) {
    const auto d = parse_date(text);
    if (!d) {
        throw InvalidArgumentError(flag + " must be YYYY-MM-DD, got \"" + text +
                                   "\"");
    }
    return *d;
}

void emit(std::ostream& out, const json& doc) { out << doc.dump() << "\n"; }

// ---------------------------------------------------------------------------
// Subcommand payload builders
// ---------------------------------------------------------------------------

json window_json(const std::optional<DateWindow>& window) {
    if (!window) return nullptr;
    return json{{"start", format_date(window->start)},
                {"end", format_date(window->end)}};
}

json score_json(const metrics::ImpactScore& score,
                const std::optional<DateWindow>& window, std::uint64_t cites,
                const std::optional<std::string>& phrase) {
    json doc;
    doc["kind"] = metrics::to_string(score.kind);
    doc["value"] = score.value;
    doc["lambda"] = score.fit.lambda;
    doc["sample_mean"] = score.fit.sample_mean;
    doc["cohort_size"] = score.cohort_size;
    doc["cites"] = cites;
    doc["window"] = window_json(window);
    doc["phrase"] = phrase ? json(*phrase) : json();
    return doc;
}

void pretty_table(std::ostream& out, const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size() && c < widths.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    const auto print_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << std::left << std::setw(int(widths[c]) + 2) << row[c];
        }
        out << "\n";
    };
    print_row(header);
    for (const auto& row : rows) print_row(row);
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct ScoreArgs {
    std::string title;
    std::string abstract;
    std::uint64_t cites = 0;
    std::string pub_date;
    std::string cohort_file;
    std::string phrase;
    std::string kind = "tncsi_sp";
    int half_span_months = 6;
    std::size_t capacity = 1000;
    GatewayOptions gateway;
};

int cmd_score(const ScoreArgs& args, const CommonOptions& common, std::ostream& out,
              std::ostream& err) {
    const auto kind = metrics::impact_kind_from_string(args.kind);
    if (!kind) throw InvalidArgumentError("unknown metric kind " + args.kind);

    PaperRecord paper;
    paper.paper_id = "cli-paper";
    paper.title = args.title;
    paper.abstract = args.abstract;
    paper.citation_count = args.cites;
    if (!args.pub_date.empty()) {
        paper.publication_date = require_date(args.pub_date, "--pub-date");
    }

    std::optional<DateWindow> window;
    if (*kind == metrics::ImpactKind::TNCSI_SP) {
        if (!paper.publication_date) {
            throw InvalidArgumentError(
                "same-period scoring needs --pub-date to derive the window");
        }
        window = metrics::same_period_window(*paper.publication_date,
                                             args.half_span_months);
    }

    metrics::Cohort cohort;
    std::optional<std::string> phrase;
    if (!args.cohort_file.empty()) {
        cohort.members = metrics::dedupe_members(read_cohort_members(args.cohort_file));
        cohort.topic_phrase = args.cohort_file;
        cohort.capacity = std::max(cohort.members.size(), args.capacity);
        if (window) {
            std::erase_if(cohort.members, [&](const metrics::CohortMember& m) {
                return !m.publication_date || !window->contains(*m.publication_date);
            });
            cohort.window = window;
        }
        if (cohort.members.empty()) {
            throw EmptyCohortError("no usable members in " + args.cohort_file);
        }
    } else if (!args.phrase.empty()) {
        auto gateway = make_gateway(args.gateway, err);
        cohort = gateway.search_cohort(args.phrase, window, args.capacity);
        cohort.members = metrics::dedupe_members(cohort.members);
        phrase = cohort.topic_phrase;
    } else {
        throw InvalidArgumentError("score needs --cohort-file or --phrase");
    }
    cohort.anchor_date = paper.publication_date;

    const metrics::ImpactScore score = metrics::score_paper(paper, cohort, *kind);
    const json doc = score_json(score, cohort.window, args.cites, phrase);
    if (common.pretty) {
        pretty_table(out, {"kind", "value", "lambda", "cohort"},
                     {{std::string(metrics::to_string(score.kind)),
                       fmt(score.value), fmt(score.fit.lambda),
                       std::to_string(score.cohort_size)}});
    } else {
        emit(out, doc);
    }
    return 0;
}

struct CohortArgs {
    std::string phrase;
    std::string anchor_date;
    int half_span_months = 6;
    std::size_t capacity = 1000;
    GatewayOptions gateway;
};

int cmd_cohort(const CohortArgs& args, const CommonOptions& common,
               std::ostream& out, std::ostream& err) {
    std::optional<DateWindow> window;
    if (!args.anchor_date.empty()) {
        window = metrics::same_period_window(
            require_date(args.anchor_date, "--anchor-date"), args.half_span_months);
    }
    auto gateway = make_gateway(args.gateway, err);
    metrics::Cohort cohort =
        gateway.search_cohort(args.phrase, window, args.capacity);
    cohort.members = metrics::dedupe_members(cohort.members);

    json doc;
    doc["phrase"] = cohort.topic_phrase;
    doc["size"] = cohort.members.size();
    doc["window"] = window_json(cohort.window);
    doc["network_requests"] = gateway.network_requests();
    std::vector<std::uint64_t> counts;
    counts.reserve(cohort.members.size());
    for (const auto& m : cohort.members) counts.push_back(m.citation_count);
    try {
        const auto fit = metrics::fit_exponential(counts);
        doc["lambda"] = fit.lambda;
        doc["sample_mean"] = fit.sample_mean;
    } catch (const DegenerateCohortError&) {
        doc["lambda"] = nullptr;
        doc["sample_mean"] = 0.0;
    }
    if (common.pretty) {
        pretty_table(out, {"phrase", "size", "lambda"},
                     {{cohort.topic_phrase, std::to_string(cohort.members.size()),
                       doc["lambda"].is_null() ? "n/a" : fmt(doc["lambda"].get<double>())}});
    } else {
        emit(out, doc);
    }
    return 0;
}

struct BuildDatasetArgs {
    std::string snapshot;
    std::vector<std::string> categories{"cs.CV", "cs.CL", "cs.AI"};
    std::string from_date = "2020-01-01";
    std::string to_date = "2022-12-31";
    std::size_t limit = 100;
    std::string out_path;
    std::string template_name = keyphrase::default_template().name;
    std::size_t capacity = 1000;
    int half_span_months = 6;
    std::size_t min_cohort_size = 30;
    bool with_tncsi = false;
    GatewayOptions gateway;
    ChatOptions chat;
};

int cmd_build_dataset(const BuildDatasetArgs& args, const CommonOptions&,
                      std::ostream& out, std::ostream& err) {
    const DateWindow range = make_window(require_date(args.from_date, "--from"),
                                         require_date(args.to_date, "--to"));
    scholar::ArxivIngestOptions ingest;
    ingest.warn = [&err](const std::string& m) { err << "warning: " << m << "\n"; };
    const auto papers = scholar::ingest_arxiv_snapshot(
        args.snapshot, args.categories, range, args.limit, ingest);
    if (papers.empty()) {
        throw EmptyInputError("snapshot yielded no papers after filtering");
    }

    auto gateway = make_gateway(args.gateway, err);
    auto chat = make_chat(args.chat, args.gateway.live);

    dataset::LabelConfig config;
    if (const auto* tmpl = keyphrase::find_template(args.template_name)) {
        config.prompt = *tmpl;
    } else {
        throw InvalidArgumentError("unknown prompt template " + args.template_name);
    }
    config.cohort_capacity = args.capacity;
    config.half_span_months = args.half_span_months;
    config.min_cohort_size = args.min_cohort_size;
    config.compute_tncsi = args.with_tncsi;
    config.warn = [&err](const std::string& m) { err << "warning: " << m << "\n"; };

    const auto outcome = dataset::label_papers(papers, gateway, *chat, config);
    dataset::write_examples(outcome.examples, args.out_path);

    json doc;
    doc["ingested"] = papers.size();
    doc["labeled"] = outcome.examples.size();
    doc["failed"] = outcome.failures.size();
    auto& failures = doc["failures"] = json::array();
    for (const auto& f : outcome.failures) {
        failures.push_back({{"id", f.paper_id}, {"reason", f.reason}});
    }
    doc["out"] = args.out_path;
    emit(out, doc);
    return 0;
}

struct SplitArgs {
    std::string in_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::string ratios = "8,1,1";
};

int cmd_split(const SplitArgs& args, const CommonOptions&, std::ostream& out,
              std::ostream&) {
    std::array<unsigned, 3> ratios{};
    {
        std::istringstream stream(args.ratios);
        std::string part;
        std::size_t i = 0;
        try {
            while (std::getline(stream, part, ',') && i < 3) {
                ratios[i++] = unsigned(std::stoul(part));
            }
        } catch (const std::exception&) {
            throw InvalidArgumentError("--ratios must look like 8,1,1");
        }
        if (i != 3) {
            throw InvalidArgumentError("--ratios must look like 8,1,1");
        }
    }
    const auto examples = dataset::read_examples(args.in_path);
    const auto dataset_split = dataset::split(examples, ratios, args.seed);
    dataset::write_dataset(dataset_split, args.out_path);

    json doc;
    doc["train"] = dataset_split.train.size();
    doc["validation"] = dataset_split.validation.size();
    doc["test"] = dataset_split.test.size();
    doc["seed"] = args.seed;
    doc["out"] = args.out_path;
    emit(out, doc);
    return 0;
}

struct TrainArgs {
    std::string in_path;
    std::string model_out;
    std::string loss = "mse";
    double smoothl1_delta = 1.0;
    double learning_rate = 5e-5;
    std::size_t epochs = 5;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t dim = 4096;
    std::size_t hidden = 64;
};

int cmd_train(const TrainArgs& args, const CommonOptions&, std::ostream& out,
              std::ostream&) {
    const auto data = dataset::read_dataset(args.in_path);
    if (data.train.empty()) {
        throw EmptyInputError("dataset has no train split records");
    }

    predictor::TrainConfig config;
    const auto kind = predictor::loss_kind_from_string(args.loss);
    if (!kind) throw InvalidArgumentError("unknown loss " + args.loss);
    config.loss_kind = *kind;
    config.smoothl1_delta = args.smoothl1_delta;
    config.learning_rate = args.learning_rate;
    config.epochs = args.epochs;
    config.batch_size = args.batch_size;
    config.seed = args.seed;
    config.input_dim = args.dim;
    config.hidden_dim = args.hidden;

    const auto encode = [&](const dataset::LabeledExample& ex) {
        return predictor::TrainExample{
            predictor::encode_text(ex.paper.title, ex.paper.abstract, config.input_dim),
            ex.tncsi_sp};
    };
    std::vector<predictor::TrainExample> train;
    train.reserve(data.train.size());
    for (const auto& ex : data.train) train.push_back(encode(ex));
    std::vector<predictor::TrainExample> validation;
    validation.reserve(data.validation.size());
    for (const auto& ex : data.validation) validation.push_back(encode(ex));

    const auto result = predictor::train_baseline(train, validation, config);
    predictor::save_params(result.params, args.model_out);

    json doc;
    doc["train_size"] = train.size();
    doc["validation_size"] = validation.size();
    doc["best_epoch"] = result.best_epoch;
    doc["best_validation_mae"] = result.best_validation_mae;
    doc["validation_mae_per_epoch"] = result.validation_mae_per_epoch;
    doc["model"] = args.model_out;
    emit(out, doc);
    return 0;
}

struct PredictArgs {
    std::string in_path;
    std::string out_path;
    std::string model;
    double constant = -1.0;
    bool remote = false;
    bool use_extras = false;
    ChatOptions chat;
    GatewayOptions gateway;  // only for --live plumbing symmetry
};

int cmd_predict(const PredictArgs& args, const CommonOptions&, std::ostream& out,
                std::ostream& err) {
    std::unique_ptr<ChatGateway> chat;
    std::unique_ptr<predictor::Predictor> model;
    if (!args.model.empty()) {
        model = std::make_unique<predictor::NativeRegressor>(
            predictor::load_params(args.model));
    } else if (args.constant >= 0.0) {
        model = std::make_unique<predictor::ConstantPredictor>(args.constant);
    } else if (args.remote) {
        chat = make_chat(args.chat, args.gateway.live);
        model = std::make_unique<predictor::RemotePredictor>(
            *chat, [&err](const std::string& m) { err << "warning: " << m << "\n"; });
    } else {
        throw InvalidArgumentError(
            "predict needs --model, --constant, or --remote");
    }

    json predictions = json::array();
    for_each_jsonl(args.in_path, [&](const json& record, std::size_t lineno) {
        if (!record.contains("title") || !record.contains("abstract")) {
            throw SchemaViolationError(args.in_path + " line " +
                                       std::to_string(lineno) +
                                       ": record needs title and abstract");
        }
        const std::string id = record.contains("id")
                                   ? record["id"].get<std::string>()
                                   : "line-" + std::to_string(lineno);
        std::optional<ExtrasRecord> extras;
        if (args.use_extras && record.contains("extras") &&
            record["extras"].is_object()) {
            ExtrasRecord e;
            const auto& obj = record["extras"];
            if (obj.contains("sota_claim") && obj["sota_claim"].is_boolean()) {
                e.sota_claim = obj["sota_claim"].get<bool>();
            }
            if (obj.contains("released_dataset") &&
                obj["released_dataset"].is_boolean()) {
                e.released_dataset = obj["released_dataset"].get<bool>();
            }
            if (obj.contains("open_access_code") &&
                obj["open_access_code"].is_boolean()) {
                e.open_access_code = obj["open_access_code"].get<bool>();
            }
            if (obj.contains("rqm") && obj["rqm"].is_number()) {
                e.rqm = obj["rqm"].get<double>();
            }
            extras = e;
        }
        const double value =
            model->predict(record["title"].get<std::string>(),
                           record["abstract"].get<std::string>(), extras);
        predictions.push_back({{"id", id}, {"predicted", value}});
    });

    if (!args.out_path.empty()) {
        std::ofstream file(args.out_path, std::ios::trunc);
        if (!file) throw IoError("cannot write " + args.out_path);
        for (const auto& p : predictions) file << p.dump() << "\n";
        json doc;
        doc["n"] = predictions.size();
        doc["out"] = args.out_path;
        emit(out, doc);
    } else {
        json doc;
        doc["predictions"] = predictions;
        emit(out, doc);
    }
    return 0;
}

struct EvaluateArgs {
    std::string in_path;
    std::size_t k = 20;
};

int cmd_evaluate(const EvaluateArgs& args, const CommonOptions& common,
                 std::ostream& out, std::ostream& err) {
    std::vector<eval::Prediction> pairs;
    for_each_jsonl(args.in_path, [&](const json& record, std::size_t lineno) {
        if (!record.contains("truth") || !record.contains("predicted")) {
            throw SchemaViolationError(args.in_path + " line " +
                                       std::to_string(lineno) +
                                       ": record needs truth and predicted");
        }
        eval::Prediction p;
        p.item_id = record.contains("id") ? record["id"].get<std::string>()
                                          : "line-" + std::to_string(lineno);
        p.truth = record["truth"].get<double>();
        p.predicted = record["predicted"].get<double>();
        pairs.push_back(std::move(p));
    });

    const eval::EvalReport report = eval::evaluate(pairs, args.k);
    if (report.all_zero_truths) {
        err << "warning: every truth is zero; NDCG reported as 1\n";
    }
    if (common.pretty) {
        pretty_table(out, {"n", "mae", "ndcg@" + std::to_string(report.k)},
                     {{std::to_string(report.n), fmt(report.mae),
                       fmt(report.ndcg_at_k)}});
    } else {
        json doc;
        doc["n"] = report.n;
        doc["mae"] = report.mae;
        doc["ndcg_at_k"] = report.ndcg_at_k;
        doc["k"] = report.k;
        doc["all_zero_truths"] = report.all_zero_truths;
        emit(out, doc);
    }
    return 0;
}

struct JournalReportArgs {
    std::string in_path;
    std::string fractions = "0.05,0.25";
};

int cmd_journal_report(const JournalReportArgs& args, const CommonOptions& common,
                       std::ostream& out, std::ostream&) {
    std::vector<double> fractions;
    {
        std::istringstream stream(args.fractions);
        std::string part;
        try {
            while (std::getline(stream, part, ',')) {
                fractions.push_back(std::stod(part));
            }
        } catch (const std::exception&) {
            throw InvalidArgumentError("--fractions must be numbers like 0.05,0.25");
        }
        if (fractions.empty()) {
            throw InvalidArgumentError("--fractions must name at least one cut");
        }
    }
    std::map<std::string, std::vector<double>> groups;
    for_each_jsonl(args.in_path, [&](const json& record, std::size_t lineno) {
        if (!record.contains("group") || !record.contains("score")) {
            throw SchemaViolationError(args.in_path + " line " +
                                       std::to_string(lineno) +
                                       ": record needs group and score");
        }
        groups[record["group"].get<std::string>()].push_back(
            record["score"].get<double>());
    });
    if (groups.empty()) throw EmptyInputError("no report records in " + args.in_path);

    const auto report = report::journal_report(groups, fractions);
    if (common.pretty) {
        std::vector<std::string> header{"group", "n"};
        for (const double f : report.fractions) {
            header.push_back("top " + fmt(f * 100.0) + "%");
        }
        header.push_back("overall");
        std::vector<std::vector<std::string>> rows;
        for (const auto& g : report.groups) {
            std::vector<std::string> row{g.label, std::to_string(g.n)};
            for (const double m : g.top_fraction_means) row.push_back(fmt(m));
            row.push_back(fmt(g.overall_mean));
            rows.push_back(std::move(row));
        }
        pretty_table(out, header, rows);
    } else {
        json doc;
        doc["fractions"] = report.fractions;
        auto& rows = doc["groups"] = json::array();
        for (const auto& g : report.groups) {
            rows.push_back({{"label", g.label},
                            {"n", g.n},
                            {"top_fraction_means", g.top_fraction_means},
                            {"overall_mean", g.overall_mean}});
        }
        emit(out, doc);
    }
    return 0;
}

struct EvalPromptsArgs {
    std::string in_path;
    std::string template_name;  // empty = all built-ins
    bool skip_failures = false;
    std::size_t parallelism = 1;
    ChatOptions chat;
    GatewayOptions gateway;
};

int cmd_eval_prompts(const EvalPromptsArgs& args, const CommonOptions& common,
                     std::ostream& out, std::ostream&) {
    std::vector<keyphrase::AnnotatedTopicExample> examples;
    for_each_jsonl(args.in_path, [&](const json& record, std::size_t lineno) {
        if (!record.contains("title") || !record.contains("abstract") ||
            !record.contains("gold_phrase")) {
            throw SchemaViolationError(
                args.in_path + " line " + std::to_string(lineno) +
                ": record needs title, abstract, gold_phrase");
        }
        examples.push_back({record["title"].get<std::string>(),
                            record["abstract"].get<std::string>(),
                            record["gold_phrase"].get<std::string>()});
    });

    auto chat = make_chat(args.chat, args.gateway.live);
    std::vector<const keyphrase::PromptTemplate*> templates;
    if (args.template_name.empty()) {
        for (const auto& t : keyphrase::builtin_templates()) templates.push_back(&t);
    } else if (const auto* t = keyphrase::find_template(args.template_name)) {
        templates.push_back(t);
    } else {
        throw InvalidArgumentError("unknown prompt template " + args.template_name);
    }

    const auto policy = args.skip_failures
                            ? keyphrase::FailurePolicy::SkipAndCount
                            : keyphrase::FailurePolicy::FailFast;
    json results = json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto* tmpl : templates) {
        const auto evaluation = keyphrase::evaluate_template(
            *tmpl, examples, *chat, policy, args.parallelism);
        results.push_back({{"template", tmpl->name},
                           {"mean_ned", evaluation.mean_ned},
                           {"evaluated", evaluation.evaluated},
                           {"skipped", evaluation.skipped}});
        rows.push_back({tmpl->name, fmt(evaluation.mean_ned),
                        std::to_string(evaluation.evaluated),
                        std::to_string(evaluation.skipped)});
    }
    if (common.pretty) {
        pretty_table(out, {"template", "mean NED", "evaluated", "skipped"}, rows);
    } else {
        json doc;
        doc["results"] = results;
        emit(out, doc);
    }
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
    CLI::App app{"Same-period normalized citation impact toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key/value config file (CLI11/TOML format)");

    CommonOptions common;
    app.add_flag("--pretty", common.pretty,
                 "Render human tables instead of JSON");

    ScoreArgs score_args;
    auto* score = app.add_subcommand(
        "score", "Compute TNCSI/TNCSI_SP for one paper against a cohort");
    score->add_option("--title", score_args.title, "Paper title")->required();
    score->add_option("--abstract", score_args.abstract, "Paper abstract");
    score->add_option("--cites", score_args.cites, "Citation count")->required();
    score->add_option("--pub-date", score_args.pub_date,
                      "Publication date YYYY-MM-DD");
    score->add_option("--cohort-file", score_args.cohort_file,
                      "Cohort members JSONL ({id, cites, pub_date})");
    score->add_option("--phrase", score_args.phrase,
                      "Topic phrase for gateway cohort search");
    score->add_option("--kind", score_args.kind, "tncsi_sp or tncsi");
    score->add_option("--half-span-months", score_args.half_span_months,
                      "Same-period window half span");
    score->add_option("--capacity", score_args.capacity, "Cohort capacity");
    add_gateway_options(score, score_args.gateway);

    CohortArgs cohort_args;
    auto* cohort = app.add_subcommand(
        "cohort", "Retrieve and summarize a topic cohort (cached)");
    cohort->add_option("--phrase", cohort_args.phrase, "Topic phrase")->required();
    cohort->add_option("--anchor-date", cohort_args.anchor_date,
                       "Anchor date for a same-period window");
    cohort->add_option("--half-span-months", cohort_args.half_span_months,
                       "Window half span");
    cohort->add_option("--capacity", cohort_args.capacity, "Cohort capacity");
    add_gateway_options(cohort, cohort_args.gateway);

    BuildDatasetArgs build_args;
    auto* build = app.add_subcommand(
        "build-dataset", "Label an arXiv snapshot with impact scores");
    build->add_option("--arxiv-snapshot", build_args.snapshot,
                      "Metadata snapshot (JSONL)")->required();
    build->add_option("--categories", build_args.categories,
                      "arXiv categories to keep")
        ->delimiter(',');
    build->add_option("--from", build_args.from_date, "Earliest upload date");
    build->add_option("--to", build_args.to_date, "Latest upload date");
    build->add_option("--limit", build_args.limit, "Max papers to ingest");
    build->add_option("--out", build_args.out_path, "Output JSONL")->required();
    build->add_option("--template", build_args.template_name,
                      "Key-phrase prompt template");
    build->add_option("--capacity", build_args.capacity, "Cohort capacity");
    build->add_option("--half-span-months", build_args.half_span_months,
                      "Same-period window half span");
    build->add_option("--min-cohort-size", build_args.min_cohort_size,
                      "Reject labels fitted on fewer members");
    build->add_flag("--with-tncsi", build_args.with_tncsi,
                    "Also compute the unwindowed TNCSI label");
    add_gateway_options(build, build_args.gateway);
    add_chat_options(build, build_args.chat);

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand(
        "split", "Partition labeled examples into train/validation/test");
    split_cmd->add_option("--in", split_args.in_path, "Labeled examples JSONL")
        ->required();
    split_cmd->add_option("--out", split_args.out_path, "Dataset JSONL")
        ->required();
    split_cmd->add_option("--seed", split_args.seed, "Shuffle seed");
    split_cmd->add_option("--ratios", split_args.ratios, "Ratios, e.g. 8,1,1");

    TrainArgs train_args;
    auto* train = app.add_subcommand(
        "train-baseline", "Train the native text regressor on a dataset");
    train->add_option("--in", train_args.in_path, "Dataset JSONL with splits")
        ->required();
    train->add_option("--model-out", train_args.model_out, "Model file")
        ->required();
    train->add_option("--loss", train_args.loss, "mse | l1 | smoothl1 | bce");
    train->add_option("--smoothl1-delta", train_args.smoothl1_delta,
                      "Huber transition point");
    train->add_option("--lr", train_args.learning_rate, "Base learning rate");
    train->add_option("--epochs", train_args.epochs, "Training epochs");
    train->add_option("--batch-size", train_args.batch_size, "Mini-batch size");
    train->add_option("--seed", train_args.seed, "Init/shuffle seed");
    train->add_option("--dim", train_args.dim, "Feature dimension");
    train->add_option("--hidden", train_args.hidden, "Hidden width");

    PredictArgs predict_args;
    auto* predict = app.add_subcommand(
        "predict", "Score title/abstract records with a predictor");
    predict->add_option("--in", predict_args.in_path,
                        "Input JSONL ({id, title, abstract, ...})")
        ->required();
    predict->add_option("--out", predict_args.out_path,
                        "Write predictions here (default: stdout)");
    predict->add_option("--model", predict_args.model, "Native model file");
    predict->add_option("--constant", predict_args.constant,
                        "Constant reference predictor value");
    predict->add_flag("--remote", predict_args.remote,
                      "Score through the chat gateway");
    predict->add_flag("--use-extras", predict_args.use_extras,
                      "Feed extras fields into the scoring prompt");
    add_chat_options(predict, predict_args.chat);
    add_gateway_options(predict, predict_args.gateway);

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand(
        "evaluate", "MAE and NDCG@k over truth/prediction records");
    evaluate->add_option("--in", evaluate_args.in_path,
                         "JSONL with {id, truth, predicted}")
        ->required();
    evaluate->add_option("--k", evaluate_args.k, "NDCG cutoff");

    JournalReportArgs journal_args;
    auto* journal = app.add_subcommand(
        "journal-report", "Top-fraction means per group of predictions");
    journal->add_option("--in", journal_args.in_path, "JSONL with {group, score}")
        ->required();
    journal->add_option("--fractions", journal_args.fractions,
                        "Comma-separated top fractions");

    EvalPromptsArgs prompts_args;
    auto* prompts = app.add_subcommand(
        "eval-prompts", "Mean NED of key-phrase templates on annotated examples");
    prompts->add_option("--in", prompts_args.in_path,
                        "JSONL with {title, abstract, gold_phrase}")
        ->required();
    prompts->add_option("--template", prompts_args.template_name,
                        "Single template name (default: all built-ins)");
    prompts->add_flag("--skip-failures", prompts_args.skip_failures,
                      "Skip and count per-example gateway failures");
    prompts->add_option("--parallelism", prompts_args.parallelism,
                        "Extraction fan-out");
    add_chat_options(prompts, prompts_args.chat);
    add_gateway_options(prompts, prompts_args.gateway);

    // Let global flags (--pretty, --config) appear after the subcommand too.
    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        sub->fallthrough();
    }

    std::vector<std::string> argv_storage;
    argv_storage.reserve(args.size() + 1);
    argv_storage.push_back("impactkit");
    for (const auto& a : args) argv_storage.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(argv_storage.size());
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (score->parsed()) return cmd_score(score_args, common, out, err);
        if (cohort->parsed()) return cmd_cohort(cohort_args, common, out, err);
        if (build->parsed()) return cmd_build_dataset(build_args, common, out, err);
        if (split_cmd->parsed()) return cmd_split(split_args, common, out, err);
        if (train->parsed()) return cmd_train(train_args, common, out, err);
        if (predict->parsed()) return cmd_predict(predict_args, common, out, err);
        if (evaluate->parsed()) return cmd_evaluate(evaluate_args, common, out, err);
        if (journal->parsed()) {
            return cmd_journal_report(journal_args, common, out, err);
        }
        if (prompts->parsed()) return cmd_eval_prompts(prompts_args, common, out, err);
        err << app.help();
        return 2;
    } catch (const Error& e) {
        err << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}

}  // namespace impactkit::cli
