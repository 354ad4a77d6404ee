// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Everything here is seeded and deterministic; expected values come from
// the independent oracles in tests/oracles.hpp or from closed forms.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "impactkit/core_metrics.hpp"
#include "impactkit/dataset_builder.hpp"
#include "impactkit/journal_report.hpp"
#include "impactkit/keyphrase.hpp"
#include "impactkit/predictor.hpp"
#include "impactkit/ranking_eval.hpp"
#include "impactkit/rng.hpp"
#include "../oracles.hpp"

using namespace impactkit;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Criterion = std::function<Outcome()>;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::uint64_t rounded_exponential(SplitMix64& rng, double rate) {
    const double u = rng.next_double();
    return std::uint64_t(std::llround(-std::log(1.0 - u) / rate));
}

std::filesystem::path data_dir() {
    return std::filesystem::path(IMPACTKIT_TEST_DATA_DIR);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string golden(const std::string& name) {
    std::string text = read_file(data_dir() / "golden" / name);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

// --------------------------------------------------------------------------
// 1. Exponential MLE recovery
// --------------------------------------------------------------------------
Outcome mle_recovery() {
    const auto start = std::chrono::steady_clock::now();
    constexpr double kRate = 0.2;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SplitMix64 rng(seed);
        std::vector<std::uint64_t> sample;
        sample.reserve(1000);
        for (int i = 0; i < 1000; ++i) {
            sample.push_back(rounded_exponential(rng, kRate));
        }
        const double fitted = metrics::fit_exponential(sample).lambda;
        worst = std::max(worst, std::fabs(fitted - kRate) / kRate);
    }
    const double elapsed = seconds_since(start);
    const bool pass = worst <= 0.10 && elapsed < 1.0;
    return {pass, "max rel deviation " + fmt("%.3f", worst) + " over 20 trials, " +
                      fmt("%.2f", elapsed) + " s"};
}

// --------------------------------------------------------------------------
// 2. TNCSI_SP approximates the empirical quantile
// --------------------------------------------------------------------------
Outcome quantile_match() {
    const auto start = std::chrono::steady_clock::now();
    constexpr double kRate = 0.02;
    SplitMix64 rng(424242);
    const Date anchor = make_date(2021, 6, 15);
    metrics::Cohort cohort;
    cohort.topic_phrase = "synthetic";
    cohort.window = metrics::same_period_window(anchor, 6);
    cohort.capacity = 10000;
    std::vector<std::uint64_t> cites;
    for (int i = 0; i < 10000; ++i) {
        const auto c = rounded_exponential(rng, kRate);
        cites.push_back(c);
        cohort.members.push_back(
            {"m" + std::to_string(i), c,
             Date(std::chrono::sys_days(anchor) +
                  std::chrono::days(int(rng.next_below(300)) - 150))});
    }
    std::sort(cites.begin(), cites.end());

    PaperRecord paper;
    paper.paper_id = "probe";
    paper.title = "Probe";
    paper.publication_date = anchor;

    double worst = 0.0;
    for (int tenth = 1; tenth <= 9; ++tenth) {
        const double q = tenth / 10.0;
        paper.citation_count =
            cites[std::size_t(std::ceil(q * 10000.0)) - 1];
        const auto score =
            metrics::score_paper(paper, cohort, metrics::ImpactKind::TNCSI_SP);
        worst = std::max(worst, std::fabs(score.value - q));
    }
    const double elapsed = seconds_since(start);
    const bool pass = worst <= 0.05 && elapsed < 5.0;
    return {pass, "max |score - q| " + fmt("%.4f", worst) + " for q in 0.1..0.9, " +
                      fmt("%.2f", elapsed) + " s"};
}

// --------------------------------------------------------------------------
// 3. NDCG equals the permutation-enumeration oracle
// --------------------------------------------------------------------------
Outcome ndcg_brute_force() {
    SplitMix64 rng(7001);
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t n = 1; n <= 7; ++n) {
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<eval::Prediction> pairs;
            for (std::size_t i = 0; i < n; ++i) {
                pairs.push_back({"i" + std::to_string(i),
                                 double(rng.next_below(5)) / 4.0,
                                 double(rng.next_below(5)) / 4.0});
            }
            const std::size_t k = 1 + rng.next_below(n + 2);
            const double got = eval::ndcg_at_k(pairs, k);
            const double want = oracle::ndcg_brute_force(pairs, k);
            worst = std::max(worst, std::fabs(got - want));
            ++checked;
        }
    }
    return {worst <= 1e-12, "max |ndcg - oracle| " + fmt("%.2e", worst) + " over " +
                                std::to_string(checked) + " sets (n <= 7)"};
}

// --------------------------------------------------------------------------
// 4. Edit distance equals the naive recursion; NED symmetry and bounds
// --------------------------------------------------------------------------
Outcome edit_distance_oracle() {
    SplitMix64 rng(8002);
    const auto random_string = [&](std::size_t max_len) {
        const std::size_t len = rng.next_below(max_len + 1);
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            s.push_back(char('a' + rng.next_below(4)));
        }
        return s;
    };

    std::size_t mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::string a = random_string(8);
        const std::string b = random_string(8);
        if (eval::edit_distance(a, b) != oracle::edit_distance_naive(a, b)) {
            ++mismatches;
        }
    }
    std::size_t violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::string a = random_string(12);
        const std::string b = random_string(12);
        const double d = eval::ned(a, b);
        if (d != eval::ned(b, a) || d < 0.0 || d > 1.0) ++violations;
    }
    return {mismatches == 0 && violations == 0,
            std::to_string(mismatches) + " oracle mismatches / 500 pairs, " +
                std::to_string(violations) + " NED violations / 10000 pairs"};
}

// --------------------------------------------------------------------------
// 5. Analytic gradients vs central finite differences for all four losses
// --------------------------------------------------------------------------
Outcome gradient_checks() {
    SplitMix64 rng(9003);
    double worst = 0.0;
    for (const auto kind :
         {predictor::LossKind::MSE, predictor::LossKind::L1,
          predictor::LossKind::SmoothL1, predictor::LossKind::BCE}) {
        predictor::TrainConfig cfg;
        cfg.loss_kind = kind;
        cfg.input_dim = 6;
        cfg.hidden_dim = 4;
        for (int point = 0; point < 100; ++point) {
            auto params = predictor::init_params(6, 4, rng.next());
            for (auto& b : params.b1) b = rng.next_symmetric(0.3);
            params.b2 = rng.next_symmetric(0.3);
            predictor::TrainExample example;
            example.features.values.resize(6);
            for (auto& v : example.features.values) v = rng.next_symmetric(1.0);
            // Stay away from the |p - t| = 0 kink of L1/SmoothL1.
            const double p = predictor::forward(example.features, params);
            example.target = p > 0.5 ? p - 0.3 : p + 0.3;
            worst = std::max(worst,
                             predictor::gradient_check(params, example, cfg));
        }
    }
    return {worst <= 1e-4,
            "max relative error " + fmt("%.2e", worst) + " over 4 losses x 100 points"};
}

// --------------------------------------------------------------------------
// 6. Baseline trainer sanity at the stated defaults (5 epochs, lr 5e-5)
// --------------------------------------------------------------------------
Outcome trainer_sanity() {
    const auto start = std::chrono::steady_clock::now();
    constexpr std::size_t kDim = 16;
    constexpr std::size_t kHidden = 8;
    SplitMix64 rng(606060);
    std::vector<double> w(kDim);
    for (auto& v : w) v = rng.next_symmetric(1.5);

    const auto make_set = [&](std::size_t n) {
        std::vector<predictor::TrainExample> set;
        set.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            predictor::TrainExample ex;
            ex.features.values.resize(kDim);
            double dot = 0.0;
            for (std::size_t j = 0; j < kDim; ++j) {
                ex.features.values[j] = rng.next_symmetric(1.0);
                dot += w[j] * ex.features.values[j];
            }
            ex.target = 1.0 / (1.0 + std::exp(-dot));
            set.push_back(std::move(ex));
        }
        return set;
    };
    const auto train = make_set(400000);
    const auto validation = make_set(2000);
    const auto held_out = make_set(2000);

    predictor::TrainConfig cfg;
    cfg.loss_kind = predictor::LossKind::MSE;
    cfg.learning_rate = 5e-5;
    cfg.epochs = 5;
    cfg.batch_size = 256;
    cfg.seed = 11;
    cfg.input_dim = kDim;
    cfg.hidden_dim = kHidden;

    const auto result = predictor::train_baseline(train, validation, cfg);

    double mae_sum = 0.0;
    std::vector<eval::Prediction> predictions;
    predictions.reserve(held_out.size());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
        const double p = predictor::forward(held_out[i].features, result.params);
        mae_sum += std::fabs(p - held_out[i].target);
        predictions.push_back({"h" + std::to_string(i), held_out[i].target, p});
    }
    const double mae = mae_sum / double(held_out.size());
    const double ndcg = eval::ndcg_at_k(predictions, 20);
    const double elapsed = seconds_since(start);
    const bool pass = mae <= 0.05 && ndcg >= 0.95 && elapsed < 60.0;
    return {pass, "held-out MAE " + fmt("%.4f", mae) + ", NDCG@20 " +
                      fmt("%.4f", ndcg) + ", " + fmt("%.1f", elapsed) + " s"};
}

// --------------------------------------------------------------------------
// 7. Split contract on 12,000 examples
// --------------------------------------------------------------------------
Outcome split_contract() {
    SplitMix64 rng(121212);
    std::vector<dataset::LabeledExample> examples;
    examples.reserve(12000);
    for (int i = 0; i < 12000; ++i) {
        dataset::LabeledExample ex;
        ex.paper.paper_id = "n" + std::to_string(i);
        ex.paper.title = "Paper " + std::to_string(i);
        ex.paper.abstract = "Abstract " + std::to_string(i);
        ex.tncsi_sp = rng.next_double();
        examples.push_back(std::move(ex));
    }
    const auto a = dataset::split(examples, {8, 1, 1}, 99);
    const auto b = dataset::split(examples, {8, 1, 1}, 99);

    const bool sizes = a.train.size() == 9600 && a.validation.size() == 1200 &&
                       a.test.size() == 1200;

    std::vector<std::string> ids;
    for (const auto& e : a.train) ids.push_back(e.paper.paper_id);
    for (const auto& e : a.validation) ids.push_back(e.paper.paper_id);
    for (const auto& e : a.test) ids.push_back(e.paper.paper_id);
    const bool covers = ids.size() == 12000;
    std::sort(ids.begin(), ids.end());
    const bool disjoint = std::adjacent_find(ids.begin(), ids.end()) == ids.end();

    const auto same = [](const std::vector<dataset::LabeledExample>& x,
                         const std::vector<dataset::LabeledExample>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].paper.paper_id != y[i].paper.paper_id) return false;
        }
        return true;
    };
    const bool reproducible = same(a.train, b.train) &&
                              same(a.validation, b.validation) &&
                              same(a.test, b.test);

    return {sizes && covers && disjoint && reproducible,
            std::to_string(a.train.size()) + "/" +
                std::to_string(a.validation.size()) + "/" +
                std::to_string(a.test.size()) +
                (disjoint ? ", disjoint" : ", OVERLAP") +
                (reproducible ? ", seed-reproducible" : ", NON-DETERMINISTIC")};
}

// --------------------------------------------------------------------------
// 8. Prompt golden files, byte for byte
// --------------------------------------------------------------------------
Outcome prompt_goldens() {
    std::vector<std::string> failures;

    if (predictor::render_scoring_prompt("T", "A") !=
        golden("scoring_prompt_basic.txt")) {
        failures.push_back("scoring basic");
    }
    ExtrasRecord extras;
    extras.sota_claim = true;
    extras.released_dataset = true;
    extras.open_access_code = false;
    extras.rqm = 0.7;
    if (predictor::render_scoring_prompt("T", "A", extras) !=
        golden("scoring_prompt_extras.txt")) {
        failures.push_back("scoring extras");
    }

    const auto templates = keyphrase::builtin_templates();
    const char* names[] = {"keyphrase_template_research_field.txt",
                           "keyphrase_template_main_area.txt",
                           "keyphrase_template_application_technology.txt"};
    for (std::size_t i = 0; i < templates.size(); ++i) {
        if (templates[i].body != golden(names[i])) {
            failures.push_back(templates[i].name);
        }
    }
    if (keyphrase::render_keyphrase_prompt(
            keyphrase::default_template(),
            "Oracle-MNIST: a Dataset of Oracle Characters for Benchmarking "
            "Machine Learning Algorithms",
            "We introduce a benchmark of ancient character images for machine "
            "learning research.") != golden("keyphrase_prompt_oracle_mnist.txt")) {
        failures.push_back("keyphrase render");
    }

    if (failures.empty()) {
        return {true, "6 golden comparisons, all byte-identical"};
    }
    std::string detail = "mismatch:";
    for (const auto& f : failures) detail += " " + f;
    return {false, detail};
}

// --------------------------------------------------------------------------
// 9. Journal-report ordering over stochastically ordered groups
// --------------------------------------------------------------------------
Outcome journal_ordering() {
    int ordered_trials = 0;
    for (std::uint64_t trial = 1; trial <= 100; ++trial) {
        SplitMix64 rng(900000 + trial);
        std::map<std::string, std::vector<double>> groups;
        const std::vector<std::pair<std::string, double>> centers{
            {"Q1", 0.80}, {"Q2", 0.60}, {"Q3", 0.40}, {"Q4", 0.20}};
        for (const auto& [label, center] : centers) {
            auto& scores = groups[label];
            for (int i = 0; i < 200; ++i) {
                const double bell = (rng.next_double() + rng.next_double() +
                                     rng.next_double()) /
                                    3.0;
                scores.push_back(
                    std::clamp(center + (bell - 0.5) * 0.16, 0.0, 1.0));
            }
        }
        const auto report = report::journal_report(groups);
        bool ordered = true;
        for (std::size_t g = 1; g < report.groups.size(); ++g) {
            if (!(report.groups[g - 1].top_fraction_means[0] >
                  report.groups[g].top_fraction_means[0])) {
                ordered = false;
            }
        }
        if (ordered) ++ordered_trials;
    }
    return {ordered_trials == 100,
            std::to_string(ordered_trials) + "/100 trials strictly ordered"};
}

// --------------------------------------------------------------------------
// 10. End-to-end fixture run through the installed CLI binary
// --------------------------------------------------------------------------
Outcome end_to_end_cli() {
    const std::filesystem::path cli = IMPACTKIT_CLI_PATH;
    const auto work = std::filesystem::temp_directory_path() / "impactkit-accept";
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    const auto run_cli = [&](const std::string& args,
                             const std::filesystem::path& stdout_file) {
        const std::string cmd = "'" + cli.string() + "' " + args + " > '" +
                                stdout_file.string() + "' 2> '" +
                                (work / "stderr.txt").string() + "'";
        return std::system(cmd.c_str());
    };

    // score: the CLI value must equal the standalone library value exactly.
    const auto fixture = data_dir() / "fixtures" / "cohort_small.jsonl";
    const auto score_out = work / "score.json";
    if (run_cli("score --title Probe --cites 42 --pub-date 2021-06-17 "
                "--cohort-file '" + fixture.string() + "'",
                score_out) != 0) {
        return {false, "score subcommand exited nonzero"};
    }
    const json score_doc = json::parse(read_file(score_out), nullptr, false);
    if (score_doc.is_discarded()) return {false, "score emitted invalid JSON"};

    PaperRecord paper;
    paper.paper_id = "probe";
    paper.title = "Probe";
    paper.citation_count = 42;
    paper.publication_date = make_date(2021, 6, 17);
    metrics::Cohort cohort;
    cohort.window = metrics::same_period_window(*paper.publication_date, 6);
    {
        std::ifstream in(fixture);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json rec = json::parse(line);
            metrics::CohortMember m;
            m.paper_id = rec["id"];
            m.citation_count = rec["cites"];
            if (rec["pub_date"].is_string()) {
                m.publication_date = parse_date(rec["pub_date"].get<std::string>());
            }
            if (m.publication_date &&
                cohort.window->contains(*m.publication_date)) {
                cohort.members.push_back(std::move(m));
            }
        }
    }
    const auto expected =
        metrics::score_paper(paper, cohort, metrics::ImpactKind::TNCSI_SP);
    if (score_doc["value"].get<double>() != expected.value) {
        return {false, "score value " + score_doc["value"].dump() +
                           " != library value " + json(expected.value).dump()};
    }

    // evaluate: constant-0.5 predictions against an independent recomputation.
    SplitMix64 rng(5150);
    std::vector<eval::Prediction> pairs;
    const auto eval_in = work / "preds.jsonl";
    {
        std::ofstream out(eval_in);
        for (int i = 0; i < 100; ++i) {
            eval::Prediction p{"p" + std::to_string(i), rng.next_double(), 0.5};
            pairs.push_back(p);
            out << json{{"id", p.item_id},
                        {"truth", p.truth},
                        {"predicted", p.predicted}}
                       .dump()
                << "\n";
        }
    }
    const auto eval_out = work / "eval.json";
    if (run_cli("evaluate --in '" + eval_in.string() + "' --k 20", eval_out) != 0) {
        return {false, "evaluate subcommand exited nonzero"};
    }
    const json eval_doc = json::parse(read_file(eval_out), nullptr, false);
    if (eval_doc.is_discarded()) return {false, "evaluate emitted invalid JSON"};

    const double mae_diff =
        std::fabs(eval_doc["mae"].get<double>() - oracle::mae_reference(pairs));
    const double ndcg_diff = std::fabs(eval_doc["ndcg_at_k"].get<double>() -
                                       oracle::ndcg_reference(pairs, 20));
    if (mae_diff > 1e-12 || ndcg_diff > 1e-12) {
        return {false, "evaluate drifted from recomputation: mae diff " +
                           fmt("%.2e", mae_diff) + ", ndcg diff " +
                           fmt("%.2e", ndcg_diff)};
    }
    return {true, "score exact match; evaluate within 1e-12 of recomputation"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, Criterion>> criteria = {
        {"exponential-mle-recovery", mle_recovery},
        {"tncsi-sp-quantile-match", quantile_match},
        {"ndcg-brute-force-equivalence", ndcg_brute_force},
        {"edit-distance-oracle", edit_distance_oracle},
        {"gradient-checks-all-losses", gradient_checks},
        {"baseline-trainer-sanity", trainer_sanity},
        {"split-contract-8-1-1", split_contract},
        {"prompt-golden-files", prompt_goldens},
        {"journal-report-ordering", journal_ordering},
        {"end-to-end-cli-fixtures", end_to_end_cli},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        if (!outcome.pass) ++failures;
        std::printf("[%2zu/%zu] %s  %-32s %s\n", i + 1, criteria.size(),
                    outcome.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                    outcome.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n",
                criteria.size() - std::size_t(failures), criteria.size());
    return failures == 0 ? 0 : 1;
}
