#include <doctest.h>

#include <fstream>
#include <map>

#include "impactkit/dataset_builder.hpp"
#include "impactkit/errors.hpp"
#include "impactkit/rng.hpp"
#include "scenario_server.hpp"
#include "test_helpers.hpp"

using namespace impactkit;
using namespace impactkit::dataset;
using testutil::ScenarioServer;
using nlohmann::json;

namespace {

std::vector<metrics::CohortMember> synthetic_members(const std::string& prefix,
                                                     std::size_t n, Date around,
                                                     std::uint64_t cite_seed,
                                                     bool all_zero = false) {
    SplitMix64 rng(cite_seed);
    std::vector<metrics::CohortMember> members;
    for (std::size_t i = 0; i < n; ++i) {
        metrics::CohortMember m;
        m.paper_id = prefix + "-" + std::to_string(i);
        m.citation_count = all_zero ? 0 : rng.next_below(120);
        // Spread dates a few weeks around the anchor, inside any 6-month window.
        const int offset_days = int(rng.next_below(120)) - 60;
        m.publication_date = Date(std::chrono::sys_days(around) +
                                  std::chrono::days(offset_days));
        members.push_back(std::move(m));
    }
    return members;
}

PaperRecord make_paper(const std::string& id, std::uint64_t cites,
                       std::optional<Date> date) {
    PaperRecord p;
    p.paper_id = id;
    p.title = "Title of " + id;
    p.abstract = "Abstract of " + id;
    p.citation_count = cites;
    p.publication_date = date;
    return p;
}

LabeledExample make_example(const std::string& id, double label) {
    LabeledExample ex;
    ex.paper = make_paper(id, 10, make_date(2021, 1, 1));
    ex.tncsi_sp = label;
    ex.cohort_meta.fit = metrics::ExponentialFit{0.1, 10.0, 100};
    ex.cohort_meta.cohort_size = 100;
    return ex;
}

}  // namespace

TEST_CASE("label_papers composes keyphrase, cohort search, and scoring") {
    const Date d1 = make_date(2021, 6, 17);
    const Date d2 = make_date(2020, 3, 5);
    const Date d3 = make_date(2022, 1, 31);

    std::map<std::string, std::vector<metrics::CohortMember>> corpora;
    corpora["topic alpha"] = synthetic_members("a", 40, d1, 101);
    corpora["topic beta"] = synthetic_members("b", 35, d2, 202);
    corpora["topic gamma"] = synthetic_members("c", 50, d3, 303);
    corpora["topic zero"] = synthetic_members("z", 40, d1, 404, /*all_zero=*/true);
    corpora["topic tiny"] = synthetic_members("t", 10, d1, 505);
    ScenarioServer server(corpora);

    const std::vector<PaperRecord> papers{
        make_paper("p1", 80, d1),          make_paper("p2", 3, d2),
        make_paper("p3", 500, d3),         make_paper("p4", 9, d1),   // zero cohort
        make_paper("p5", 9, d1),                                      // tiny cohort
        make_paper("p6", 9, std::nullopt),                            // no date
    };

    ScriptedChatGateway chat({"Topic Alpha.", "topic beta", "Topic Gamma",
                              "topic zero", "topic tiny"});
    scholar::ScholarGateway gateway(server.config(testutil::scratch_dir("label")));

    LabelConfig config;
    config.min_cohort_size = 30;
    const auto outcome = dataset::label_papers(papers, gateway, chat, config);

    REQUIRE(outcome.examples.size() == 3);
    REQUIRE(outcome.failures.size() == 3);

    // Labels must equal the standalone metric over the same member lists.
    const auto expected_label = [&](const PaperRecord& paper,
                                    const std::string& phrase) {
        metrics::Cohort cohort;
        cohort.window = metrics::same_period_window(*paper.publication_date, 6);
        for (const auto& m : corpora[phrase]) {
            if (m.publication_date && cohort.window->contains(*m.publication_date)) {
                cohort.members.push_back(m);
            }
        }
        return metrics::score_paper(paper, cohort, metrics::ImpactKind::TNCSI_SP);
    };
    const auto e1 = expected_label(papers[0], "topic alpha");
    CHECK(outcome.examples[0].paper.paper_id == "p1");
    CHECK(outcome.examples[0].tncsi_sp == e1.value);
    CHECK(outcome.examples[0].cohort_meta.fit == e1.fit);
    CHECK(outcome.examples[0].cohort_meta.cohort_size == e1.cohort_size);
    CHECK(outcome.examples[1].tncsi_sp == expected_label(papers[1], "topic beta").value);
    CHECK(outcome.examples[2].tncsi_sp ==
          expected_label(papers[2], "topic gamma").value);
    CHECK_FALSE(outcome.examples[0].tncsi.has_value());  // not requested

    // Failures carry stable reason codes and preserve input order.
    CHECK(outcome.failures[0].paper_id == "p4");
    CHECK(outcome.failures[0].reason.find("DegenerateCohort") != std::string::npos);
    CHECK(outcome.failures[1].paper_id == "p5");
    CHECK(outcome.failures[1].reason.find("cohort_too_small") != std::string::npos);
    CHECK(outcome.failures[2].paper_id == "p6");
    CHECK(outcome.failures[2].reason == "missing_publication_date");

    CHECK_THROWS_AS(dataset::label_papers({}, gateway, chat, config),
                    InvalidArgumentError);
}

TEST_CASE("label_papers throws AllFailed when nothing labels") {
    ScenarioServer server({});
    ScriptedChatGateway chat({"anything"});
    scholar::ScholarGateway gateway(
        server.config(testutil::scratch_dir("allfail")));
    const std::vector<PaperRecord> papers{make_paper("p1", 5, std::nullopt)};
    CHECK_THROWS_AS(dataset::label_papers(papers, gateway, chat, LabelConfig{}),
                    AllFailedError);
}

TEST_CASE("stratify_uniform balances bins under supply limits") {
    SplitMix64 rng(66);
    std::vector<LabeledExample> uniform;
    for (int i = 0; i < 1000; ++i) {
        uniform.push_back(make_example("u" + std::to_string(i),
                                       (i + 0.5) / 1000.0));
    }
    const auto balanced = stratify_uniform(uniform, 10, 50, 7);
    CHECK(balanced.size() == 500);
    std::vector<std::size_t> histogram(10, 0);
    for (const auto& ex : balanced) {
        ++histogram[std::min<std::size_t>(9, std::size_t(ex.tncsi_sp * 10))];
    }
    for (const auto count : histogram) CHECK(count == 50);

    // Degenerate supply: one populated bin.
    std::vector<LabeledExample> spiked;
    for (int i = 0; i < 400; ++i) {
        spiked.push_back(make_example("s" + std::to_string(i), 0.99));
    }
    std::size_t warnings = 0;
    const auto one_bin = stratify_uniform(spiked, 10, 50, 7,
                                          [&](const std::string&) { ++warnings; });
    CHECK(one_bin.size() == 50);
    CHECK(warnings == 9);  // every other bin under-populated

    // Skewed supply flattens within limits.
    std::vector<LabeledExample> skewed;
    SplitMix64 skew_rng(9);
    for (int i = 0; i < 3000; ++i) {
        const double u = skew_rng.next_double();
        skewed.push_back(make_example("k" + std::to_string(i), u * u));
    }
    const auto flattened = stratify_uniform(skewed, 10, 40, 7);
    std::vector<std::size_t> flat_histogram(10, 0);
    for (const auto& ex : flattened) {
        ++flat_histogram[std::min<std::size_t>(9, std::size_t(ex.tncsi_sp * 10))];
    }
    for (std::size_t b = 0; b < 10; ++b) {
        std::size_t supply = 0;
        for (const auto& ex : skewed) {
            const auto bin = std::min<std::size_t>(9, std::size_t(ex.tncsi_sp * 10));
            if (bin == b) ++supply;
        }
        CHECK(flat_histogram[b] == std::min<std::size_t>(40, supply));
    }

    // Duplicates never pass through.
    std::vector<LabeledExample> dupes{make_example("d", 0.5),
                                      make_example("d", 0.6),
                                      make_example("e", 0.7)};
    const auto unique = stratify_uniform(dupes, 2, 10, 1);
    CHECK(unique.size() == 2);

    // Determinism.
    const auto again = stratify_uniform(skewed, 10, 40, 7);
    CHECK(again.size() == flattened.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].paper.paper_id == flattened[i].paper.paper_id);
    }
    CHECK_THROWS_AS(stratify_uniform(uniform, 1, 10, 0), InvalidArgumentError);
}

TEST_CASE("split honors 8:1:1 with floor-to-train rounding") {
    std::vector<LabeledExample> examples;
    for (int i = 0; i < 12000; ++i) {
        examples.push_back(make_example("e" + std::to_string(i), 0.5));
    }
    const auto s = dataset::split(examples, {8, 1, 1}, 17);
    CHECK(s.train.size() == 9600);
    CHECK(s.validation.size() == 1200);
    CHECK(s.test.size() == 1200);

    std::vector<LabeledExample> ten(examples.begin(), examples.begin() + 10);
    const auto minimal = dataset::split(ten, {8, 1, 1}, 17);
    CHECK(minimal.train.size() == 8);
    CHECK(minimal.validation.size() == 1);
    CHECK(minimal.test.size() == 1);

    std::vector<LabeledExample> nine(examples.begin(), examples.begin() + 9);
    CHECK_THROWS_AS(dataset::split(nine, {8, 1, 1}, 17), TooFewExamplesError);
}

TEST_CASE("split is deterministic, disjoint, and covering") {
    SplitMix64 rng(5);
    for (const std::size_t n : {10ull, 11ull, 97ull, 1000ull}) {
        std::vector<LabeledExample> examples;
        for (std::size_t i = 0; i < n; ++i) {
            examples.push_back(
                make_example("x" + std::to_string(i), rng.next_double()));
        }
        const auto a = dataset::split(examples, {8, 1, 1}, 99);
        const auto b = dataset::split(examples, {8, 1, 1}, 99);

        const auto ids = [](const DatasetSplit& s) {
            std::vector<std::string> out;
            for (const auto& e : s.train) out.push_back(e.paper.paper_id);
            for (const auto& e : s.validation) out.push_back(e.paper.paper_id);
            for (const auto& e : s.test) out.push_back(e.paper.paper_id);
            return out;
        };
        CHECK(ids(a) == ids(b));  // same seed, same membership

        auto all = ids(a);
        CHECK(all.size() == n);  // coverage
        std::sort(all.begin(), all.end());
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());  // disjoint

        const auto c = dataset::split(examples, {8, 1, 1}, 100);
        if (n >= 97) CHECK(ids(a) != ids(c));  // another seed reshuffles
    }
}

TEST_CASE("dataset file round trip preserves every field") {
    SplitMix64 rng(3);
    std::vector<LabeledExample> examples;
    for (int i = 0; i < 100; ++i) {
        auto ex = make_example("rt" + std::to_string(i), rng.next_double());
        ex.paper.arxiv_id = "2101.0" + std::to_string(1000 + i);
        ex.paper.categories = {"cs.CV", "cs.LG"};
        if (i % 2 == 0) ex.tncsi = rng.next_double();
        if (i % 3 == 0) {
            ExtrasRecord extras;
            extras.sota_claim = (i % 2 == 0);
            extras.released_dataset = true;
            extras.open_access_code = false;
            extras.rqm = rng.next_double();
            ex.paper.extras = extras;
        }
        if (i % 5 == 0) ex.paper.publication_date.reset();
        examples.push_back(std::move(ex));
    }

    const auto dir = testutil::scratch_dir("roundtrip");
    const auto examples_path = dir / "examples.jsonl";
    write_examples(examples, examples_path);
    const auto back = read_examples(examples_path);
    REQUIRE(back.size() == examples.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == examples[i]);

    const auto split_path = dir / "dataset.jsonl";
    const auto s = dataset::split(examples, {8, 1, 1}, 4);
    write_dataset(s, split_path);
    const auto s2 = read_dataset(split_path);
    CHECK(s2.train == s.train);
    CHECK(s2.validation == s.validation);
    CHECK(s2.test == s.test);
}

TEST_CASE("reader rejects malformed and alien records by line number") {
    const auto dir = testutil::scratch_dir("badfile");
    const auto path = dir / "bad.jsonl";

    const auto expect_schema_error = [&](const std::string& line,
                                         const std::string& needle) {
        {
            std::ofstream out(path, std::ios::trunc);
            out << example_to_json(make_example("ok", 0.5)).dump() << "\n";
            out << line << "\n";
        }
        try {
            read_examples(path);
            FAIL_CHECK("expected SchemaViolation for: " << line);
        } catch (const SchemaViolationError& e) {
            const std::string what = e.what();
            CHECK(what.find("line 2") != std::string::npos);
            CHECK(what.find(needle) != std::string::npos);
        }
    };

    expect_schema_error("{ not json", "not valid JSON");
    expect_schema_error(R"({"id":"x","abstract":"a","cites":1,"tncsi_sp":0.5,"schema_version":1})",
                        "title");
    json unknown = example_to_json(make_example("y", 0.5));
    unknown["venue"] = "nowhere";
    expect_schema_error(unknown.dump(), "unknown field");
    json bad_label = example_to_json(make_example("z", 0.5));
    bad_label["tncsi_sp"] = 1.5;
    expect_schema_error(bad_label.dump(), "tncsi_sp");

    // Dataset reads also require a valid split value.
    {
        std::ofstream out(path, std::ios::trunc);
        auto rec = example_to_json(make_example("w", 0.5), "train");
        out << rec.dump() << "\n";
        rec["split"] = "holdout";
        out << rec.dump() << "\n";
    }
    CHECK_THROWS_AS(read_dataset(path), SchemaViolationError);
}

TEST_CASE("a preview-shaped minimal record parses") {
    const auto dir = testutil::scratch_dir("preview");
    const auto path = dir / "naid.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":"lora","title":"LoRA: Low-Rank Adaptation of Large Language Models","abstract":"An important paradigm of natural language processing...","cites":4421,"tncsi_sp":1.0,"schema_version":1})"
            << "\n";
    }
    const auto rows = read_examples(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].paper.citation_count == 4421);
    CHECK(rows[0].tncsi_sp == 1.0);
    CHECK_FALSE(rows[0].tncsi.has_value());
    CHECK_FALSE(rows[0].paper.publication_date.has_value());
}
