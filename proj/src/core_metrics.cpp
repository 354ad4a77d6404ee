#include "impactkit/core_metrics.hpp"

#include <cmath>
#include <unordered_set>

#include "impactkit/errors.hpp"

namespace impactkit::metrics {

const char* to_string(ImpactKind kind) {
    return kind == ImpactKind::TNCSI ? "tncsi" : "tncsi_sp";
}

std::optional<ImpactKind> impact_kind_from_string(std::string_view name) {
    if (name == "tncsi") return ImpactKind::TNCSI;
    if (name == "tncsi_sp") return ImpactKind::TNCSI_SP;
    return std::nullopt;
}

std::vector<CohortMember> dedupe_members(std::span<const CohortMember> members) {
    std::vector<CohortMember> out;
    out.reserve(members.size());
    std::unordered_set<std::string> seen;
    for (const auto& m : members) {
        if (seen.insert(m.paper_id).second) out.push_back(m);
    }
    return out;
}

void validate_cohort(const Cohort& cohort) {
    if (cohort.members.empty()) {
        throw InvalidArgumentError("cohort has no members");
    }
    if (cohort.capacity == 0 || cohort.members.size() > cohort.capacity) {
        throw InvalidArgumentError(
            "cohort holds " + std::to_string(cohort.members.size()) +
            " members, capacity is " + std::to_string(cohort.capacity));
    }
    std::unordered_set<std::string> seen;
    for (const auto& m : cohort.members) {
        if (!seen.insert(m.paper_id).second) {
            throw InvalidArgumentError("duplicate cohort member " + m.paper_id);
        }
        if (cohort.window) {
            if (!m.publication_date) {
                throw InvalidArgumentError("windowed cohort member " +
                                           m.paper_id + " has no date");
            }
            if (!cohort.window->contains(*m.publication_date)) {
                throw InvalidArgumentError(
                    "cohort member " + m.paper_id + " dated " +
                    format_date(*m.publication_date) + " falls outside window");
            }
        }
    }
}

DateWindow same_period_window(const Date& anchor, int half_span_months) {
    if (!anchor.ok()) throw InvalidArgumentError("invalid anchor date");
    if (half_span_months < 0) {
        throw InvalidArgumentError("half span must be nonnegative");
    }
    return DateWindow{add_calendar_months(anchor, -half_span_months),
                      add_calendar_months(anchor, half_span_months)};
}

DiscreteCitationDistribution empirical_distribution(const Cohort& cohort) {
    if (cohort.members.empty()) {
        throw EmptyCohortError("cannot build a citation distribution from an "
                               "empty cohort");
    }
    DiscreteCitationDistribution dist;
    for (const auto& m : cohort.members) ++dist.counts[m.citation_count];
    dist.total = cohort.members.size();
    return dist;
}

ExponentialFit fit_exponential(std::span<const std::uint64_t> citation_counts) {
    if (citation_counts.empty()) {
        throw InvalidArgumentError("cannot fit an empty citation sample");
    }
    double sum = 0.0;
    for (const auto c : citation_counts) sum += double(c);
    const double mean = sum / double(citation_counts.size());
    if (mean == 0.0) {
        throw DegenerateCohortError(
            "all citation counts are zero; exponential rate is undefined");
    }
    return ExponentialFit{1.0 / mean, mean, citation_counts.size()};
}

double tncsi_sp_value(std::uint64_t cites, const ExponentialFit& fit) {
    if (!(fit.lambda > 0.0)) {
        throw InvalidArgumentError("exponential rate must be positive");
    }
    // -expm1(-x) instead of 1 - exp(-x): exact near 0.
    return -std::expm1(-fit.lambda * double(cites));
}

ImpactScore score_paper(const PaperRecord& paper, const Cohort& cohort,
                        ImpactKind kind) {
    if (kind == ImpactKind::TNCSI_SP) {
        if (!cohort.window) {
            throw InvalidArgumentError(
                "same-period scoring needs a windowed cohort");
        }
        if (!paper.publication_date) {
            throw InvalidArgumentError(
                "same-period scoring needs the paper's publication date");
        }
        if (!cohort.window->contains(*paper.publication_date)) {
            throw InvalidArgumentError(
                "cohort window does not cover the paper's publication date " +
                format_date(*paper.publication_date));
        }
    } else if (cohort.window) {
        throw InvalidArgumentError(
            "cumulative scoring expects an unwindowed cohort");
    }

    const auto dist = empirical_distribution(cohort);
    std::vector<std::uint64_t> counts;
    counts.reserve(cohort.members.size());
    for (const auto& m : cohort.members) counts.push_back(m.citation_count);
    const auto fit = fit_exponential(counts);

    ImpactScore score;
    score.value = tncsi_sp_value(paper.citation_count, fit);
    score.kind = kind;
    score.fit = fit;
    score.cohort_size = dist.total;
    return score;
}

}  // namespace impactkit::metrics
