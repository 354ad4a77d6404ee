#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impactkit/date.hpp"
#include "impactkit/paper_record.hpp"

namespace impactkit::metrics {

/// One paper inside a citation cohort. publication_date may be absent only
/// in unwindowed cohorts.
struct CohortMember {
    std::string paper_id;
    std::uint64_t citation_count = 0;
    std::optional<Date> publication_date;

    friend bool operator==(const CohortMember&, const CohortMember&) = default;
};

/// The retrieved same-topic papers an evaluated paper is compared against.
/// When `window` is set, every member's publication date lies inside it.
/// Capacity is the retrieval cap (C); after window filtering the effective
/// cohort size is members.size(), which is what the empirical distribution
/// normalizes by.
struct Cohort {
    std::string topic_phrase;
    std::optional<Date> anchor_date;
    std::optional<DateWindow> window;
    std::vector<CohortMember> members;
    std::size_t capacity = 1000;
};

/// Drops members with a duplicate paper_id, keeping the first occurrence.
std::vector<CohortMember> dedupe_members(std::span<const CohortMember> members);

/// Throws InvalidArgumentError if any structural invariant is violated:
/// empty or over-capacity member list, duplicate ids, or (for windowed
/// cohorts) members without a date or outside the window.
void validate_cohort(const Cohort& cohort);

/// P(X = x) over citation values x, as occurrence counts plus the total.
struct DiscreteCitationDistribution {
    std::map<std::uint64_t, std::size_t> counts;
    std::size_t total = 0;

    double probability(std::uint64_t cites) const {
        const auto it = counts.find(cites);
        return it == counts.end() ? 0.0
                                  : double(it->second) / double(total);
    }
};

/// Maximum-likelihood exponential fit of a citation sample. For the
/// exponential family the MLE is closed-form: lambda = 1 / sample mean.
struct ExponentialFit {
    double lambda = 0.0;
    double sample_mean = 0.0;
    std::size_t n = 0;

    friend bool operator==(const ExponentialFit&, const ExponentialFit&) = default;
};

enum class ImpactKind { TNCSI, TNCSI_SP };

const char* to_string(ImpactKind kind);
std::optional<ImpactKind> impact_kind_from_string(std::string_view name);

/// Final normalized impact value plus the fit it was computed from.
struct ImpactScore {
    double value = 0.0;
    ImpactKind kind = ImpactKind::TNCSI_SP;
    ExponentialFit fit;
    std::size_t cohort_size = 0;
};

/// Same-period window: [anchor - half_span months, anchor + half_span
/// months], end-of-month clamped.
DateWindow same_period_window(const Date& anchor, int half_span_months = 6);

/// Empirical citation distribution of the cohort. Throws EmptyCohortError
/// on an empty member list.
DiscreteCitationDistribution empirical_distribution(const Cohort& cohort);

/// Closed-form exponential MLE over raw citation counts. Throws
/// InvalidArgumentError on an empty list and DegenerateCohortError when
/// every count is zero (the rate is undefined).
ExponentialFit fit_exponential(std::span<const std::uint64_t> citation_counts);

/// CDF of the fitted exponential at `cites`: 1 - exp(-lambda * cites).
/// Strictly increasing in cites, 0 at 0, approaches (never reaches) 1.
double tncsi_sp_value(std::uint64_t cites, const ExponentialFit& fit);

/// Full metric: empirical distribution -> exponential MLE -> CDF at the
/// paper's citation count. TNCSI_SP requires a cohort whose window was
/// derived from the paper's publication date; TNCSI requires an unwindowed
/// cohort.
ImpactScore score_paper(const PaperRecord& paper, const Cohort& cohort,
                        ImpactKind kind);

}  // namespace impactkit::metrics
