#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace impactkit::report {

/// Per-group slice means: top_fraction_means[i] is the mean of the highest
/// ceil(fractions[i] * n) scores (at least one).
struct GroupRow {
    std::string label;
    std::size_t n = 0;
    std::vector<double> top_fraction_means;
    double overall_mean = 0.0;
};

struct QuartileReport {
    std::vector<double> fractions;
    std::vector<GroupRow> groups;  // ordered by label
};

/// Aggregates predicted scores per group (journal quartile labels in the
/// canonical use) into top-fraction and overall means. Throws
/// EmptyGroupError when any group has no scores and InvalidArgumentError
/// for fractions outside (0, 1].
QuartileReport journal_report(const std::map<std::string, std::vector<double>>& groups,
                              const std::vector<double>& fractions = {0.05, 0.25});

}  // namespace impactkit::report
