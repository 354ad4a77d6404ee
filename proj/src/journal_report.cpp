#include "impactkit/journal_report.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "impactkit/errors.hpp"

namespace impactkit::report {

QuartileReport journal_report(const std::map<std::string, std::vector<double>>& groups,
                              const std::vector<double>& fractions) {
    if (groups.empty()) throw EmptyGroupError("report needs at least one group");
    for (const double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw InvalidArgumentError("fractions must lie in (0, 1]");
        }
    }

    QuartileReport report;
    report.fractions = fractions;
    for (const auto& [label, scores] : groups) {
        if (scores.empty()) {
            throw EmptyGroupError("group \"" + label + "\" has no scores");
        }
        std::vector<double> sorted(scores);
        std::sort(sorted.begin(), sorted.end(), std::greater<>());

        GroupRow row;
        row.label = label;
        row.n = sorted.size();
        row.overall_mean =
            std::accumulate(sorted.begin(), sorted.end(), 0.0) / double(row.n);
        for (const double f : fractions) {
            const auto take = std::max<std::size_t>(
                1, std::size_t(std::ceil(f * double(sorted.size()))));
            const double sum =
                std::accumulate(sorted.begin(), sorted.begin() + long(take), 0.0);
            row.top_fraction_means.push_back(sum / double(take));
        }
        report.groups.push_back(std::move(row));
    }
    return report;
}

}  // namespace impactkit::report
