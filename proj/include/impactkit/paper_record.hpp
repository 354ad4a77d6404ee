#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "impactkit/date.hpp"

namespace impactkit {

/// Auxiliary signals beyond title/abstract. All fields are optional because
/// they come from separate extraction passes; rqm is a reference-quality
/// score in [0, 1].
struct ExtrasRecord {
    std::optional<bool> sota_claim;
    std::optional<bool> released_dataset;
    std::optional<bool> open_access_code;
    std::optional<double> rqm;

    bool complete() const {
        return sota_claim.has_value() && released_dataset.has_value() &&
               open_access_code.has_value() && rqm.has_value();
    }

    friend bool operator==(const ExtrasRecord&, const ExtrasRecord&) = default;
};

/// One scholarly paper as returned by the gateway or read from a dataset.
/// publication_date is optional at the type level: some API records lack it
/// and the gateway decides per call whether such papers are usable.
struct PaperRecord {
    std::string paper_id;
    std::optional<std::string> arxiv_id;
    std::string title;
    std::string abstract;
    std::uint64_t citation_count = 0;
    std::optional<Date> publication_date;
    std::vector<std::string> categories;
    std::optional<ExtrasRecord> extras;

    friend bool operator==(const PaperRecord&, const PaperRecord&) = default;
};

}  // namespace impactkit
