#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "impactkit/core_metrics.hpp"
#include "impactkit/date.hpp"
#include "impactkit/http_client.hpp"
#include "impactkit/paper_record.hpp"
#include "impactkit/rate_limiter.hpp"
#include "impactkit/response_cache.hpp"

namespace impactkit::scholar {

struct GatewayConfig {
    // Semantic Scholar-compatible Graph API root.
    std::string base_url = "https://api.semanticscholar.org/graph/v1";
    std::optional<std::string> api_key;  // sent as x-api-key
    std::size_t max_requests_per_window = 1;
    std::chrono::milliseconds rate_window{1100};
    std::size_t retry_budget = 3;
    std::filesystem::path cache_dir = ".impactkit-cache";
    // Live requests are opt-in; offline mode serves the cache only and
    // fails with TransportError on a miss.
    bool offline = true;
    std::function<void(const std::string&)> warn;
};

/// Cohort and metadata acquisition with on-disk caching and rate limiting.
/// Every successful response is cached; repeated calls are answered from
/// the cache without touching the network.
class ScholarGateway {
public:
    explicit ScholarGateway(GatewayConfig config,
                            std::shared_ptr<HttpClient> http = nullptr);

    /// Pages through the relevance-ranked search endpoint until `capacity`
    /// unique members are collected or results run out. The date window is
    /// both passed to the endpoint and re-checked client-side; members
    /// without a publication date are dropped from windowed cohorts and
    /// kept (with a warning) in unwindowed ones.
    metrics::Cohort search_cohort(const std::string& phrase,
                                  const std::optional<DateWindow>& window,
                                  std::size_t capacity = 1000);

    /// Single-paper metadata. A missing abstract comes back as an empty
    /// string plus a warning through the configured sink.
    PaperRecord fetch_paper(const std::string& paper_id);

    /// Outbound HTTP requests issued so far (cache hits do not count).
    std::size_t network_requests() const { return network_requests_; }

    ResponseCache& cache() { return cache_; }

private:
    nlohmann::json request_json(const std::string& url);
    void warn(const std::string& message) const;

    GatewayConfig config_;
    std::shared_ptr<HttpClient> http_;
    RateLimiter limiter_;
    ResponseCache cache_;
    std::size_t network_requests_ = 0;
};

struct ArxivIngestOptions {
    // Title words that mark a paper as a survey-style publication.
    std::vector<std::string> survey_markers{"survey", "review", "overview"};
    // Extra excluded ids (verbatim match on the snapshot id field).
    std::vector<std::string> excluded_ids;
    std::function<void(const std::string&)> warn;
};

/// Reads an arXiv metadata snapshot (one JSON object per line; fields
/// documented in the README) and returns records whose categories
/// intersect `categories`, whose date lies in `range`, and whose title
/// does not look like a survey. Malformed lines are skipped with a
/// warning. Throws InvalidArgumentError on an empty category list and
/// IoError when the file cannot be read.
std::vector<PaperRecord> ingest_arxiv_snapshot(
    const std::filesystem::path& snapshot, const std::vector<std::string>& categories,
    const DateWindow& range, std::size_t limit,
    const ArxivIngestOptions& options = {});

/// Same filter over a listing served via HTTP in the identical line
/// format. Throws MalformedResponseError when the payload is not parseable
/// line-JSON at all.
std::vector<PaperRecord> ingest_arxiv_listing(
    HttpClient& http, const std::string& url,
    const std::vector<std::string>& categories, const DateWindow& range,
    std::size_t limit, const ArxivIngestOptions& options = {});

/// True when the title contains one of the marker words (word-boundary,
/// case-insensitive match).
bool looks_like_survey(std::string_view title,
                       const std::vector<std::string>& markers);

}  // namespace impactkit::scholar
