#include "impactkit/scholar_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "impactkit/errors.hpp"

namespace impactkit::scholar {

namespace {

using nlohmann::json;

constexpr std::size_t kPageSize = 100;
constexpr const char* kSearchFields =
    "title,abstract,citationCount,publicationDate,externalIds";
constexpr const char* kPaperFields =
    "title,abstract,citationCount,publicationDate,externalIds,"
    "s2FieldsOfStudy";

std::string normalize_phrase(const std::string& phrase) {
    std::string out;
    out.reserve(phrase.size());
    bool pending_space = false;
    for (const char c : phrase) {
        const unsigned char b = static_cast<unsigned char>(c);
        if (std::isspace(b)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(char(std::tolower(b)));
    }
    return out;
}

std::string url_encode(const std::string& text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (const char c : text) {
        const unsigned char b = static_cast<unsigned char>(c);
        if (std::isalnum(b) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(c);
        } else {
            out.push_back('%');
            out.push_back(kHex[b >> 4]);
            out.push_back(kHex[b & 0xF]);
        }
    }
    return out;
}

std::optional<Date> date_from_field(const json& obj, const char* field) {
    if (!obj.contains(field) || !obj[field].is_string()) return std::nullopt;
    return parse_date(obj[field].get<std::string>());
}

/// Pulls one member out of a search result item; nullopt when the item has
/// no usable id.
std::optional<metrics::CohortMember> member_from_item(const json& item) {
    if (!item.contains("paperId") || !item["paperId"].is_string()) {
        return std::nullopt;
    }
    metrics::CohortMember m;
    m.paper_id = item["paperId"].get<std::string>();
    if (item.contains("citationCount") && item["citationCount"].is_number()) {
        const auto raw = item["citationCount"].get<double>();
        m.citation_count = raw > 0 ? std::uint64_t(raw) : 0;
    }
    m.publication_date = date_from_field(item, "publicationDate");
    return m;
}

json member_to_json(const metrics::CohortMember& m) {
    json out;
    out["id"] = m.paper_id;
    out["cites"] = m.citation_count;
    out["pub_date"] =
        m.publication_date ? json(format_date(*m.publication_date)) : json();
    return out;
}

metrics::CohortMember member_from_cache_json(const json& obj) {
    metrics::CohortMember m;
    m.paper_id = obj.at("id").get<std::string>();
    m.citation_count = obj.at("cites").get<std::uint64_t>();
    if (obj.contains("pub_date") && obj["pub_date"].is_string()) {
        m.publication_date = parse_date(obj["pub_date"].get<std::string>());
    }
    return m;
}

PaperRecord paper_from_api_json(const std::string& paper_id, const json& doc) {
    PaperRecord record;
    record.paper_id = doc.contains("paperId") && doc["paperId"].is_string()
                          ? doc["paperId"].get<std::string>()
                          : paper_id;
    if (doc.contains("title") && doc["title"].is_string()) {
        record.title = doc["title"].get<std::string>();
    }
    if (doc.contains("abstract") && doc["abstract"].is_string()) {
        record.abstract = doc["abstract"].get<std::string>();
    }
    if (doc.contains("citationCount") && doc["citationCount"].is_number()) {
        const auto raw = doc["citationCount"].get<double>();
        record.citation_count = raw > 0 ? std::uint64_t(raw) : 0;
    }
    record.publication_date = date_from_field(doc, "publicationDate");
    if (doc.contains("externalIds") && doc["externalIds"].is_object() &&
        doc["externalIds"].contains("ArXiv") &&
        doc["externalIds"]["ArXiv"].is_string()) {
        record.arxiv_id = doc["externalIds"]["ArXiv"].get<std::string>();
    }
    if (doc.contains("s2FieldsOfStudy") && doc["s2FieldsOfStudy"].is_array()) {
        for (const auto& field : doc["s2FieldsOfStudy"]) {
            if (!field.is_object() || !field.contains("category") ||
                !field["category"].is_string()) {
                continue;
            }
            const auto name = field["category"].get<std::string>();
            if (std::find(record.categories.begin(), record.categories.end(),
                          name) == record.categories.end()) {
                record.categories.push_back(name);
            }
        }
    }
    return record;
}

}  // namespace

ScholarGateway::ScholarGateway(GatewayConfig config, std::shared_ptr<HttpClient> http)
    : config_(std::move(config)),
      http_(http ? std::move(http) : make_httplib_client()),
      limiter_(config_.max_requests_per_window, config_.rate_window),
      cache_(config_.cache_dir) {}

void ScholarGateway::warn(const std::string& message) const {
    if (config_.warn) {
        config_.warn(message);
    } else {
        std::cerr << "warning: " << message << "\n";
    }
}

json ScholarGateway::request_json(const std::string& url) {
    if (config_.offline) {
        throw TransportError("offline mode: " + url +
                             " is not cached and live requests are disabled");
    }
    HttpHeaders headers;
    if (config_.api_key) headers.emplace_back("x-api-key", *config_.api_key);

    HttpResponse response;
    for (std::size_t attempt = 0;; ++attempt) {
        limiter_.acquire();
        ++network_requests_;
        response = http_->get(url, headers);
        if (response.status == 429 || response.status >= 500) {
            if (attempt >= config_.retry_budget) {
                if (response.status == 429) {
                    throw RateLimitedError("request kept being throttled after " +
                                           std::to_string(attempt) + " retries: " +
                                           url);
                }
                throw TransportError("server error HTTP " +
                                     std::to_string(response.status) + " for " + url);
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(250u << attempt));
            continue;
        }
        break;
    }
    if (response.status == 404) throw NotFoundError("no such resource: " + url);
    if (response.status != 200) {
        throw TransportError("HTTP " + std::to_string(response.status) + " for " +
                             url);
    }
    json doc = json::parse(response.body, nullptr, false);
    if (doc.is_discarded()) {
        throw MalformedResponseError("response body is not JSON: " + url);
    }
    return doc;
}

metrics::Cohort ScholarGateway::search_cohort(const std::string& phrase,
                                              const std::optional<DateWindow>& window,
                                              std::size_t capacity) {
    if (normalize_phrase(phrase).empty()) {
        throw InvalidArgumentError("search phrase is empty");
    }
    if (capacity == 0) throw InvalidArgumentError("capacity must be positive");

    json request_echo;
    request_echo["phrase"] = normalize_phrase(phrase);
    request_echo["capacity"] = capacity;
    if (window) {
        request_echo["window"] = {{"start", format_date(window->start)},
                                  {"end", format_date(window->end)}};
    } else {
        request_echo["window"] = nullptr;
    }
    const std::string key = ResponseCache::content_key(request_echo);

    std::vector<metrics::CohortMember> members;
    if (const auto cached = cache_.lookup("search", key)) {
        for (const auto& item : (*cached)["members"]) {
            members.push_back(member_from_cache_json(item));
        }
    } else {
        std::unordered_set<std::string> seen;
        std::size_t offset = 0;
        for (;;) {
            std::ostringstream url;
            url << config_.base_url << "/paper/search?query="
                << url_encode(normalize_phrase(phrase)) << "&offset=" << offset
                << "&limit=" << kPageSize << "&fields=" << kSearchFields;
            if (window) {
                url << "&publicationDateOrYear=" << format_date(window->start)
                    << ":" << format_date(window->end);
            }
            const json page = request_json(url.str());
            if (!page.contains("data") || !page["data"].is_array()) {
                throw MalformedResponseError(
                    "search response carries no data array");
            }
            const auto& data = page["data"];
            if (data.empty()) break;
            for (const auto& item : data) {
                auto member = member_from_item(item);
                if (!member) continue;
                if (!seen.insert(member->paper_id).second) continue;
                if (window) {
                    if (!member->publication_date) continue;  // D3: dropped
                    if (!window->contains(*member->publication_date)) continue;
                } else if (!member->publication_date) {
                    warn("cohort member " + member->paper_id +
                         " has no publication date");
                }
                members.push_back(std::move(*member));
                if (members.size() >= capacity) break;
            }
            if (members.size() >= capacity) break;
            if (page.contains("next") && page["next"].is_number_unsigned()) {
                offset = page["next"].get<std::size_t>();
            } else if (data.size() < kPageSize) {
                break;
            } else {
                offset += data.size();
            }
            if (page.contains("total") && page["total"].is_number_unsigned() &&
                offset >= page["total"].get<std::size_t>()) {
                break;
            }
        }
        json response;
        auto& stored = response["members"] = json::array();
        for (const auto& m : members) stored.push_back(member_to_json(m));
        cache_.store("search", key, request_echo, std::move(response));
    }

    if (members.empty()) {
        throw EmptyCohortError("no papers found for phrase \"" + phrase + "\"" +
                               (window ? " within " + format_date(window->start) +
                                             ".." + format_date(window->end)
                                       : ""));
    }

    metrics::Cohort cohort;
    cohort.topic_phrase = normalize_phrase(phrase);
    cohort.window = window;
    cohort.members = std::move(members);
    cohort.capacity = capacity;
    return cohort;
}

PaperRecord ScholarGateway::fetch_paper(const std::string& paper_id) {
    if (paper_id.empty()) throw InvalidArgumentError("paper id is empty");

    json request_echo;
    request_echo["paper_id"] = paper_id;
    const std::string key = ResponseCache::content_key(request_echo);

    json doc;
    if (const auto cached = cache_.lookup("paper", key)) {
        doc = *cached;
    } else {
        const std::string url =
            config_.base_url + "/paper/" + url_encode(paper_id) +
            "?fields=" + kPaperFields;
        doc = request_json(url);
        cache_.store("paper", key, request_echo, doc);
    }

    PaperRecord record = paper_from_api_json(paper_id, doc);
    if (record.title.empty()) {
        throw MalformedResponseError("paper " + paper_id + " has no title");
    }
    if (record.abstract.empty()) {
        warn("paper " + paper_id + " has no abstract");
    }
    return record;
}

bool looks_like_survey(std::string_view title,
                       const std::vector<std::string>& markers) {
    std::string word;
    const auto matches = [&] {
        if (word.empty()) return false;
        return std::any_of(markers.begin(), markers.end(),
                           [&](const std::string& m) { return word == m; });
    };
    for (const char c : title) {
        const unsigned char b = static_cast<unsigned char>(c);
        if (std::isalpha(b)) {
            word.push_back(char(std::tolower(b)));
        } else {
            if (matches()) return true;
            word.clear();
        }
    }
    return matches();
}

namespace {

std::vector<std::string> snapshot_categories(const json& obj) {
    std::vector<std::string> out;
    if (!obj.contains("categories")) return out;
    const auto& cats = obj["categories"];
    if (cats.is_array()) {
        for (const auto& c : cats) {
            if (c.is_string()) out.push_back(c.get<std::string>());
        }
    } else if (cats.is_string()) {
        std::istringstream stream(cats.get<std::string>());
        std::string cat;
        while (stream >> cat) out.push_back(cat);
    }
    return out;
}

std::optional<Date> snapshot_date(const json& obj) {
    for (const char* field : {"date", "update_date", "created"}) {
        if (const auto d = date_from_field(obj, field)) return d;
    }
    return std::nullopt;
}

template <typename LineSource>
std::vector<PaperRecord> ingest_lines(LineSource&& next_line,
                                      const std::vector<std::string>& categories,
                                      const DateWindow& range, std::size_t limit,
                                      const ArxivIngestOptions& options) {
    if (categories.empty()) {
        throw InvalidArgumentError("arXiv ingestion needs at least one category");
    }
    const auto warn = [&](const std::string& m) {
        if (options.warn) options.warn(m);
    };

    std::vector<PaperRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (out.size() < limit && next_line(line)) {
        ++lineno;
        if (line.empty()) continue;
        const json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") ||
            !obj.contains("title") || !obj["id"].is_string() ||
            !obj["title"].is_string()) {
            warn("skipping malformed snapshot line " + std::to_string(lineno));
            continue;
        }

        PaperRecord record;
        record.arxiv_id = obj["id"].get<std::string>();
        record.paper_id = "arXiv:" + *record.arxiv_id;
        record.title = obj["title"].get<std::string>();
        if (record.title.empty()) {
            warn("skipping snapshot line " + std::to_string(lineno) +
                 ": empty title");
            continue;
        }
        if (obj.contains("abstract") && obj["abstract"].is_string()) {
            record.abstract = obj["abstract"].get<std::string>();
        }
        record.categories = snapshot_categories(obj);
        record.publication_date = snapshot_date(obj);

        const bool category_hit = std::any_of(
            record.categories.begin(), record.categories.end(),
            [&](const std::string& c) {
                return std::find(categories.begin(), categories.end(), c) !=
                       categories.end();
            });
        if (!category_hit) continue;
        if (!record.publication_date ||
            !range.contains(*record.publication_date)) {
            continue;
        }
        if (looks_like_survey(record.title, options.survey_markers)) continue;
        if (std::find(options.excluded_ids.begin(), options.excluded_ids.end(),
                      *record.arxiv_id) != options.excluded_ids.end()) {
            continue;
        }
        out.push_back(std::move(record));
    }
    return out;
}

}  // namespace

std::vector<PaperRecord> ingest_arxiv_snapshot(
    const std::filesystem::path& snapshot, const std::vector<std::string>& categories,
    const DateWindow& range, std::size_t limit, const ArxivIngestOptions& options) {
    std::ifstream in(snapshot);
    if (!in) throw IoError("cannot open snapshot " + snapshot.string());
    return ingest_lines(
        [&in](std::string& line) { return bool(std::getline(in, line)); },
        categories, range, limit, options);
}

std::vector<PaperRecord> ingest_arxiv_listing(
    HttpClient& http, const std::string& url,
    const std::vector<std::string>& categories, const DateWindow& range,
    std::size_t limit, const ArxivIngestOptions& options) {
    const HttpResponse response = http.get(url, {});
    if (response.status != 200) {
        throw TransportError("listing " + url + " returned HTTP " +
                             std::to_string(response.status));
    }
    std::istringstream body(response.body);
    auto records = ingest_lines(
        [&body](std::string& line) { return bool(std::getline(body, line)); },
        categories, range, limit, options);
    if (records.empty() && !response.body.empty()) {
        // Distinguish "nothing matched" from "not line-JSON at all".
        std::istringstream probe(response.body);
        std::string line;
        bool any_json = false;
        while (std::getline(probe, line)) {
            if (line.empty()) continue;
            if (!json::parse(line, nullptr, false).is_discarded()) {
                any_json = true;
                break;
            }
        }
        if (!any_json) {
            throw MalformedResponseError("listing " + url +
                                         " is not JSON-lines metadata");
        }
    }
    return records;
}

}  // namespace impactkit::scholar
