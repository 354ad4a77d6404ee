#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

namespace impactkit::scholar {

/// On-disk response cache. One JSON-lines file per bucket under the cache
/// directory; each entry is self-describing:
///   {"key": ..., "request": <request echo>, "response": ...,
///    "stored_at": <UTC timestamp>}
/// Entries are only ever added. Rewrites go through a temp file plus
/// rename, so a concurrent reader never sees a torn file. Later entries
/// with the same key win on lookup.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<nlohmann::json> lookup(const std::string& bucket,
                                         const std::string& key);

    void store(const std::string& bucket, const std::string& key,
               nlohmann::json request_echo, nlohmann::json response);

    /// Hex FNV-1a digest of the canonical (sorted-key) request dump; the
    /// standard way to key entries on request content.
    static std::string content_key(const nlohmann::json& request);

    const std::filesystem::path& dir() const { return dir_; }

private:
    struct Bucket {
        bool loaded = false;
        std::map<std::string, nlohmann::json> responses;
        std::string lines;  // verbatim file content, preserved on rewrite
    };

    Bucket& bucket_for(const std::string& name);  // callers hold mu_
    std::filesystem::path file_for(const std::string& bucket) const;

    std::filesystem::path dir_;
    std::mutex mu_;
    std::map<std::string, Bucket> buckets_;
};

}  // namespace impactkit::scholar
