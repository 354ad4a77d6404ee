#include "impactkit/response_cache.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "impactkit/errors.hpp"

namespace impactkit::scholar {

namespace {

using nlohmann::json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw IoError("cannot create cache directory " + dir_.string() + ": " +
                      ec.message());
    }
}

std::filesystem::path ResponseCache::file_for(const std::string& bucket) const {
    return dir_ / (bucket + ".jsonl");
}

ResponseCache::Bucket& ResponseCache::bucket_for(const std::string& name) {
    Bucket& bucket = buckets_[name];
    if (bucket.loaded) return bucket;
    bucket.loaded = true;

    std::ifstream in(file_for(name));
    if (!in) return bucket;  // nothing cached yet
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        bucket.lines += line;
        bucket.lines += '\n';
        json entry = json::parse(line, nullptr, false);
        if (entry.is_discarded() || !entry.contains("key") ||
            !entry.contains("response")) {
            continue;  // foreign or damaged line; keep it, ignore it
        }
        bucket.responses[entry["key"].get<std::string>()] = entry["response"];
    }
    return bucket;
}

std::optional<json> ResponseCache::lookup(const std::string& bucket_name,
                                          const std::string& key) {
    std::scoped_lock lock(mu_);
    Bucket& bucket = bucket_for(bucket_name);
    const auto it = bucket.responses.find(key);
    if (it == bucket.responses.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::store(const std::string& bucket_name, const std::string& key,
                          json request_echo, json response) {
    std::scoped_lock lock(mu_);
    Bucket& bucket = bucket_for(bucket_name);

    json entry;
    entry["key"] = key;
    entry["request"] = std::move(request_echo);
    entry["response"] = response;
    entry["stored_at"] = utc_now();

    std::string lines = bucket.lines;
    lines += entry.dump();
    lines += '\n';

    const std::filesystem::path target = file_for(bucket_name);
    const std::filesystem::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::trunc);
        if (!out) throw IoError("cannot write cache file " + temp.string());
        out << lines;
        if (!out.flush()) throw IoError("failed writing " + temp.string());
    }
    std::error_code ec;
    std::filesystem::rename(temp, target, ec);
    if (ec) {
        throw IoError("cannot replace cache file " + target.string() + ": " +
                      ec.message());
    }

    bucket.lines = std::move(lines);
    bucket.responses[key] = std::move(response);
}

std::string ResponseCache::content_key(const json& request) {
    // nlohmann::json objects iterate in sorted key order, so dump() is
    // canonical for equal content.
    const std::string dump = request.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : dump) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace impactkit::scholar
