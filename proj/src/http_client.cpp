#include "impactkit/http_client.hpp"

#include <httplib.h>

#include "impactkit/errors.hpp"

namespace impactkit {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw TransportError("url without scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttplibClient : public HttpClient {
public:
    HttpResponse get(const std::string& url, const HttpHeaders& headers) override {
        return run(url, headers, [](httplib::Client& cli, const std::string& target,
                                    const httplib::Headers& h) {
            return cli.Get(target, h);
        });
    }

    HttpResponse post_json(const std::string& url, const std::string& body,
                           const HttpHeaders& headers) override {
        return run(url, headers,
                   [&body](httplib::Client& cli, const std::string& target,
                           const httplib::Headers& h) {
                       return cli.Post(target, h, body, "application/json");
                   });
    }

private:
    template <typename Fn>
    HttpResponse run(const std::string& url, const HttpHeaders& headers, Fn&& fn) {
        const SplitUrl split = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (split.origin.rfind("https://", 0) == 0) {
            throw TransportError("built without TLS support: " + url);
        }
#endif
        httplib::Client cli(split.origin);
        cli.set_connection_timeout(15);
        cli.set_read_timeout(60);
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        auto result = fn(cli, split.target, h);
        if (!result) {
            throw TransportError("request to " + url + " failed: " +
                                 httplib::to_string(result.error()));
        }
        return HttpResponse{result->status, result->body};
    }
};

}  // namespace

std::shared_ptr<HttpClient> make_httplib_client() {
    return std::make_shared<HttplibClient>();
}

}  // namespace impactkit
