#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace impactkit {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Minimal HTTP surface the gateways need. Implementations throw
/// TransportError when no response could be obtained at all (DNS, refused
/// connection, ...); HTTP error statuses come back as normal responses.
class HttpClient {
public:
    virtual ~HttpClient() = default;
    virtual HttpResponse get(const std::string& url, const HttpHeaders& headers) = 0;
    virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                   const HttpHeaders& headers) = 0;
};

/// cpp-httplib-backed client; supports http:// always and https:// when the
/// build links OpenSSL.
std::shared_ptr<HttpClient> make_httplib_client();

}  // namespace impactkit
