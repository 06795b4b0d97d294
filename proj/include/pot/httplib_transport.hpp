#pragma once

// Real HTTP transport over cpp-httplib. Only the CLI includes this
// header; define CPPHTTPLIB_OPENSSL_SUPPORT before it for https bases.

#include <httplib.h>

#include <memory>
#include <string>

#include "pot/transport.hpp"

namespace pot {

/// OpenAI-compatible endpoint transport. `api_base` looks like
/// "https://api.openai.com/v1" or "http://localhost:8080/v1"; the path
/// passed to post_json() is appended to the base's path prefix. The API
/// key comes from the environment, never from argv.
class HttplibTransport : public Transport {
public:
    HttplibTransport(std::string api_base, std::string api_key, int timeout_seconds = 60)
        : api_key_(std::move(api_key)) {
        auto scheme_end = api_base.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("api_base must start with http:// or https://");
        auto path_start = api_base.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            origin_ = api_base;
        } else {
            origin_ = api_base.substr(0, path_start);
            prefix_ = api_base.substr(path_start);
            while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        }
        timeout_seconds_ = timeout_seconds;
    }

    std::string post_json(const std::string& path, const std::string& body) override {
        httplib::Client client(origin_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

        auto res = client.Post(prefix_ + path, headers, body, "application/json");
        if (!res)
            throw TransportError("HTTP error against " + origin_ + prefix_ + path + ": " +
                                 httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                                 res->body.substr(0, 200));
        if (res->status != 200)
            throw MalformedResponseError("HTTP " + std::to_string(res->status) + " from " + path +
                                         ": " + res->body.substr(0, 200));
        return res->body;
    }

private:
    std::string origin_;
    std::string prefix_;
    std::string api_key_;
    int timeout_seconds_ = 60;
};

} // namespace pot
