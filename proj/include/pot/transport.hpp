#pragma once

#include <chrono>
#include <string>
#include <thread>

#include "pot/oracle.hpp"

namespace pot {

/// Minimal HTTP seam: POST a JSON body to a path under the configured
/// API base, return the response body. Implementations own base URL,
/// auth and timeouts. Must be safe for concurrent calls.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string post_json(const std::string& path, const std::string& body) = 0;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

/// Runs `op` under the retry policy; TransportError triggers exponential
/// backoff, anything else propagates immediately.
template <class Fn>
std::string with_retries(const RetryPolicy& policy, Fn&& op) {
    auto delay = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return op();
        } catch (const TransportError&) {
            if (attempt >= policy.attempts) throw;
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
}

} // namespace pot
