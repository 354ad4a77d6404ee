#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>

namespace impactkit::scholar {

/// Sliding-window request throttle. acquire() blocks (through the sleeper)
/// until issuing one more request keeps the count within max_requests per
/// window, then records the request. Clock and sleeper are injectable so
/// tests can drive virtual time.
class RateLimiter {
public:
    using TimePoint = std::chrono::steady_clock::time_point;
    using Clock = std::function<TimePoint()>;
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RateLimiter(std::size_t max_requests, std::chrono::milliseconds window,
                Clock clock = {}, Sleeper sleeper = {});

    void acquire();

    /// Requests recorded inside the current window (test introspection).
    std::size_t issued_in_window() const;

private:
    std::size_t max_requests_;
    std::chrono::milliseconds window_;
    Clock clock_;
    Sleeper sleeper_;
    mutable std::mutex mu_;
    std::deque<TimePoint> stamps_;
};

}  // namespace impactkit::scholar
