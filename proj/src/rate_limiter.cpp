#include "impactkit/rate_limiter.hpp"

#include <thread>

#include "impactkit/errors.hpp"

namespace impactkit::scholar {

RateLimiter::RateLimiter(std::size_t max_requests, std::chrono::milliseconds window,
                         Clock clock, Sleeper sleeper)
    : max_requests_(max_requests),
      window_(window),
      clock_(clock ? std::move(clock)
                   : [] { return std::chrono::steady_clock::now(); }),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) {
                             std::this_thread::sleep_for(d);
                         }) {
    if (max_requests_ == 0) {
        throw InvalidArgumentError("rate limiter needs max_requests >= 1");
    }
}

void RateLimiter::acquire() {
    for (;;) {
        std::chrono::milliseconds wait{0};
        {
            std::scoped_lock lock(mu_);
            const TimePoint now = clock_();
            while (!stamps_.empty() && now - stamps_.front() >= window_) {
                stamps_.pop_front();
            }
            if (stamps_.size() < max_requests_) {
                stamps_.push_back(now);
                return;
            }
            wait = std::chrono::duration_cast<std::chrono::milliseconds>(
                       stamps_.front() + window_ - now) +
                   std::chrono::milliseconds{1};
        }
        sleeper_(wait);
    }
}

std::size_t RateLimiter::issued_in_window() const {
    std::scoped_lock lock(mu_);
    const TimePoint now = clock_();
    std::size_t count = 0;
    for (const auto& t : stamps_) {
        if (now - t < window_) ++count;
    }
    return count;
}

}  // namespace impactkit::scholar
