#pragma once

#include <random>
#include <thread>

namespace maro {

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    // Jitter only perturbs timing, so a nondeterministic seed is fine here.
    thread_local std::minstd_rand jitter_rng{std::random_device{}()};
    auto delay = static_cast<double>(policy.base_delay.count());
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const Error& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
        }
        std::uniform_real_distribution<double> spread(-policy.jitter, policy.jitter);
        auto sleep_ms = static_cast<long long>(delay * (1.0 + spread(jitter_rng)));
        if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        delay *= policy.multiplier;
    }
}

}  // namespace maro
