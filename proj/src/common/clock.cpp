#include "quicaudit/clock.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace quicaudit {

std::int64_t SystemClock::now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void SystemClock::sleep_until_us(std::int64_t t) {
  const auto now = now_us();
  if (t > now) std::this_thread::sleep_for(std::chrono::microseconds(t - now));
}

void ManualClock::sleep_until_us(std::int64_t t) {
  auto cur = now_.load();
  while (cur < t && !now_.compare_exchange_weak(cur, t)) {
  }
}

std::int64_t SpacingLimiter::acquire(const std::string& key) {
  std::int64_t slot;
  {
    std::lock_guard lock(mu_);
    slot = clock_.now_us();
    if (auto it = last_.find(key); it != last_.end()) slot = std::max(slot, it->second + spacing_us_);
    last_[key] = slot;
  }
  clock_.sleep_until_us(slot);
  return slot;
}

}  // namespace quicaudit
