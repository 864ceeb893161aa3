#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>

namespace quicaudit {

// Wall-clock time in microseconds since the Unix epoch.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_us() = 0;
  virtual void sleep_until_us(std::int64_t t) = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_us() override;
  void sleep_until_us(std::int64_t t) override;
};

// Time only moves when someone sleeps. For tests and mock campaigns.
class ManualClock : public Clock {
 public:
  explicit ManualClock(std::int64_t start_us = 0) : now_(start_us) {}
  std::int64_t now_us() override { return now_.load(); }
  void sleep_until_us(std::int64_t t) override;
  void advance_us(std::int64_t d) { now_ += d; }

 private:
  std::atomic<std::int64_t> now_;
};

// Enforces a minimum spacing between consecutive uses of the same key.
// Slots are reserved under a lock and waited for outside of it, so
// concurrent callers on one key are serialized in reservation order.
class SpacingLimiter {
 public:
  SpacingLimiter(Clock& clock, std::int64_t spacing_us) : clock_(clock), spacing_us_(spacing_us) {}

  // Blocks until the key may be used; returns the granted time.
  std::int64_t acquire(const std::string& key);
  std::int64_t spacing_us() const { return spacing_us_; }

 private:
  Clock& clock_;
  std::int64_t spacing_us_;
  std::mutex mu_;
  std::map<std::string, std::int64_t> last_;
};

}  // namespace quicaudit
