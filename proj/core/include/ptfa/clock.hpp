#pragma once

#include <atomic>
#include <chrono>

#include "ptfa/model.hpp"

namespace ptfa {

/// Millisecond time source. Every component reads time through one of these
/// so runs can be replayed under simulated time.
class Clock {
public:
    virtual ~Clock() = default;
    virtual Millis now_ms() const = 0;
};

/// Wall clock, milliseconds since the Unix epoch.
class SystemClock final : public Clock {
public:
    Millis now_ms() const override;
};

/// Runs `scale` times faster than the wall clock, starting at `origin_ms`.
class ScaledClock final : public Clock {
public:
    ScaledClock(double scale, Millis origin_ms);
    Millis now_ms() const override;

private:
    double scale_;
    Millis origin_ms_;
    std::chrono::steady_clock::time_point start_;
};

/// Settable clock for simulations and tests.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Millis start = 0) : now_(start) {}

    Millis now_ms() const override { return now_.load(); }
    void set(Millis t) { now_.store(t); }
    void advance(Millis delta) { now_.fetch_add(delta); }

private:
    std::atomic<Millis> now_;
};

}  // namespace ptfa
