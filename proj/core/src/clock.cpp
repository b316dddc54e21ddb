#include "ptfa/clock.hpp"

#include <chrono>

namespace ptfa {

Millis SystemClock::now_ms() const {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ScaledClock::ScaledClock(double scale, Millis origin_ms)
    : scale_(scale), origin_ms_(origin_ms), start_(std::chrono::steady_clock::now()) {}

Millis ScaledClock::now_ms() const {
    const std::chrono::duration<double, std::milli> real = std::chrono::steady_clock::now() - start_;
    return origin_ms_ + static_cast<Millis>(real.count() * scale_);
}

}  // namespace ptfa
