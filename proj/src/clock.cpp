#include "vcenergy/clock.hpp"

#include <chrono>

namespace vcenergy {

namespace {

using sys_seconds = std::chrono::duration<double>;

} // namespace

double SystemClock::now() {
    return std::chrono::duration_cast<sys_seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

bool SystemClock::wait_until(double t, std::stop_token stop) {
    const auto deadline = std::chrono::system_clock::time_point(
        std::chrono::duration_cast<std::chrono::system_clock::duration>(sys_seconds(t)));
    std::unique_lock lock(mutex_);
    cv_.wait_until(lock, stop, deadline, [] { return false; });
    return !stop.stop_requested();
}

bool VirtualClock::wait_until(double t, std::stop_token stop) {
    if (stop.stop_requested()) {
        return false;
    }
    if (t > now_) {
        now_ = t;
    }
    return true;
}

} // namespace vcenergy
