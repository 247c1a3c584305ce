#pragma once

#include <condition_variable>
#include <mutex>
#include <stop_token>

namespace vcenergy {

/// Wall-clock source in epoch seconds. Job logs and samplers must share one instance.
class Clock {
public:
    virtual ~Clock() = default;

    virtual double now() = 0;

    /// Blocks until `t` or until `stop` is requested. Returns false when stopped.
    virtual bool wait_until(double t, std::stop_token stop) = 0;

    void sleep_for(double seconds) { wait_until(now() + seconds, {}); }
};

class SystemClock final : public Clock {
public:
    double now() override;
    bool wait_until(double t, std::stop_token stop) override;

private:
    std::mutex mutex_;
    std::condition_variable_any cv_;
};

/// Manually driven clock. Waiting advances time instantly.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(double start = 0.0) : now_(start) {}

    double now() override { return now_; }
    bool wait_until(double t, std::stop_token stop) override;

    void advance(double seconds) { now_ += seconds; }
    void set(double t) { now_ = t; }

private:
    double now_;
};

} // namespace vcenergy
