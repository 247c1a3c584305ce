#pragma once

// A Meter records one sampling session around a job: start() before launch,
// stop() after exit. Exactly one session per meter is active at a time.

#include <filesystem>
#include <latch>
#include <memory>
#include <thread>

#include "vcenergy/clock.hpp"
#include "vcenergy/sources.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

class Meter {
public:
    virtual ~Meter() = default;

    virtual const MeterSpec& spec() const = 0;
    virtual void start() = 0;
    virtual SampleResult stop() = 0;
};

/// Runs sample_power on a dedicated thread between start() and stop().
/// start() returns after the first poll; stop() adds one closing poll so the
/// trace brackets the job.
class ThreadedMeter final : public Meter {
public:
    ThreadedMeter(MeterSpec spec, std::unique_ptr<PowerProbe> probe, Clock& clock);
    ~ThreadedMeter() override;

    const MeterSpec& spec() const override { return spec_; }
    void start() override;
    SampleResult stop() override;

private:
    MeterSpec spec_;
    std::unique_ptr<PowerProbe> probe_;
    Clock& clock_;
    std::unique_ptr<std::latch> first_poll_; // outlives the worker
    SampleResult result_;
    std::jthread worker_;
};

/// External meter whose samples are logged elsewhere (a logger host writing
/// `timestamp,power_w` CSV). stop() re-reads the log and returns the samples
/// within two nominal intervals of the session.
class LogFileMeter final : public Meter {
public:
    LogFileMeter(MeterSpec spec, std::filesystem::path log, Clock& clock);

    const MeterSpec& spec() const override { return spec_; }
    void start() override;
    SampleResult stop() override;

private:
    MeterSpec spec_;
    std::filesystem::path log_;
    Clock& clock_;
    double started_ = 0.0;
};

} // namespace vcenergy
