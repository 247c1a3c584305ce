#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vcenergy/clock.hpp"
#include "vcenergy/job.hpp"
#include "vcenergy/meters.hpp"

namespace fakes {

/// Runs instantly in wall time, advances the virtual clock by `duration`.
class Executor final : public vcenergy::Executor {
public:
    Executor(vcenergy::VirtualClock& clock, double duration) : clock_(clock), duration_(duration) {}

    vcenergy::ExecResult execute(const vcenergy::Command& command) override {
        commands.push_back(command);
        clock_.advance(duration_);
        return {exit_status, output_size};
    }

    int exit_status = 0;
    std::uint64_t output_size = 1000;
    std::vector<vcenergy::Command> commands;

private:
    vcenergy::VirtualClock& clock_;
    double duration_;
};

/// Samples `power(session, index)` every nominal interval from start() up to
/// stop(), plus a closing sample at stop().
class Meter final : public vcenergy::Meter {
public:
    using PowerFn = std::function<double(int session, int index)>;

    Meter(vcenergy::MeterSpec spec, vcenergy::Clock& clock, PowerFn power)
        : spec_(std::move(spec)), clock_(clock), power_(std::move(power)) {}

    const vcenergy::MeterSpec& spec() const override { return spec_; }

    void start() override { started_ = clock_.now(); }

    vcenergy::SampleResult stop() override {
        vcenergy::SampleResult r;
        r.trace = {spec_.meter_id, {}, spec_.nominal_interval};
        const double end = clock_.now();
        int i = 0;
        for (double t = started_; t < end; t = started_ + ++i * spec_.nominal_interval) {
            r.trace.samples.push_back({t, power_(session_, i)});
        }
        r.trace.samples.push_back({end, power_(session_, i)});
        if (fail_session == session_) {
            r.failed = true;
            r.error = "meter unplugged";
        }
        ++session_;
        return r;
    }

    int sessions() const { return session_; }
    int fail_session = -1;

private:
    vcenergy::MeterSpec spec_;
    vcenergy::Clock& clock_;
    PowerFn power_;
    double started_ = 0.0;
    int session_ = 0;
};

} // namespace fakes
