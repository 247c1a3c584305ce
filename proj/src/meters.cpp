#include "vcenergy/meters.hpp"

#include <fstream>

#include "vcenergy/errors.hpp"

namespace vcenergy {

ThreadedMeter::ThreadedMeter(MeterSpec spec, std::unique_ptr<PowerProbe> probe, Clock& clock)
    : spec_(std::move(spec)), probe_(std::move(probe)), clock_(clock) {}

ThreadedMeter::~ThreadedMeter() {
    if (worker_.joinable()) {
        worker_.request_stop();
        worker_.join();
    }
}

void ThreadedMeter::start() {
    if (worker_.joinable()) {
        throw SamplerError("meter " + spec_.meter_id + " is already sampling");
    }
    probe_->reset();
    result_ = {};
    first_poll_ = std::make_unique<std::latch>(1);
    worker_ = std::jthread([this](std::stop_token stop) {
        result_ = sample_power(*probe_, clock_, spec_.nominal_interval, stop, first_poll_.get());
    });
    first_poll_->wait();
}

SampleResult ThreadedMeter::stop() {
    if (!worker_.joinable()) {
        throw SamplerError("meter " + spec_.meter_id + " was not started");
    }
    worker_.request_stop();
    worker_.join();
    SampleResult out = std::move(result_);
    if (!out.failed) {
        try {
            if (auto s = probe_->poll(clock_)) {
                if (out.trace.samples.empty() || s->timestamp > out.trace.samples.back().timestamp) {
                    out.trace.samples.push_back(*s);
                }
            }
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
        }
    }
    out.trace.meter_id = spec_.meter_id;
    out.trace.nominal_interval = spec_.nominal_interval;
    return out;
}

LogFileMeter::LogFileMeter(MeterSpec spec, std::filesystem::path log, Clock& clock)
    : spec_(std::move(spec)), log_(std::move(log)), clock_(clock) {}

void LogFileMeter::start() { started_ = clock_.now(); }

SampleResult LogFileMeter::stop() {
    const double stopped = clock_.now();
    SampleResult out;
    out.trace = {spec_.meter_id, {}, spec_.nominal_interval};
    std::ifstream in(log_);
    if (!in) {
        out.failed = true;
        out.error = "cannot open meter log " + log_.string();
        return out;
    }
    try {
        const auto full = ingest_meter_csv(in, spec_);
        const double margin = 2.0 * spec_.nominal_interval;
        for (const auto& s : full.samples) {
            if (s.timestamp >= started_ - margin && s.timestamp <= stopped + margin) {
                out.trace.samples.push_back(s);
            }
        }
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

} // namespace vcenergy
