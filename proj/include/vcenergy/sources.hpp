#pragma once

// Producers of PowerTraces: on-chip energy counters read through the Linux
// powercap interface, external meter logs, and a seeded synthetic generator.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <latch>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "vcenergy/clock.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

struct CounterReading {
    double timestamp = 0.0;        ///< seconds
    std::uint64_t counter = 0;     ///< microjoules, wraps at wrap_limit
    std::uint64_t wrap_limit = 0;  ///< microjoules
};

/// Reads a small sysfs file and returns its contents. Throws
/// DomainUnavailable when missing and PermissionDenied on EACCES/EPERM.
using FileReader = std::function<std::string(const std::filesystem::path&)>;

std::string read_sysfs_file(const std::filesystem::path& path);

/// Per-domain energy counters under a powercap root
/// (`<root>/intel-rapl:N/{name,energy_uj,max_energy_range_uj}`).
class PowercapReader {
public:
    explicit PowercapReader(std::filesystem::path root = "/sys/class/powercap",
                            FileReader reader = read_sysfs_file, int package = 0);

    /// Zone directory for the domain. PKG is `intel-rapl:<package>`; PP0, PP1
    /// and DRAM are the subzones named "core", "uncore" and "dram".
    std::filesystem::path zone_for(PowerDomain domain) const;

    CounterReading read(PowerDomain domain, Clock& clock) const;

private:
    std::filesystem::path root_;
    FileReader reader_;
    int package_;
};

/// Current counter value for `domain`, timestamped at the midpoint of the read.
CounterReading read_counter(PowerDomain domain, const PowercapReader& reader, Clock& clock);

/// Converts consecutive counter readings to interval-average power samples
/// placed at interval midpoints. At most one wrap per interval is assumed.
/// Throws InsufficientSamples for fewer than two readings and ParseError for
/// non-increasing timestamps, mismatched wrap limits or out-of-range counters.
PowerTrace counters_to_power(std::span<const CounterReading> readings, std::string meter_id = {},
                             double nominal_interval = 0.0);

/// Joules between two consecutive counter values, wrap-corrected.
double counter_delta_joules(std::uint64_t from, std::uint64_t to, std::uint64_t wrap_limit);

// ---------------------------------------------------------------------------
// Live probes

/// One pollable power source. Counter-backed probes need two reads before the
/// first sample exists, so poll may return nothing.
class PowerProbe {
public:
    virtual ~PowerProbe() = default;

    virtual std::optional<PowerSample> poll(Clock& clock) = 0;

    /// Forget state from a previous session.
    virtual void reset() {}
};

class CounterProbe final : public PowerProbe {
public:
    CounterProbe(PowercapReader reader, std::vector<PowerDomain> domains);

    std::optional<PowerSample> poll(Clock& clock) override;
    void reset() override { previous_.clear(); }

private:
    PowercapReader reader_;
    std::vector<PowerDomain> domains_;
    std::vector<CounterReading> previous_;
};

struct SyntheticSegment {
    double duration = 0.0;
    double start_power = 0.0;
    double end_power = 0.0;
};

struct SyntheticProfile {
    std::vector<SyntheticSegment> segments;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    double total_duration() const;
    void validate() const;
};

/// Noise-free profile power at offset `t` seconds from the profile start.
/// Held at the last value past the end and the first value before zero.
double profile_power(const SyntheticProfile& profile, double t);

/// Evaluates the profile (plus seeded noise) at the elapsed time since the
/// first poll after construction or reset.
class SyntheticProbe final : public PowerProbe {
public:
    explicit SyntheticProbe(SyntheticProfile profile);

    std::optional<PowerSample> poll(Clock& clock) override;
    void reset() override;

private:
    SyntheticProfile profile_;
    std::mt19937_64 rng_;
    std::optional<double> origin_;
};

struct SampleResult {
    PowerTrace trace;
    bool failed = false;
    std::string error;
};

/// Polls `probe` every `interval` seconds until `stop` is requested. A probe
/// failure ends sampling and returns the partial trace with `failed` set.
/// `first_poll`, when given, is counted down once the first poll returned.
/// Throws std::invalid_argument when interval <= 0.
SampleResult sample_power(PowerProbe& probe, Clock& clock, double interval, std::stop_token stop,
                          std::latch* first_poll = nullptr);

// ---------------------------------------------------------------------------
// Offline sources

/// Reads an external meter log (`timestamp,power_w`) into a trace tagged with
/// the meter's id and interval.
PowerTrace ingest_meter_csv(std::istream& in, const MeterSpec& spec);

/// Samples the profile at 0, interval, 2*interval, ... up to its total
/// duration. Deterministic for a given (profile, interval); noise is clamped
/// so power never goes negative.
PowerTrace synth_trace(const SyntheticProfile& profile, double interval, std::string meter_id = "synthetic");

} // namespace vcenergy
