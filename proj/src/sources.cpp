#include "vcenergy/sources.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fcntl.h>
#include <stdexcept>
#include <unistd.h>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace fs = std::filesystem;

std::string read_sysfs_file(const fs::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
        const int err = errno;
        if (err == EACCES || err == EPERM) {
            throw PermissionDenied("cannot read " + path.string() + ": " + std::strerror(err));
        }
        throw DomainUnavailable("cannot read " + path.string() + ": " + std::strerror(err));
    }
    std::string out;
    char buf[256];
    for (;;) {
        const ssize_t n = ::read(fd, buf, sizeof buf);
        if (n < 0) {
            const int err = errno;
            ::close(fd);
            if (err == EACCES || err == EPERM) {
                throw PermissionDenied("cannot read " + path.string() + ": " + std::strerror(err));
            }
            throw Error("read failed on " + path.string() + ": " + std::strerror(err));
        }
        if (n == 0) {
            break;
        }
        out.append(buf, static_cast<std::size_t>(n));
    }
    ::close(fd);
    return out;
}

namespace {

std::uint64_t parse_counter(const std::string& text, const fs::path& path) {
    std::size_t i = 0;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
    std::uint64_t value = 0;
    std::size_t digits = 0;
    for (; i < text.size() && text[i] >= '0' && text[i] <= '9'; ++i, ++digits) {
        value = value * 10 + static_cast<std::uint64_t>(text[i] - '0');
    }
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
    }
    if (digits == 0 || i != text.size()) {
        throw ParseError("unexpected contents in " + path.string());
    }
    return value;
}

std::string_view subzone_name(PowerDomain domain) {
    switch (domain) {
    case PowerDomain::pp0: return "core";
    case PowerDomain::pp1: return "uncore";
    case PowerDomain::dram: return "dram";
    case PowerDomain::pkg: break;
    }
    return {};
}

std::string strip(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.pop_back();
    }
    return s;
}

} // namespace

PowercapReader::PowercapReader(fs::path root, FileReader reader, int package)
    : root_(std::move(root)), reader_(std::move(reader)), package_(package) {}

fs::path PowercapReader::zone_for(PowerDomain domain) const {
    const std::string package_zone = "intel-rapl:" + std::to_string(package_);
    if (domain == PowerDomain::pkg) {
        const auto zone = root_ / package_zone;
        try {
            reader_(zone / "name");
        } catch (const DomainUnavailable&) {
            throw DomainUnavailable("power domain PKG not exposed under " + root_.string());
        }
        return zone;
    }
    // Subzones are numbered by enumeration order, so match on the name file.
    for (int i = 0; i < 16; ++i) {
        const auto zone = root_ / (package_zone + ":" + std::to_string(i));
        std::string name;
        try {
            name = reader_(zone / "name");
        } catch (const DomainUnavailable&) {
            continue;
        }
        if (strip(name) == subzone_name(domain)) {
            return zone;
        }
    }
    throw DomainUnavailable("power domain " + std::string(to_string(domain)) +
                            " not exposed under " + root_.string());
}

CounterReading PowercapReader::read(PowerDomain domain, Clock& clock) const {
    const auto zone = zone_for(domain);
    CounterReading reading;
    reading.wrap_limit = parse_counter(reader_(zone / "max_energy_range_uj"), zone / "max_energy_range_uj");
    const double before = clock.now();
    reading.counter = parse_counter(reader_(zone / "energy_uj"), zone / "energy_uj");
    const double after = clock.now();
    reading.timestamp = 0.5 * (before + after);
    if (reading.wrap_limit == 0 || reading.counter >= reading.wrap_limit) {
        throw ParseError("counter " + std::to_string(reading.counter) + " outside wrap range of " +
                         zone.string());
    }
    return reading;
}

CounterReading read_counter(PowerDomain domain, const PowercapReader& reader, Clock& clock) {
    return reader.read(domain, clock);
}

double counter_delta_joules(std::uint64_t from, std::uint64_t to, std::uint64_t wrap_limit) {
    const std::uint64_t delta = to >= from ? to - from : (wrap_limit - from) + to;
    return static_cast<double>(delta) / 1e6;
}

PowerTrace counters_to_power(std::span<const CounterReading> readings, std::string meter_id,
                             double nominal_interval) {
    if (readings.size() < 2) {
        throw InsufficientSamples("at least two counter readings are needed, got " +
                                  std::to_string(readings.size()));
    }
    const auto wrap = readings.front().wrap_limit;
    PowerTrace trace{std::move(meter_id), {}, nominal_interval};
    trace.samples.reserve(readings.size() - 1);
    for (std::size_t i = 0; i < readings.size(); ++i) {
        const auto& r = readings[i];
        if (r.wrap_limit != wrap) {
            throw ParseError("reading " + std::to_string(i) + " has a different wrap limit");
        }
        if (r.counter >= wrap) {
            throw ParseError("reading " + std::to_string(i) + " exceeds its wrap limit");
        }
        if (i == 0) {
            continue;
        }
        const auto& prev = readings[i - 1];
        const double dt = r.timestamp - prev.timestamp;
        if (!(dt > 0.0)) {
            throw ParseError("non-increasing timestamp at reading " + std::to_string(i));
        }
        const double joules = counter_delta_joules(prev.counter, r.counter, wrap);
        trace.samples.push_back({0.5 * (prev.timestamp + r.timestamp), joules / dt});
    }
    return trace;
}

CounterProbe::CounterProbe(PowercapReader reader, std::vector<PowerDomain> domains)
    : reader_(std::move(reader)), domains_(std::move(domains)) {
    if (domains_.empty()) {
        throw std::invalid_argument("counter probe needs at least one power domain");
    }
}

std::optional<PowerSample> CounterProbe::poll(Clock& clock) {
    std::vector<CounterReading> current;
    current.reserve(domains_.size());
    const double before = clock.now();
    for (auto d : domains_) {
        current.push_back(reader_.read(d, clock));
    }
    const double t = 0.5 * (before + clock.now());
    for (auto& r : current) {
        r.timestamp = t;
    }
    if (previous_.empty()) {
        previous_ = std::move(current);
        return std::nullopt;
    }
    const double dt = t - previous_.front().timestamp;
    if (!(dt > 0.0)) {
        return std::nullopt;
    }
    double watts = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        watts += counter_delta_joules(previous_[i].counter, current[i].counter,
                                      current[i].wrap_limit) / dt;
    }
    const PowerSample sample{0.5 * (previous_.front().timestamp + t), watts};
    previous_ = std::move(current);
    return sample;
}

double SyntheticProfile::total_duration() const {
    double total = 0.0;
    for (const auto& s : segments) {
        total += s.duration;
    }
    return total;
}

void SyntheticProfile::validate() const {
    if (segments.empty()) {
        throw std::invalid_argument("synthetic profile has no segments");
    }
    for (const auto& s : segments) {
        if (!(s.duration > 0.0) || s.start_power < 0.0 || s.end_power < 0.0) {
            throw std::invalid_argument("synthetic segments need positive duration and non-negative power");
        }
    }
    if (noise_std < 0.0) {
        throw std::invalid_argument("noise_std must be non-negative");
    }
}

double profile_power(const SyntheticProfile& profile, double t) {
    if (profile.segments.empty()) {
        return 0.0;
    }
    if (t <= 0.0) {
        return profile.segments.front().start_power;
    }
    double offset = 0.0;
    for (const auto& s : profile.segments) {
        if (t <= offset + s.duration) {
            return s.start_power + (s.end_power - s.start_power) * (t - offset) / s.duration;
        }
        offset += s.duration;
    }
    return profile.segments.back().end_power;
}

SyntheticProbe::SyntheticProbe(SyntheticProfile profile)
    : profile_(std::move(profile)), rng_(profile_.seed) {
    profile_.validate();
}

std::optional<PowerSample> SyntheticProbe::poll(Clock& clock) {
    const double now = clock.now();
    if (!origin_) {
        origin_ = now;
    }
    double p = profile_power(profile_, now - *origin_);
    if (profile_.noise_std > 0.0) {
        p += std::normal_distribution<double>(0.0, profile_.noise_std)(rng_);
    }
    return PowerSample{now, std::max(p, 0.0)};
}

void SyntheticProbe::reset() {
    origin_.reset();
    rng_.seed(profile_.seed);
}

SampleResult sample_power(PowerProbe& probe, Clock& clock, double interval, std::stop_token stop,
                          std::latch* first_poll) {
    if (!(interval > 0.0)) {
        throw std::invalid_argument("sampling interval must be positive");
    }
    SampleResult result;
    result.trace.nominal_interval = interval;
    auto release = [&] {
        if (first_poll) {
            first_poll->count_down();
            first_poll = nullptr;
        }
    };
    double next = clock.now();
    while (!stop.stop_requested()) {
        try {
            if (auto s = probe.poll(clock)) {
                auto& samples = result.trace.samples;
                if (samples.empty() || s->timestamp > samples.back().timestamp) {
                    samples.push_back(*s);
                }
            }
        } catch (const std::exception& e) {
            result.failed = true;
            result.error = e.what();
            break;
        }
        release();
        next += interval;
        if (!clock.wait_until(next, stop)) {
            break;
        }
    }
    release();
    return result;
}

PowerTrace ingest_meter_csv(std::istream& in, const MeterSpec& spec) {
    return read_trace_csv(in, spec.meter_id, spec.nominal_interval);
}

PowerTrace synth_trace(const SyntheticProfile& profile, double interval, std::string meter_id) {
    if (!(interval > 0.0)) {
        throw std::invalid_argument("sampling interval must be positive");
    }
    profile.validate();
    PowerTrace trace{std::move(meter_id), {}, interval};
    std::mt19937_64 rng(profile.seed);
    std::normal_distribution<double> noise(0.0, profile.noise_std > 0.0 ? profile.noise_std : 1.0);
    const double total = profile.total_duration();
    // Index-based times avoid accumulated drift; the tolerance keeps the end
    // point when total/interval is integral up to rounding.
    const auto count = static_cast<std::size_t>(std::floor(total / interval + 1e-9)) + 1;
    trace.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * interval;
        double p = profile_power(profile, t);
        if (profile.noise_std > 0.0) {
            p = std::max(p + noise(rng), 0.0);
        }
        trace.samples.push_back({t, p});
    }
    return trace;
}

} // namespace vcenergy
