#include "vcenergy/align.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace {

double interpolate(const PowerSample& a, const PowerSample& b, double t) {
    return a.power + (b.power - a.power) * (t - a.timestamp) / (b.timestamp - a.timestamp);
}

// Power at a window boundary. Exact hits return the sample itself.
double boundary_power(const std::vector<PowerSample>& s, double t) {
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const PowerSample& p, double x) { return p.timestamp < x; });
    if (it == s.end()) {
        return s.back().power;
    }
    if (it->timestamp == t) {
        return it->power;
    }
    if (it == s.begin()) {
        return s.front().power;
    }
    return interpolate(*(it - 1), *it, t);
}

} // namespace

std::size_t nearest_timestamp(const PowerTrace& trace, double t, double max_gap) {
    if (trace.samples.empty()) {
        throw std::invalid_argument("nearest_timestamp on an empty trace");
    }
    if (!(max_gap > 0.0)) {
        throw std::invalid_argument("max_gap must be positive");
    }
    const auto& s = trace.samples;
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const PowerSample& p, double x) { return p.timestamp < x; });
    std::size_t best;
    if (it == s.end()) {
        best = s.size() - 1;
    } else if (it == s.begin()) {
        best = 0;
    } else {
        const auto after = static_cast<std::size_t>(it - s.begin());
        const double d_before = t - s[after - 1].timestamp;
        const double d_after = s[after].timestamp - t;
        best = d_before <= d_after ? after - 1 : after;
    }
    const double distance = std::abs(s[best].timestamp - t);
    if (distance > max_gap) {
        throw AlignmentError("no sample of meter '" + trace.meter_id + "' within " +
                             format_double(max_gap) + " s of t=" + format_double(t) +
                             " (nearest is " + format_double(distance) + " s away)");
    }
    return best;
}

PowerTrace extract_window(const PowerTrace& trace, double start, double end, double max_gap) {
    if (!(start < end)) {
        throw std::invalid_argument("window start must precede its end");
    }
    if (!(max_gap > 0.0)) {
        max_gap = trace.nominal_interval;
    }
    if (trace.samples.empty()) {
        throw AlignmentError("window [" + format_double(start) + ", " + format_double(end) +
                             "] has no coverage: trace is empty");
    }
    const auto& s = trace.samples;
    if (start < s.front().timestamp - max_gap || end > s.back().timestamp + max_gap ||
        end < s.front().timestamp || start > s.back().timestamp) {
        throw AlignmentError("window [" + format_double(start) + ", " + format_double(end) +
                             "] outside coverage of meter '" + trace.meter_id + "' [" +
                             format_double(s.front().timestamp) + ", " +
                             format_double(s.back().timestamp) + "]");
    }
    // Each boundary needs a sample within max_gap; a larger hole means an outage.
    nearest_timestamp(trace, start, max_gap);
    nearest_timestamp(trace, end, max_gap);

    PowerTrace window{trace.meter_id, {}, trace.nominal_interval};
    window.samples.push_back({start, boundary_power(s, start)});
    auto first = std::upper_bound(s.begin(), s.end(), start,
                                  [](double x, const PowerSample& p) { return x < p.timestamp; });
    for (auto it = first; it != s.end() && it->timestamp < end; ++it) {
        window.samples.push_back(*it);
    }
    window.samples.push_back({end, boundary_power(s, end)});
    return window;
}

Integration integrate_energy(const PowerTrace& window) {
    const auto& s = window.samples;
    if (s.size() < 2) {
        throw InsufficientSamples("energy integration needs at least two samples, got " +
                                  std::to_string(s.size()) +
                                  "; increase the duplication factor");
    }
    Integration out;
    out.n_samples = s.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        sum += s[i].power;
        if (i + 1 < s.size()) {
            out.energy += 0.5 * (s[i].power + s[i + 1].power) * (s[i + 1].timestamp - s[i].timestamp);
        }
    }
    out.mean_power = sum / static_cast<double>(s.size());
    double ss = 0.0;
    for (const auto& p : s) {
        ss += (p.power - out.mean_power) * (p.power - out.mean_power);
    }
    out.std_power = std::sqrt(ss / static_cast<double>(s.size() - 1));
    return out;
}

double measure_idle_baseline(const PowerTrace& trace) {
    if (trace.samples.size() < 2) {
        throw InsufficientSamples("idle baseline needs at least two samples, got " +
                                  std::to_string(trace.samples.size()));
    }
    double sum = 0.0;
    for (const auto& p : trace.samples) {
        sum += p.power;
    }
    return sum / static_cast<double>(trace.samples.size());
}

EnergyDecomposition decompose_energy(double e_total, double e_proc, double idle_power,
                                     double duration, Process process) {
    if (e_total < 0.0 || e_proc < 0.0) {
        throw std::invalid_argument("energies must be non-negative");
    }
    if (!(duration > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    if (idle_power < 0.0) {
        throw std::invalid_argument("idle power must be non-negative");
    }
    EnergyDecomposition d;
    d.e_total = e_total;
    d.e_proc = e_proc;
    switch (process) {
    case Process::encode:
        d.e_x = idle_power * duration;
        d.e_strg = e_total - e_proc - d.e_x;
        d.residual_negative = d.e_strg < 0.0;
        break;
    case Process::decode:
        d.e_strg = 0.0;
        d.e_x = e_total - e_proc;
        d.residual_negative = d.e_x < 0.0;
        break;
    case Process::idle:
        throw std::invalid_argument("decomposition applies to encode or decode jobs");
    }
    return d;
}

} // namespace vcenergy
