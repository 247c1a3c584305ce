#include "vcenergy/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "vcenergy/align.hpp"
#include "vcenergy/errors.hpp"

namespace vcenergy {

void ReliabilityParams::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) {
        throw ConfigError("reliability.alpha", "must lie in (0, 0.5)");
    }
    if (n_min < 2) {
        throw ConfigError("reliability.n_min", "must be at least 2");
    }
    if (max_repetitions < 1) {
        throw ConfigError("reliability.max_repetitions", "must be at least 1");
    }
}

double t_critical(double alpha_half, double df) {
    if (!(alpha_half > 0.0 && alpha_half < 0.5)) {
        throw std::invalid_argument("alpha_half must lie in (0, 0.5)");
    }
    if (std::isinf(df) && df > 0.0) {
        return boost::math::quantile(boost::math::complement(boost::math::normal(), alpha_half));
    }
    if (!(df >= 1.0)) {
        throw std::invalid_argument("degrees of freedom must be at least 1");
    }
    return boost::math::quantile(
        boost::math::complement(boost::math::students_t(df), alpha_half));
}

ReliabilityCheck check_reliability(std::size_t n, double mean, double std,
                                   const ReliabilityParams& params) {
    if (n < 2) {
        throw std::invalid_argument("reliability check needs n >= 2");
    }
    if (!(std >= 0.0)) {
        throw std::invalid_argument("standard deviation must be non-negative");
    }
    if (!(params.alpha > 0.0 && params.alpha < 0.5)) {
        throw std::invalid_argument("alpha must lie in (0, 0.5)");
    }
    if (!(mean > 0.0)) {
        throw InsufficientSamples("mean power must be positive for the reliability check");
    }
    ReliabilityCheck c;
    c.n = n;
    c.mean = mean;
    c.std = std;
    const double nd = static_cast<double>(n);
    c.t_crit = t_critical(params.alpha / 2.0, nd - 1.0);
    c.lhs = c.t_crit * std / (2.0 * params.alpha * mean);
    c.rhs = nd * std::sqrt(2.0 * nd);
    c.satisfied = c.lhs < c.rhs;
    return c;
}

int plan_duplication(double est_duration, double interval, int n_min) {
    if (!(est_duration > 0.0) || !(interval > 0.0)) {
        throw std::invalid_argument("duration and interval must be positive");
    }
    if (n_min < 2) {
        throw std::invalid_argument("n_min must be at least 2");
    }
    const double copies = static_cast<double>(n_min) * interval / est_duration;
    // Shave rounding noise so an exact ratio such as 15.000000000000002 stays 15.
    const double k = std::ceil(copies * (1.0 - 1e-12));
    return static_cast<int>(std::max(1.0, k));
}

namespace {

struct PooledStats {
    std::size_t n = 0;
    double sum = 0.0;
    std::vector<double> values;

    void add(const PowerTrace& window) {
        for (const auto& s : window.samples) {
            values.push_back(s.power);
            sum += s.power;
        }
        n = values.size();
    }

    double mean() const { return sum / static_cast<double>(n); }

    double stddev() const {
        const double m = mean();
        double ss = 0.0;
        for (double v : values) {
            ss += (v - m) * (v - m);
        }
        return std::sqrt(ss / static_cast<double>(n - 1));
    }
};

} // namespace

ReliableMeasurement run_until_reliable(const JobSpec& job, Executor& executor,
                                       std::span<Meter* const> meters, Clock& clock,
                                       const ReliabilityParams& params,
                                       const WindowOptions& window) {
    params.validate();
    if (meters.empty()) {
        throw std::invalid_argument("run_until_reliable needs at least one meter");
    }

    ReliableMeasurement out;
    const std::size_t m = meters.size();
    std::vector<PooledStats> pooled(m);
    std::vector<double> energy_sum(m, 0.0);
    out.checks.resize(m);
    out.traces.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.traces[i].meter_id = meters[i]->spec().meter_id;
        out.traces[i].nominal_interval = meters[i]->spec().nominal_interval;
    }

    std::vector<bool> reliable(m, false);
    for (int rep = 0; rep < params.max_repetitions; ++rep) {
        JobSpec current = job;
        current.repetition_index = rep;

        for (auto* meter : meters) {
            meter->start();
        }
        JobRecord record;
        try {
            record = run_job(current, executor, clock);
        } catch (...) {
            for (auto* meter : meters) {
                meter->stop();
            }
            throw;
        }
        std::vector<SampleResult> sessions;
        sessions.reserve(m);
        for (auto* meter : meters) {
            sessions.push_back(meter->stop());
        }
        out.records.push_back(record);
        ++out.repetitions;

        for (std::size_t i = 0; i < m; ++i) {
            const auto& spec = meters[i]->spec();
            if (sessions[i].failed) {
                throw SamplerError("meter '" + spec.meter_id + "' failed during '" + job.job_id +
                                   "' repetition " + std::to_string(rep) + ": " +
                                   sessions[i].error);
            }
            auto& merged = out.traces[i].samples;
            for (const auto& s : sessions[i].trace.samples) {
                if (merged.empty() || s.timestamp > merged.back().timestamp) {
                    merged.push_back(s);
                }
            }
            const auto win = extract_window(sessions[i].trace, record.start, record.end,
                                            window.max_gap_factor * spec.nominal_interval);
            const auto integ = integrate_energy(win);
            energy_sum[i] += integ.energy;
            pooled[i].add(win);
            out.checks[i] = check_reliability(pooled[i].n, pooled[i].mean(), pooled[i].stddev(), params);
            reliable[i] = out.checks[i].satisfied &&
                          pooled[i].n >= static_cast<std::size_t>(params.n_min);
        }
        if (std::all_of(reliable.begin(), reliable.end(), [](bool r) { return r; })) {
            break;
        }
    }

    out.measurements.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& em = out.measurements[i];
        em.job_id = job.job_id;
        em.meter_id = meters[i]->spec().meter_id;
        em.energy = energy_sum[i] / static_cast<double>(out.repetitions);
        em.n_samples = pooled[i].n;
        em.mean_power = out.checks[i].mean;
        em.std_power = out.checks[i].std;
        em.reliable = reliable[i];
        em.alpha = params.alpha;
    }
    return out;
}

} // namespace vcenergy
