#pragma once

// Statistical reliability of power-sample windows, duplication planning, and
// the repeat-until-reliable measurement loop.
//
// A window of N power samples with mean P and standard deviation s is accepted
// when
//
//     t_{alpha/2, N-1} * s / (2 * alpha * P)  <  N * sqrt(2 N)
//
// and additionally N >= n_min for the loop's stopping rule.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "vcenergy/clock.hpp"
#include "vcenergy/job.hpp"
#include "vcenergy/meters.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();

struct ReliabilityParams {
    double alpha = 0.05;
    int n_min = 30;
    int max_repetitions = 10;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

struct ReliabilityCheck {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double t_crit = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool satisfied = false; ///< lhs < rhs
};

/// Upper-tail Student-t quantile: P(T > q) = alpha_half with `df` degrees of
/// freedom. df = kInfiniteDf gives the normal quantile.
double t_critical(double alpha_half, double df);

/// Evaluates the criterion with df = n - 1 and t at alpha / 2.
/// Throws std::invalid_argument for n < 2, std < 0 or invalid params, and
/// InsufficientSamples when mean <= 0.
ReliabilityCheck check_reliability(std::size_t n, double mean, double std,
                                   const ReliabilityParams& params);

/// Copies needed so `n_min` samples at `interval` fit in the job:
/// max(1, ceil(n_min * interval / est_duration)).
int plan_duplication(double est_duration, double interval, int n_min);

struct ReliableMeasurement {
    std::vector<EnergyMeasurement> measurements; ///< one per meter, in meter order
    std::vector<ReliabilityCheck> checks;        ///< final pooled check per meter
    std::vector<PowerTrace> traces;              ///< all sessions per meter, concatenated
    std::vector<JobRecord> records;              ///< one per repetition
    int repetitions = 0;
};

struct WindowOptions {
    double max_gap_factor = 1.0; ///< max alignment gap as a multiple of the meter interval
};

/// Runs `job` repeatedly with every meter sampling each execution. Window
/// power samples are pooled across repetitions per meter; the loop stops once
/// every meter passes check_reliability with at least n_min pooled samples,
/// or after max_repetitions. Reported energy is the mean per-repetition energy.
/// Throws JobFailed (carrying the repetition index) or SamplerError.
ReliableMeasurement run_until_reliable(const JobSpec& job, Executor& executor,
                                       std::span<Meter* const> meters, Clock& clock,
                                       const ReliabilityParams& params,
                                       const WindowOptions& window = {});

} // namespace vcenergy
