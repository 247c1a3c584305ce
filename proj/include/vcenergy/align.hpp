#pragma once

// Job-window alignment, energy integration and the processor / storage /
// background energy split.

#include <cstddef>

#include "vcenergy/trace.hpp"

namespace vcenergy {

/// Index of the sample closest to `t`; ties go to the earlier sample.
/// Throws AlignmentError when the closest sample is more than `max_gap` away,
/// std::invalid_argument for an empty trace or max_gap <= 0.
std::size_t nearest_timestamp(const PowerTrace& trace, double t, double max_gap);

/// Samples strictly inside (start, end) plus interpolated boundary samples at
/// exactly `start` and `end`. A boundary before the first (after the last)
/// sample takes that sample's power when it lies within `max_gap`.
/// max_gap <= 0 selects the trace's nominal interval.
PowerTrace extract_window(const PowerTrace& trace, double start, double end, double max_gap = 0.0);

struct Integration {
    double energy = 0.0;      ///< joules, trapezoidal rule
    std::size_t n_samples = 0;
    double mean_power = 0.0;  ///< arithmetic mean of the window's samples
    double std_power = 0.0;   ///< sample standard deviation (n - 1)
};

/// Throws InsufficientSamples for fewer than two samples.
Integration integrate_energy(const PowerTrace& window);

/// Mean power of a trace recorded with no job running.
double measure_idle_baseline(const PowerTrace& trace);

/// Encode: E_x = idle_power * duration, E_strg = e_total - e_proc - E_x.
/// Decode: E_strg = 0, E_x = e_total - e_proc.
/// Negative residuals are kept and flagged.
EnergyDecomposition decompose_energy(double e_total, double e_proc, double idle_power,
                                     double duration, Process process);

} // namespace vcenergy
