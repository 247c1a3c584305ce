#pragma once

// Cross-meter statistics: correlation coefficients, a linear model predicting
// wall (HW) energy from chip (SW) energy, and the report files built on them.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vcenergy/pipeline.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

/// Sample Pearson correlation. Throws std::invalid_argument on length
/// mismatch, fewer than two points, or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b by pair enumeration. Throws std::invalid_argument when either
/// input is entirely tied.
double kendall(std::span<const double> x, std::span<const double> y);

/// Ordinary least squares hw ~ slope * sw + intercept, with R^2 and the mean
/// relative error of the fitted prediction. Needs >= 3 points, non-constant
/// sw, and hw > 0 everywhere.
FitResult fit_linear(std::span<const double> sw, std::span<const double> hw);

struct GroupResult {
    CorrelationReport correlation;
    FitResult fit;
};

struct GroupAnalysis {
    std::vector<GroupResult> groups; ///< x264/x265 x encode/decode order
    std::vector<std::string> warnings;
};

struct MeterPair {
    std::string hw; ///< wall-scope meter id
    std::string sw; ///< chip-scope meter id
};

/// Picks the single wall-scope and single chip-scope meter. Throws Error when
/// either is missing or ambiguous.
MeterPair pair_meters(const std::vector<MeterSpec>& meters);

/// Pairs HW and SW measurements by job id and analyses each (codec, process)
/// group. Unpaired jobs and groups with fewer than 3 pairs are skipped with a
/// warning.
GroupAnalysis correlate_groups(std::span<const MeasurementRow> rows, const MeterPair& meters);

/// codec,process,pcc,scc,kcc,r2,epsilon
void write_table2_csv(std::ostream& out, const GroupAnalysis& analysis);
/// codec,process,n_points,slope,intercept,r2,epsilon
void write_fits_csv(std::ostream& out, const GroupAnalysis& analysis);
/// bitrate_kbps,energy_j,codec,resolution,meter for one process.
void write_scatter_csv(std::ostream& out, std::span<const MeasurementRow> rows, Process process);

/// Plain-text summary: per-meter totals, Table-II style correlations, fits.
void write_summary(std::ostream& out, std::span<const MeasurementRow> rows,
                   const GroupAnalysis& analysis, const MeterPair& meters);

} // namespace vcenergy
