#pragma once

// Core value types shared by the sources, alignment, reliability, orchestration
// and analysis layers, plus trace validation and flat-file serialization.
//
// Units are SI throughout: seconds (epoch-based wall clock), watts, joules.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vcenergy {

enum class Codec { x264, x265 };
enum class Process { encode, decode, idle };
enum class MeterKind { counter_software, external_hardware, synthetic };
enum class MeterScope { chip, wall };
enum class PowerDomain { pkg, pp0, pp1, dram };

std::string_view to_string(Codec codec);
std::string_view to_string(Process process);
std::string_view to_string(MeterKind kind);
std::string_view to_string(MeterScope scope);
std::string_view to_string(PowerDomain domain);

// Parsers accept exactly the strings produced by to_string (domains also
// accept upper case: "PKG"). They throw ParseError on anything else.
Codec parse_codec(std::string_view text);
Process parse_process(std::string_view text);
MeterKind parse_meter_kind(std::string_view text);
MeterScope parse_meter_scope(std::string_view text);
PowerDomain parse_power_domain(std::string_view text);

struct PowerSample {
    double timestamp = 0.0; ///< epoch seconds
    double power = 0.0;     ///< watts

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

struct PowerTrace {
    std::string meter_id;
    std::vector<PowerSample> samples;
    double nominal_interval = 0.0;

    bool empty() const noexcept { return samples.empty(); }
    std::size_t size() const noexcept { return samples.size(); }
    double front_time() const { return samples.front().timestamp; }
    double back_time() const { return samples.back().timestamp; }
};

struct MeterSpec {
    std::string meter_id;
    MeterKind kind = MeterKind::synthetic;
    MeterScope scope = MeterScope::chip;
    double nominal_interval = 0.1;
    std::vector<PowerDomain> domains; ///< counter_software only

    /// Throws ConfigError when nominal_interval <= 0 or the domain list
    /// disagrees with the kind.
    void validate() const;
};

struct Resolution {
    int width = 0;
    int height = 0;

    friend bool operator==(const Resolution&, const Resolution&) = default;
};

std::string to_string(Resolution r); ///< "1920x1080"
Resolution parse_resolution(std::string_view text);

struct JobParams {
    Codec codec = Codec::x264;
    Process process = Process::encode;
    int width = 3840;
    int height = 2160;
    int fps = 30;
    int crf = 30;
    std::string pixel_format = "yuv420";
    int duplication_factor = 1;

    Resolution resolution() const { return {width, height}; }
};

struct JobRecord {
    std::string job_id;
    JobParams params;
    double start = 0.0;
    double end = 0.0;
    int exit_status = 0;
    std::uint64_t output_size = 0; ///< bytes, encode only
    int repetition_index = 0;
    std::string sequence_id;

    double duration() const { return end - start; }
};

struct EnergyMeasurement {
    std::string job_id;
    std::string meter_id;
    double energy = 0.0;     ///< joules
    std::size_t n_samples = 0;
    double mean_power = 0.0; ///< watts
    double std_power = 0.0;  ///< watts, divisor n-1
    bool reliable = false;
    double alpha = 0.05;
};

struct EnergyDecomposition {
    double e_total = 0.0;
    double e_proc = 0.0;
    double e_strg = 0.0;
    double e_x = 0.0;
    bool residual_negative = false;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double epsilon = 0.0;
};

struct CorrelationReport {
    Codec codec = Codec::x264;
    Process process = Process::encode;
    double pcc = 0.0;
    double scc = 0.0;
    double kcc = 0.0;
    std::size_t n_points = 0;
};

// Table I parameter sets.
inline constexpr Resolution kResolutions[] = {{3840, 2160}, {1920, 1080}, {1280, 720}};
inline constexpr int kFrameRates[] = {15, 24, 30, 60};
inline constexpr int kCrfValues[] = {10, 20, 30, 40, 50};

bool is_supported_resolution(Resolution r);
bool is_supported_fps(int fps);
bool is_supported_crf(int crf);

/// Throws ConfigError naming the offending field when params fall outside
/// the supported sets. Idle params are not checked.
void validate_job_params(const JobParams& params);

// ---------------------------------------------------------------------------
// Trace validation

/// Consecutive samples further apart than this multiple of the nominal
/// interval are reported as gaps.
inline constexpr double kGapToleranceFactor = 3.0;

struct TraceViolation {
    enum class Kind { non_increasing_timestamp, gap, negative_power, non_finite, bad_interval };

    Kind kind;
    std::size_t index; ///< offending sample index; 0 for bad_interval
    std::string message;
};

std::vector<TraceViolation> validate_trace(const PowerTrace& trace);

// ---------------------------------------------------------------------------
// Serialization

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

/// Accepts epoch seconds ("1693569600.5") or ISO-8601 UTC
/// ("2023-09-01T12:00:00.500Z", "+00:00" suffix or none). Throws ParseError.
double parse_timestamp(std::string_view text);

/// Writes `timestamp,power_w` CSV with epoch timestamps.
void write_trace_csv(std::ostream& out, const PowerTrace& trace);

/// Reads `timestamp,power_w` CSV; the header line is optional. Enforces
/// strictly increasing timestamps and non-negative finite power; errors carry
/// the 1-based line number.
PowerTrace read_trace_csv(std::istream& in, std::string meter_id, double nominal_interval);

void to_json(nlohmann::json& j, const JobParams& p);
void from_json(const nlohmann::json& j, JobParams& p);
void to_json(nlohmann::json& j, const JobRecord& r);
void from_json(const nlohmann::json& j, JobRecord& r);
void to_json(nlohmann::json& j, const MeterSpec& m);
void from_json(const nlohmann::json& j, MeterSpec& m);

void write_jobs_jsonl(std::ostream& out, const std::vector<JobRecord>& records);
std::vector<JobRecord> read_jobs_jsonl(std::istream& in);

} // namespace vcenergy
