#pragma once

// End-to-end measurement pipeline: idle baseline, input preparation,
// duplication planning, metered encode/decode runs, and dataset persistence.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vcenergy/commands.hpp"
#include "vcenergy/job.hpp"
#include "vcenergy/meters.hpp"
#include "vcenergy/reliability.hpp"
#include "vcenergy/sources.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

struct MeterConfig {
    MeterSpec spec;
    /// Powercap root for counter_software, log file for external_hardware.
    std::filesystem::path source;
    /// Profile for live synthetic meters; a constant 50 W when absent.
    std::optional<SyntheticProfile> profile;
};

struct PipelineConfig {
    std::vector<SequenceSpec> sequences;
    std::vector<Codec> codecs;
    std::vector<int> crf_set;
    std::vector<Resolution> resolutions;
    std::vector<MeterConfig> meters;
    ReliabilityParams reliability;
    std::string encoder_binary = "ffmpeg";
    std::filesystem::path output_dir;
    double idle_duration = 10.0;  ///< seconds of idle sampling before the first job
    double max_gap_factor = 1.0;  ///< alignment tolerance in meter intervals

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// One row of measurements.csv.
struct MeasurementRow {
    EnergyMeasurement measurement;
    JobParams params;
    double bitrate_kbps = 0.0;
};

struct IdleBaseline {
    std::string meter_id;
    double mean_power = 0.0;
    std::size_t n_samples = 0;
    double start = 0.0;
    double end = 0.0;
};

struct CellDecomposition {
    std::string job_id;
    Process process = Process::encode;
    double duration = 0.0; ///< mean repetition duration
    EnergyDecomposition parts;
};

struct CellFailure {
    std::string cell_id;
    std::string stage;
    std::string message;
};

struct TraceFile {
    std::string meter_id;
    std::string job_id;
    PowerTrace trace;
};

struct Dataset {
    std::vector<MeterSpec> meters;
    std::vector<IdleBaseline> idle;
    std::vector<JobRecord> jobs;
    std::vector<MeasurementRow> measurements;
    std::vector<TraceFile> traces;
    std::vector<CellDecomposition> decompositions;
    std::vector<CellFailure> failures;
};

/// Everything the pipeline drives. Meters are in config order.
struct PipelineContext {
    Executor& executor;
    Clock& clock;
    std::vector<Meter*> meters;
    std::ostream* log = nullptr;
};

/// "<sequence>_<codec>_<WxH>_<fps>fps_crf<crf>"
std::string cell_id(const SequenceSpec& seq, Codec codec, Resolution r, int crf);

/// Runs every sequence x resolution x codec x crf cell sequentially and writes
/// the dataset to config.output_dir. Cell failures are recorded and skipped.
/// Throws ConfigError before any job when the config is invalid.
Dataset run_pipeline(const PipelineConfig& config, PipelineContext& context);

/// Idle baseline per meter: sample for `duration` seconds with no job running.
std::vector<IdleBaseline> measure_idle(std::vector<Meter*> meters, Clock& clock, double duration,
                                       std::vector<TraceFile>* traces = nullptr);

/// Live meters for `measure` and `idle`.
std::vector<std::unique_ptr<Meter>> make_meters(const PipelineConfig& config, Clock& clock);

// ---------------------------------------------------------------------------
// Dataset files

inline constexpr const char* kMeasurementsHeader =
    "job_id,meter_id,process,codec,width,height,fps,crf,energy_j,n_samples,mean_w,std_w,reliable,"
    "bitrate_kbps";

/// jobs.jsonl, trace_<meter>_<job>.csv, measurements.csv, meters.json,
/// idle.csv, decomposition.csv, failures.jsonl.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

std::string trace_file_name(const std::string& meter_id, const std::string& job_id);

void write_measurements_csv(std::ostream& out, const std::vector<MeasurementRow>& rows);
std::vector<MeasurementRow> read_measurements_csv(std::istream& in);
std::vector<MeasurementRow> read_measurements_csv(const std::filesystem::path& path);

std::vector<MeterSpec> read_meters_json(const std::filesystem::path& path);
void write_meters_json(const std::filesystem::path& path, const std::vector<MeterSpec>& meters);

} // namespace vcenergy

namespace vcenergy {

/// Energy per job from an externally logged trace: the trace is windowed on
/// every repetition of each job in `jobs`, and repetitions are pooled the same
/// way run_until_reliable does. Jobs the trace does not cover are reported in
/// `warnings` and skipped. Bitrates are left at zero.
std::vector<MeasurementRow> measure_from_trace(const std::vector<JobRecord>& jobs,
                                               const PowerTrace& trace,
                                               const ReliabilityParams& params,
                                               double max_gap_factor,
                                               std::vector<std::string>* warnings = nullptr);

/// Removes the files a dataset or report consists of from `dir`, leaving
/// anything else alone.
void clear_dataset(const std::filesystem::path& dir);

} // namespace vcenergy
