#include "vcenergy/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "vcenergy/align.hpp"
#include "vcenergy/analysis.hpp"
#include "vcenergy/config.hpp"
#include "vcenergy/errors.hpp"
#include "vcenergy/pipeline.hpp"
#include "vcenergy/simulation.hpp"

namespace vcenergy::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kExitCodes = R"(Exit codes:
  0  success
  1  internal error
  2  usage error
  3  configuration error (field path printed)
  4  input error (missing or malformed file)
  5  pipeline finished but some cells failed (see failures.jsonl)
  6  analysis error (not enough paired HW/SW data)
  7  platform error (power domain unavailable, permission denied, spawn failure))";

struct AnalysisInputs {
    fs::path in;
    fs::path out;
    std::string hw_meter;
    std::string sw_meter;
};

std::ofstream open_for_write(const fs::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw Error("cannot write " + path.string());
    }
    return f;
}

MeterPair resolve_pair(const AnalysisInputs& a) {
    if (!a.hw_meter.empty() && !a.sw_meter.empty()) {
        return {a.hw_meter, a.sw_meter};
    }
    auto pair = pair_meters(read_meters_json(a.in / "meters.json"));
    if (!a.hw_meter.empty()) {
        pair.hw = a.hw_meter;
    }
    if (!a.sw_meter.empty()) {
        pair.sw = a.sw_meter;
    }
    return pair;
}

class AnalysisError : public Error {
public:
    using Error::Error;
};

GroupAnalysis analyse(const AnalysisInputs& a, std::vector<MeasurementRow>& rows, MeterPair& pair,
                      std::ostream& err) {
    rows = read_measurements_csv(a.in / "measurements.csv");
    try {
        pair = resolve_pair(a);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw AnalysisError(e.what());
    }
    auto analysis = correlate_groups(rows, pair);
    for (const auto& w : analysis.warnings) {
        err << "warning: " << w << '\n';
    }
    return analysis;
}

int cmd_analyze(const AnalysisInputs& a, std::ostream& out, std::ostream& err) {
    std::vector<MeasurementRow> rows;
    MeterPair pair;
    const auto analysis = analyse(a, rows, pair, err);
    if (analysis.groups.empty()) {
        throw AnalysisError("no (codec, process) group has 3 or more HW/SW pairs");
    }
    fs::create_directories(a.out);
    {
        auto f = open_for_write(a.out / "table2.csv");
        write_table2_csv(f, analysis);
    }
    {
        auto f = open_for_write(a.out / "fits.csv");
        write_fits_csv(f, analysis);
    }
    out << (a.out / "table2.csv").string() << '\n' << (a.out / "fits.csv").string() << '\n';
    return kOk;
}

int cmd_report(const AnalysisInputs& a, std::ostream& out, std::ostream& err) {
    std::vector<MeasurementRow> rows;
    MeterPair pair;
    const auto analysis = analyse(a, rows, pair, err);
    fs::create_directories(a.out);
    for (auto process : {Process::encode, Process::decode}) {
        const auto path = a.out / ("scatter_" + std::string(to_string(process)) + ".csv");
        auto f = open_for_write(path);
        write_scatter_csv(f, rows, process);
        out << path.string() << '\n';
    }
    const auto summary = a.out / "summary.txt";
    {
        auto f = open_for_write(summary);
        write_summary(f, rows, analysis, pair);
    }
    out << summary.string() << '\n';
    return kOk;
}

void print_dataset_paths(const Dataset& d, const fs::path& dir, std::ostream& out) {
    for (const char* name : {"meters.json", "jobs.jsonl", "measurements.csv", "idle.csv",
                             "decomposition.csv", "failures.jsonl"}) {
        out << (dir / name).string() << '\n';
    }
    out << dir.string() << "/trace_*.csv (" << d.traces.size() << " files)\n";
}

int cmd_measure(const fs::path& config_path, bool quiet, std::ostream& out, std::ostream& err) {
    const auto config = parse_config(config_path);
    SystemClock clock;
    auto meters = make_meters(config, clock);
    std::vector<Meter*> handles;
    for (auto& m : meters) {
        handles.push_back(m.get());
    }
    clear_dataset(config.output_dir);
    fs::create_directories(config.output_dir);
    ProcessExecutor executor(config.output_dir / "encoder.log");
    PipelineContext ctx{executor, clock, handles, quiet ? nullptr : &err};
    const auto data = run_pipeline(config, ctx);
    print_dataset_paths(data, config.output_dir, out);
    if (!data.failures.empty()) {
        err << data.failures.size() << " cell(s) failed; see failures.jsonl\n";
        return kCellsFailed;
    }
    return kOk;
}

int cmd_idle(const fs::path& config_path, std::optional<double> duration, fs::path out_dir,
             std::ostream& out, std::ostream& err) {
    const auto config = parse_config(config_path);
    SystemClock clock;
    auto meters = make_meters(config, clock);
    std::vector<Meter*> handles;
    for (auto& m : meters) {
        handles.push_back(m.get());
    }
    if (out_dir.empty()) {
        out_dir = config.output_dir;
    }
    fs::create_directories(out_dir);
    std::vector<TraceFile> traces;
    const auto idle = measure_idle(handles, clock, duration.value_or(config.idle_duration), &traces);
    const auto idle_csv = out_dir / "idle.csv";
    {
        auto f = open_for_write(idle_csv);
        f << "meter_id,mean_w,n_samples,start,end\n";
        for (const auto& i : idle) {
            f << i.meter_id << ',' << format_double(i.mean_power) << ',' << i.n_samples << ','
              << format_double(i.start) << ',' << format_double(i.end) << '\n';
            err << "idle baseline " << i.meter_id << ": " << format_double(i.mean_power) << " W over "
                << i.n_samples << " samples\n";
        }
    }
    out << idle_csv.string() << '\n';
    for (const auto& t : traces) {
        const auto path = out_dir / trace_file_name(t.meter_id, t.job_id);
        auto f = open_for_write(path);
        write_trace_csv(f, t.trace);
        out << path.string() << '\n';
    }
    return kOk;
}

struct IngestArgs {
    fs::path dataset;
    fs::path log;
    MeterSpec spec{"", MeterKind::external_hardware, MeterScope::wall, 0.5, {}};
    ReliabilityParams reliability;
    double max_gap_factor = 1.0;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
    a.spec.validate();
    std::ifstream log(a.log);
    if (!log) {
        throw Error("cannot open meter log " + a.log.string());
    }
    const auto trace = ingest_meter_csv(log, a.spec);
    for (const auto& v : validate_trace(trace)) {
        if (v.kind == TraceViolation::Kind::gap) {
            err << "warning: " << v.message << '\n';
        }
    }
    std::ifstream jobs_in(a.dataset / "jobs.jsonl");
    if (!jobs_in) {
        throw Error("cannot open " + (a.dataset / "jobs.jsonl").string());
    }
    const auto jobs = read_jobs_jsonl(jobs_in);

    std::vector<std::string> warnings;
    auto fresh = measure_from_trace(jobs, trace, a.reliability, a.max_gap_factor, &warnings);
    for (const auto& w : warnings) {
        err << "warning: " << w << '\n';
    }

    const auto measurements = a.dataset / "measurements.csv";
    std::vector<MeasurementRow> rows;
    if (fs::exists(measurements)) {
        rows = read_measurements_csv(measurements);
    }
    std::erase_if(rows, [&](const MeasurementRow& r) { return r.measurement.meter_id == a.spec.meter_id; });
    for (auto& r : fresh) {
        for (const auto& existing : rows) {
            if (existing.measurement.job_id == r.measurement.job_id) {
                r.bitrate_kbps = existing.bitrate_kbps;
                break;
            }
        }
    }
    rows.insert(rows.end(), fresh.begin(), fresh.end());
    {
        auto f = open_for_write(measurements);
        write_measurements_csv(f, rows);
    }

    std::vector<MeterSpec> meters;
    if (fs::exists(a.dataset / "meters.json")) {
        meters = read_meters_json(a.dataset / "meters.json");
    }
    std::erase_if(meters, [&](const MeterSpec& m) { return m.meter_id == a.spec.meter_id; });
    meters.push_back(a.spec);
    write_meters_json(a.dataset / "meters.json", meters);

    // Per-job slices of the log, covering every repetition of the job.
    std::map<std::string, std::pair<double, double>> spans;
    for (const auto& j : jobs) {
        auto [it, inserted] = spans.try_emplace(j.job_id, j.start, j.end);
        if (!inserted) {
            it->second.first = std::min(it->second.first, j.start);
            it->second.second = std::max(it->second.second, j.end);
        }
    }
    const double margin = 2.0 * a.spec.nominal_interval;
    std::size_t written = 0;
    for (const auto& r : fresh) {
        const auto [start, end] = spans[r.measurement.job_id];
        PowerTrace slice{trace.meter_id, {}, trace.nominal_interval};
        for (const auto& s : trace.samples) {
            if (s.timestamp >= start - margin && s.timestamp <= end + margin) {
                slice.samples.push_back(s);
            }
        }
        auto f = open_for_write(a.dataset / trace_file_name(a.spec.meter_id, r.measurement.job_id));
        write_trace_csv(f, slice);
        ++written;
    }
    out << measurements.string() << '\n' << (a.dataset / "meters.json").string() << '\n';
    out << a.dataset.string() << "/trace_" << a.spec.meter_id << "_*.csv (" << written << " files)\n";
    err << "ingested " << trace.size() << " samples; " << fresh.size() << " of " << spans.size()
        << " jobs measured\n";
    return kOk;
}

int cmd_simulate(const SimulationOptions& options, bool quiet, std::ostream& out, std::ostream& err) {
    clear_dataset(options.output_dir);
    const auto data = run_simulation(options, quiet ? nullptr : &err);
    print_dataset_paths(data, options.output_dir, out);
    if (!data.failures.empty()) {
        return kCellsFailed;
    }
    return kOk;
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Energy measurement harness for video encode/decode jobs"};
    app.footer(kExitCodes);
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress progress logging");

    fs::path config_path;
    auto* measure = app.add_subcommand("measure", "Run the measurement pipeline on real hardware");
    measure->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();

    std::optional<double> idle_duration;
    fs::path idle_out;
    auto* idle = app.add_subcommand("idle", "Measure the idle baseline of every configured meter");
    idle->add_option("-c,--config", config_path, "Pipeline config (JSON)")->required();
    idle->add_option("-d,--duration", idle_duration, "Sampling duration in seconds");
    idle->add_option("-o,--out", idle_out, "Output directory (default: config output_dir)");

    IngestArgs ingest_args;
    std::string ingest_scope = "wall";
    auto* ingest = app.add_subcommand("ingest", "Add an external meter log to a dataset");
    ingest->add_option("-d,--dataset", ingest_args.dataset, "Dataset directory")->required();
    ingest->add_option("-l,--log", ingest_args.log, "Meter CSV (timestamp,power_w)")->required();
    ingest->add_option("-m,--meter-id", ingest_args.spec.meter_id, "Meter id")->required();
    ingest->add_option("-i,--interval", ingest_args.spec.nominal_interval, "Nominal sampling interval [s]")
        ->capture_default_str();
    ingest->add_option("-s,--scope", ingest_scope, "Meter scope: wall or chip")
        ->check(CLI::IsMember({"wall", "chip"}))
        ->capture_default_str();
    ingest->add_option("--alpha", ingest_args.reliability.alpha, "Confidence bound")->capture_default_str();
    ingest->add_option("--n-min", ingest_args.reliability.n_min, "Minimum pooled samples")
        ->capture_default_str();

    AnalysisInputs analysis;
    auto* analyze = app.add_subcommand("analyze", "HW vs SW correlations and linear fits (table2.csv)");
    auto* report = app.add_subcommand("report", "Scatter data and a human-readable summary");
    for (auto* sub : {analyze, report}) {
        sub->add_option("-i,--in", analysis.in, "Dataset directory")->required();
        sub->add_option("-o,--out", analysis.out, "Output directory (default: --in)");
        sub->add_option("--hw-meter", analysis.hw_meter, "Wall-scope meter id");
        sub->add_option("--sw-meter", analysis.sw_meter, "Chip-scope meter id");
    }

    SimulationOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Synthetic end-to-end run (no codec or meter needed)");
    simulate->add_option("-o,--out", sim.output_dir, "Dataset directory")->required();
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--noise", sim.noise, "HW energy noise std per execution [J]")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    simulate->add_option("--sequences", sim.sequences, "Number of synthetic sequences")
        ->check(CLI::Range(1, 64))
        ->capture_default_str();
    simulate->add_option("--alpha", sim.reliability.alpha, "Confidence bound")->capture_default_str();
    simulate->add_option("--n-min", sim.reliability.n_min, "Minimum pooled samples")->capture_default_str();
    simulate->add_option("--max-repetitions", sim.reliability.max_repetitions, "Repetition cap")
        ->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*measure) {
            return cmd_measure(config_path, quiet, out, err);
        }
        if (*idle) {
            return cmd_idle(config_path, idle_duration, idle_out, out, err);
        }
        if (*ingest) {
            ingest_args.spec.scope = parse_meter_scope(ingest_scope);
            return cmd_ingest(ingest_args, out, err);
        }
        if (*analyze || *report) {
            if (analysis.out.empty()) {
                analysis.out = analysis.in;
            }
            return *analyze ? cmd_analyze(analysis, out, err) : cmd_report(analysis, out, err);
        }
        if (*simulate) {
            sim.reliability.validate();
            return cmd_simulate(sim, quiet, out, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const DomainUnavailable& e) {
        err << "platform error: " << e.what() << '\n';
        return kPlatform;
    } catch (const PermissionDenied& e) {
        err << "platform error: " << e.what() << '\n';
        return kPlatform;
    } catch (const SpawnError& e) {
        err << "platform error: " << e.what() << '\n';
        return kPlatform;
    } catch (const AnalysisError& e) {
        err << "analysis error: " << e.what() << '\n';
        return kAnalysis;
    } catch (const Error& e) {
        err << "input error: " << e.what() << '\n';
        return kInput;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    err << app.help();
    return kUsage;
}

} // namespace vcenergy::cli
