#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fakes.hpp"
#include "vcenergy/align.hpp"
#include "vcenergy/commands.hpp"
#include "vcenergy/errors.hpp"
#include "vcenergy/pipeline.hpp"
#include "vcenergy/simulation.hpp"

using namespace vcenergy;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("vcenergy_orch_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

SequenceSpec source_seq() {
    SequenceSpec s;
    s.sequence_id = "park";
    s.path = "in.yuv";
    s.fps = 60;
    return s;
}

JobParams params(Codec codec, Resolution r, int fps, int crf) {
    JobParams p;
    p.codec = codec;
    p.width = r.width;
    p.height = r.height;
    p.fps = fps;
    p.crf = crf;
    return p;
}

/// Simulated workstation, executor and chip/wall meters for one pipeline run.
struct SimRig {
    SimulationParams sim;
    SimulatedWorkstation station;
    SimulatedExecutor executor;
    std::vector<std::unique_ptr<SimulatedMeter>> meters;
    PipelineConfig config;

    SimRig(const fs::path& out, std::uint64_t seed = 7)
        : sim(make_params(seed)), station(sim), executor(station) {
        SimulationOptions o;
        o.seed = seed;
        o.sequences = 1;
        o.output_dir = out;
        config = simulation_config(o);
        config.resolutions = {{3840, 2160}, {1280, 720}};
        executor.register_source(config.sequences[0], 1.0);
        for (const auto& mc : config.meters) {
            meters.push_back(std::make_unique<SimulatedMeter>(mc.spec, station, 0.2));
        }
    }

    static SimulationParams make_params(std::uint64_t seed) {
        SimulationParams p;
        p.seed = seed;
        return p;
    }

    Dataset run() {
        std::vector<Meter*> handles;
        for (auto& m : meters) {
            handles.push_back(m.get());
        }
        PipelineContext ctx{executor, station.clock(), handles, nullptr};
        return run_pipeline(config, ctx);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("encode command mirrors the template") {
    const auto cmd = build_encode_command(source_seq(), params(Codec::x265, {3840, 2160}, 60, 30),
                                          "in.yuv", "out.mp4");
    CHECK(cmd.program == "ffmpeg");
    CHECK(cmd.args == std::vector<std::string>{"-s", "3840x2160", "-r", "60", "-pix_fmt", "yuv420p",
                                               "-i", "in.yuv", "-c:v", "libx265", "-crf", "30",
                                               "out.mp4"});
    CHECK(cmd.output == fs::path("out.mp4"));
    CHECK(cmd.to_string() ==
          "ffmpeg -s 3840x2160 -r 60 -pix_fmt yuv420p -i in.yuv -c:v libx265 -crf 30 out.mp4");
}

TEST_CASE("encode command rejects parameters outside the supported sets") {
    CHECK_THROWS_AS(build_encode_command(source_seq(), params(Codec::x264, {1920, 1080}, 30, 35),
                                         "in.yuv", "out.mp4"),
                    ConfigError);
    CHECK_THROWS_AS(build_encode_command(source_seq(), params(Codec::x264, {1920, 1088}, 30, 30),
                                         "in.yuv", "out.mp4"),
                    ConfigError);
    CHECK_THROWS_AS(build_encode_command(source_seq(), params(Codec::x264, {1920, 1080}, 50, 30),
                                         "in.yuv", "out.mp4"),
                    ConfigError);
    const auto ok = build_encode_command(source_seq(), params(Codec::x264, {1280, 720}, 15, 10),
                                         "in.yuv", "out.mp4");
    const auto joined = ok.to_string();
    CHECK(joined.find("-c:v libx264 -crf 10") != std::string::npos);
}

TEST_CASE("pixel format tags") {
    CHECK(pixel_format_token("yuv420") == "yuv420p");
    CHECK(pixel_format_token("yuv420p") == "yuv420p");
    CHECK(pixel_format_token("yuv444p10le") == "yuv444p10le");
    CHECK(encoder_library(Codec::x264) == "libx264");
    CHECK(encoder_library(Codec::x265) == "libx265");
}

TEST_CASE("decode command streams to the null sink") {
    const auto dir = scratch("decode");
    const auto enc = dir / "enc.mp4";
    std::ofstream(enc) << "x";
    const auto cmd = build_decode_command(enc);
    CHECK(cmd.args == std::vector<std::string>{"-i", enc.string(), "-f", "null", "-"});
    CHECK(cmd.output.empty());
    CHECK(std::count(cmd.args.begin(), cmd.args.end(), enc.string()) == 1);
    CHECK_THROWS_AS(build_decode_command(dir / "missing.mp4"), Error);
}

TEST_CASE("prepare commands") {
    const SequenceSpec seq = source_seq();
    SUBCASE("downscale only") {
        const auto cmds = build_prepare_commands(seq, {1920, 1080}, 1, "work");
        REQUIRE(cmds.size() == 1);
        const auto text = cmds[0].to_string();
        CHECK(text.find("scale=1920:1080:flags=lanczos:param0=3") != std::string::npos);
        CHECK(text.find("-stream_loop") == std::string::npos);
        CHECK(cmds[0].output == fs::path("work/park_1080p.yuv"));
        CHECK(prepared_input_path(seq, {1920, 1080}, 1, "work") == cmds[0].output);
    }
    SUBCASE("native resolution, four copies") {
        const auto cmds = build_prepare_commands(seq, {3840, 2160}, 4, "work");
        REQUIRE(cmds.size() == 1);
        const auto& a = cmds[0].args;
        CHECK(std::find(a.begin(), a.end(), "-vf") == a.end());
        const auto loop = std::find(a.begin(), a.end(), "-stream_loop");
        REQUIRE(loop != a.end());
        CHECK(*(loop + 1) == "3");
        const auto copy = std::find(a.begin(), a.end(), "-c");
        REQUIRE(copy != a.end());
        CHECK(*(copy + 1) == "copy");
        CHECK(cmds[0].output == prepared_input_path(seq, {3840, 2160}, 4, "work"));
    }
    SUBCASE("scale then loop") {
        const auto cmds = build_prepare_commands(seq, {1280, 720}, 3, "work");
        REQUIRE(cmds.size() == 2);
        const auto& loop_args = cmds[1].args;
        CHECK(std::find(loop_args.begin(), loop_args.end(), cmds[0].output.string()) != loop_args.end());
    }
    SUBCASE("nothing to do") {
        CHECK(build_prepare_commands(seq, {3840, 2160}, 1, "work").empty());
        CHECK(prepared_input_path(seq, {3840, 2160}, 1, "work") == seq.path);
    }
    SUBCASE("invalid targets") {
        CHECK_THROWS_AS(build_prepare_commands(seq, {2560, 1440}, 1, "work"), ConfigError);
        CHECK_THROWS_AS(build_prepare_commands(seq, {1920, 1080}, 0, "work"), std::invalid_argument);
    }
    SUBCASE("encoded stream duplication") {
        const auto cmd = build_stream_duplicate_command("a.mp4", 5, "a_x5.mp4");
        CHECK(cmd.args == std::vector<std::string>{"-stream_loop", "4", "-i", "a.mp4", "-c", "copy",
                                                   "a_x5.mp4"});
        CHECK_THROWS_AS(build_stream_duplicate_command("a.mp4", 1, "b.mp4"), std::invalid_argument);
    }
}

TEST_CASE("run_job timestamps the execution") {
    VirtualClock clock(500.0);
    fakes::Executor exec(clock, 2.0);
    exec.output_size = 3'000'000;
    JobSpec job;
    job.job_id = "j-enc";
    job.sequence_id = "s";
    job.repetition_index = 4;
    const auto r = run_job(job, exec, clock);
    CHECK(r.start == 500.0);
    CHECK(r.end - r.start >= 2.0);
    CHECK(r.exit_status == 0);
    CHECK(r.output_size == 3'000'000);
    CHECK(r.repetition_index == 4);
    CHECK(r.sequence_id == "s");

    exec.exit_status = 1;
    try {
        run_job(job, exec, clock);
        FAIL("expected JobFailed");
    } catch (const JobFailed& e) {
        CHECK(e.record().exit_status == 1);
        CHECK(e.record().job_id == "j-enc");
    }
}

TEST_CASE("process executor runs real commands") {
    const auto dir = scratch("exec");
    ProcessExecutor exec(dir / "log.txt");
    const auto out = dir / "out.bin";
    const auto ok = exec.execute({"/bin/sh", {"-c", "printf abcdef > " + out.string()}, out});
    CHECK(ok.exit_status == 0);
    CHECK(ok.output_size == 6);
    CHECK(exec.execute({"/bin/sh", {"-c", "exit 3"}, {}}).exit_status == 3);
    CHECK_THROWS_AS(exec.execute({"/no/such/encoder", {}, {}}), SpawnError);

    SystemClock clock;
    JobSpec job;
    job.job_id = "sleep";
    job.command = {"/bin/sh", {"-c", "sleep 0.2"}, {}};
    const auto r = run_job(job, exec, clock);
    CHECK(r.end - r.start >= 0.2);
}

TEST_CASE("bitrate extraction") {
    JobRecord r;
    r.output_size = 10'000'000;
    CHECK(extract_bitrate(r, 20.0) == 4000.0);
    JobRecord doubled = r;
    doubled.output_size = 20'000'000;
    CHECK(extract_bitrate(doubled, 20.0) == 2.0 * extract_bitrate(r, 20.0));
    r.output_size = 0;
    CHECK_THROWS_AS(extract_bitrate(r, 20.0), std::invalid_argument);
    r.output_size = 1;
    CHECK_THROWS_AS(extract_bitrate(r, 0.0), std::invalid_argument);
}

TEST_CASE("cell ids") {
    CHECK(cell_id(source_seq(), Codec::x265, {1920, 1080}, 40) == "park_x265_1920x1080_60fps_crf40");
}

TEST_CASE("pipeline covers every cell") {
    const auto dir = scratch("cells");
    SimRig rig(dir);
    const auto data = rig.run();
    std::size_t enc = 0, dec = 0;
    for (const auto& m : data.measurements) {
        (m.params.process == Process::encode ? enc : dec) += 1;
    }
    // 1 sequence x 2 resolutions x 2 codecs x 5 crf values, two meters each.
    CHECK(enc == 20 * 2);
    CHECK(dec == 20 * 2);
    CHECK(data.failures.empty());
    CHECK(data.idle.size() == 2);
    CHECK(data.decompositions.size() == 40);
    for (const auto& m : data.measurements) {
        CHECK(m.measurement.energy > 0.0);
        if (m.params.process == Process::encode) {
            CHECK(m.bitrate_kbps > 0.0);
        }
    }
    for (const char* name : {"jobs.jsonl", "measurements.csv", "meters.json", "idle.csv",
                             "decomposition.csv", "failures.jsonl"}) {
        CHECK(fs::exists(dir / name));
    }
    std::ifstream csv(dir / "measurements.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == kMeasurementsHeader);
    CHECK(read_measurements_csv(dir / "measurements.csv").size() == data.measurements.size());
    for (const auto& t : data.traces) {
        CHECK(fs::exists(dir / trace_file_name(t.meter_id, t.job_id)));
    }
}

TEST_CASE("pipeline runs idle first and never overlaps jobs") {
    const auto dir = scratch("serial");
    SimRig rig(dir);
    const auto data = rig.run();
    auto jobs = data.jobs;
    std::sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < jobs.size(); ++i) {
        CHECK(jobs[i].start >= jobs[i - 1].end);
    }
    for (const auto& idle : data.idle) {
        CHECK(idle.end <= jobs.front().start);
    }
}

TEST_CASE("every measurement is covered by its meter trace") {
    const auto dir = scratch("coverage");
    SimRig rig(dir);
    const auto data = rig.run();
    std::map<std::pair<std::string, std::string>, const PowerTrace*> traces;
    for (const auto& t : data.traces) {
        traces[{t.meter_id, t.job_id}] = &t.trace;
    }
    for (const auto& m : data.measurements) {
        const auto* trace = traces.at({m.measurement.meter_id, m.measurement.job_id});
        for (const auto& job : data.jobs) {
            if (job.job_id != m.measurement.job_id) {
                continue;
            }
            CHECK(trace->front_time() <= job.start);
            CHECK(trace->back_time() >= job.end);
        }
    }
}

TEST_CASE("pipeline is reproducible") {
    const auto a = scratch("repro_a");
    const auto b = scratch("repro_b");
    SimRig(a, 11).run();
    SimRig(b, 11).run();
    for (const auto& entry : fs::directory_iterator(a)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        CAPTURE(entry.path());
        CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
    }
}

TEST_CASE("a failing encode is recorded and the pipeline continues") {
    const auto dir = scratch("failure");
    SimRig rig(dir);
    rig.executor.fail_when([](const Command& c) {
        return c.output.filename() == "sim01_x264_1280x720_24fps_crf30.mp4";
    });
    const auto data = rig.run();
    REQUIRE(data.failures.size() == 1);
    CHECK(data.failures[0].cell_id == "sim01_x264_1280x720_24fps_crf30");
    CHECK(data.failures[0].stage == "encode");
    std::size_t enc = 0, dec = 0;
    for (const auto& m : data.measurements) {
        (m.params.process == Process::encode ? enc : dec) += 1;
    }
    CHECK(enc == 19 * 2);
    CHECK(dec == 19 * 2);
    const bool failed_record = std::any_of(data.jobs.begin(), data.jobs.end(), [](const JobRecord& r) {
        return r.exit_status != 0;
    });
    CHECK(failed_record);
    CHECK(slurp(dir / "failures.jsonl").find("sim01_x264_1280x720_24fps_crf30") != std::string::npos);
}

TEST_CASE("an invalid config fails before any job") {
    const auto dir = scratch("invalid");
    SimRig rig(dir);
    rig.config.crf_set.clear();
    CHECK_THROWS_AS(rig.run(), ConfigError);
    CHECK(rig.station.executions() == 0);

    SimRig other(dir);
    other.meters.pop_back();
    CHECK_THROWS_AS(other.run(), ConfigError);
}

TEST_CASE("duplication lengthens short jobs") {
    const auto dir = scratch("dup");
    SimRig rig(dir);
    const auto data = rig.run();
    for (const auto& m : data.measurements) {
        if (m.params.process == Process::decode) {
            CHECK(m.params.duplication_factor > 1);
        }
        CHECK(m.measurement.n_samples >= 30);
    }
}

TEST_CASE("measurements CSV round trip") {
    MeasurementRow r;
    r.measurement = {"job-enc", "hw", 1234.5, 60, 100.25, 3.5, true, 0.05};
    r.params = params(Codec::x265, {1920, 1080}, 24, 40);
    r.bitrate_kbps = 812.5;
    std::stringstream io;
    write_measurements_csv(io, {r});
    const auto back = read_measurements_csv(io);
    REQUIRE(back.size() == 1);
    CHECK(back[0].measurement.job_id == "job-enc");
    CHECK(back[0].measurement.energy == 1234.5);
    CHECK(back[0].measurement.n_samples == 60);
    CHECK(back[0].measurement.reliable);
    CHECK(back[0].params.codec == Codec::x265);
    CHECK(back[0].params.crf == 40);
    CHECK(back[0].bitrate_kbps == 812.5);

    std::istringstream bad(std::string(kMeasurementsHeader) + "\njob,hw,encode,x264,1,2\n");
    CHECK_THROWS_AS(read_measurements_csv(bad), ParseError);
}

TEST_CASE("energy measured from an external log matches the live path") {
    const auto trace = synth_trace({{{100.0, 80.0, 80.0}}, 0.0, 1}, 0.5, "hw");
    std::vector<JobRecord> jobs;
    for (int rep = 0; rep < 3; ++rep) {
        JobRecord r;
        r.job_id = "cell-enc";
        r.params.crf = 20;
        r.start = 10.0 + rep * 20.0;
        r.end = r.start + 12.0;
        r.repetition_index = rep;
        jobs.push_back(r);
    }
    JobRecord uncovered = jobs[0];
    uncovered.job_id = "late-enc";
    uncovered.start = 500.0;
    uncovered.end = 510.0;
    jobs.push_back(uncovered);

    ReliabilityParams p;
    std::vector<std::string> warnings;
    const auto rows = measure_from_trace(jobs, trace, p, 1.0, &warnings);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].measurement.job_id == "cell-enc");
    CHECK(rows[0].measurement.meter_id == "hw");
    CHECK(rows[0].measurement.energy == doctest::Approx(960.0));
    CHECK(rows[0].measurement.n_samples == 3 * 25);
    CHECK(rows[0].measurement.reliable);
    CHECK(warnings.size() == 1);
}
