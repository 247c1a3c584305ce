#pragma once

// Deterministic stand-in for a workstation, an ffmpeg binary, and a pair of
// chip/wall power meters, driven by a virtual clock. Used by `simulate` and by
// tests that exercise the whole pipeline without codecs or meter hardware.
//
// Every execution gets a chip power P and duration T from a cost model. The
// wall meter sees a*P + (b + eta)/T during the job, so per execution
// E_wall = a * E_chip + b + eta with eta ~ N(0, hw_noise).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "vcenergy/clock.hpp"
#include "vcenergy/job.hpp"
#include "vcenergy/meters.hpp"
#include "vcenergy/pipeline.hpp"

namespace vcenergy {

struct SimulationParams {
    std::uint64_t seed = 7;
    double hw_slope = 1.3;
    double hw_intercept = 180.0;    ///< joules per execution
    double hw_noise = 2.0;          ///< joules, std of per-execution wall energy noise
    double chip_idle = 12.0;        ///< watts
    double wall_idle = 55.0;        ///< watts
    double chip_sample_noise = 0.3; ///< watts per sample
    double wall_sample_noise = 0.6; ///< watts per sample
    double epoch = 1693569600.0;    ///< virtual clock start, 2023-09-01T12:00:00Z
};

class SimulatedWorkstation {
public:
    explicit SimulatedWorkstation(SimulationParams params);

    VirtualClock& clock() { return clock_; }
    const SimulationParams& params() const { return params_; }
    std::mt19937_64& rng() { return rng_; }

    /// Registers a load active on the closed interval [start, end].
    void add_load(double start, double end, double chip_power, double wall_power);

    /// Power seen by a meter of `scope` at `t`. side < 0 takes the left limit,
    /// side > 0 the right limit, 0 either.
    double power(MeterScope scope, double t, int side = 0) const;

    /// Executions so far, in order.
    std::size_t executions() const { return loads_.size(); }

private:
    struct Load {
        double start, end, chip, wall;
    };

    SimulationParams params_;
    VirtualClock clock_;
    std::mt19937_64 rng_;
    std::vector<Load> loads_;
};

/// Interprets the ffmpeg command lines the pipeline builds (scale, stream
/// loop, encode, decode) against a registry of virtual media files, advancing
/// the workstation clock by the modelled run time. Outputs are written as small
/// placeholder files so existence checks behave as with a real encoder.
class SimulatedExecutor final : public Executor {
public:
    explicit SimulatedExecutor(SimulatedWorkstation& station);

    /// Makes a raw source available at seq.path. `complexity` scales cost and
    /// bitrate (1.0 is average content).
    void register_source(const SequenceSpec& seq, double complexity);

    /// Commands matching the predicate exit with status 1.
    void fail_when(std::function<bool(const Command&)> predicate) { fail_ = std::move(predicate); }

    ExecResult execute(const Command& command) override;

private:
    struct Media {
        int width = 0;
        int height = 0;
        int fps = 0;
        double frames = 0.0;
        double complexity = 1.0;
        bool encoded = false;
        Codec codec = Codec::x264;
        int crf = 0;
        std::uint64_t size = 0;
    };

    ExecResult finish(double duration, double chip_power, std::uint64_t size, int status = 0);
    void store(const std::filesystem::path& path, const Media& media);

    SimulatedWorkstation& station_;
    std::map<std::string, Media> media_;
    std::function<bool(const Command&)> fail_;
};

/// Samples the workstation's chip or wall power once per nominal interval
/// from session start, plus a closing sample at session end.
class SimulatedMeter final : public Meter {
public:
    SimulatedMeter(MeterSpec spec, SimulatedWorkstation& station, double sample_noise);

    const MeterSpec& spec() const override { return spec_; }
    void start() override;
    SampleResult stop() override;

private:
    MeterSpec spec_;
    SimulatedWorkstation& station_;
    double sample_noise_;
    std::mt19937_64 rng_;
    double started_ = 0.0;
    bool running_ = false;
};

struct SimulationOptions {
    std::uint64_t seed = 7;
    double noise = 2.0;  ///< SimulationParams::hw_noise
    int sequences = 3;
    std::filesystem::path output_dir;
    ReliabilityParams reliability;
};

/// Config used by run_simulation: `sequences` synthetic 2160p sequences,
/// both codecs, all crf values and resolutions, a 10 Hz chip meter ("sw") and a
/// 2 Hz wall meter ("hw").
PipelineConfig simulation_config(const SimulationOptions& options);

/// Runs the full pipeline against the simulated workstation and writes the
/// dataset to options.output_dir. Bit-reproducible for a given option set.
Dataset run_simulation(const SimulationOptions& options, std::ostream* log = nullptr);

} // namespace vcenergy
