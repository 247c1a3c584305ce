#include "vcenergy/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace fs = std::filesystem;

namespace {

constexpr double kUhdPixels = 3840.0 * 2160.0;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

SimulatedWorkstation::SimulatedWorkstation(SimulationParams params)
    : params_(params), clock_(params.epoch), rng_(params.seed) {}

void SimulatedWorkstation::add_load(double start, double end, double chip_power, double wall_power) {
    if (!(end > start)) {
        throw std::invalid_argument("load must have positive duration");
    }
    if (!loads_.empty() && start < loads_.back().end) {
        throw std::invalid_argument("loads must not overlap");
    }
    loads_.push_back({start, end, chip_power, wall_power});
}

double SimulatedWorkstation::power(MeterScope scope, double t, int side) const {
    const double idle = scope == MeterScope::chip ? params_.chip_idle : params_.wall_idle;
    auto it = side < 0 ? std::lower_bound(loads_.begin(), loads_.end(), t,
                                          [](const Load& l, double x) { return l.start < x; })
                       : std::upper_bound(loads_.begin(), loads_.end(), t,
                                          [](double x, const Load& l) { return x < l.start; });
    if (it == loads_.begin()) {
        return idle;
    }
    const Load& l = *(it - 1);
    const bool inside = side > 0 ? t < l.end : t <= l.end;
    if (!inside) {
        return idle;
    }
    return scope == MeterScope::chip ? l.chip : l.wall;
}

SimulatedExecutor::SimulatedExecutor(SimulatedWorkstation& station) : station_(station) {}

void SimulatedExecutor::register_source(const SequenceSpec& seq, double complexity) {
    Media m;
    m.width = seq.width;
    m.height = seq.height;
    m.fps = seq.fps;
    m.frames = seq.duration * seq.fps;
    m.complexity = complexity;
    media_[seq.path.string()] = m;
}

void SimulatedExecutor::store(const fs::path& path, const Media& media) {
    media_[path.string()] = media;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("simulated encoder cannot write " + path.string());
    }
    nlohmann::json j{{"width", media.width},   {"height", media.height},
                     {"fps", media.fps},       {"frames", media.frames},
                     {"encoded", media.encoded}, {"size", media.size}};
    if (media.encoded) {
        j["codec"] = to_string(media.codec);
        j["crf"] = media.crf;
    }
    out << j.dump() << '\n';
}

ExecResult SimulatedExecutor::finish(double duration, double chip_power, std::uint64_t size, int status) {
    const auto& p = station_.params();
    auto& rng = station_.rng();
    const double eta = std::normal_distribution<double>(0.0, p.hw_noise > 0.0 ? p.hw_noise : 1.0)(rng);
    const double extra = std::max(p.hw_intercept + (p.hw_noise > 0.0 ? eta : 0.0), 0.0);
    const double wall = p.hw_slope * chip_power + extra / duration;
    const double t0 = station_.clock().now();
    station_.add_load(t0, t0 + duration, chip_power, wall);
    station_.clock().advance(duration);
    return {status, size};
}

ExecResult SimulatedExecutor::execute(const Command& command) {
    const auto& p = station_.params();
    auto& rng = station_.rng();
    if (fail_ && fail_(command)) {
        return finish(0.5, p.chip_idle + 5.0, 0, 1);
    }

    int loops = 0;
    int crf = -1;
    bool after_input = false;
    bool null_sink = false;
    bool copy = false;
    std::string input, output, vcodec, filter;
    const auto& a = command.args;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool has_value = i + 1 < a.size();
        if (a[i] == "-stream_loop" && has_value) {
            loops = std::stoi(a[++i]);
        } else if (a[i] == "-i" && has_value) {
            input = a[++i];
            after_input = true;
        } else if (a[i] == "-vf" && has_value) {
            filter = a[++i];
        } else if (a[i] == "-c:v" && has_value) {
            vcodec = a[++i];
        } else if (a[i] == "-crf" && has_value) {
            crf = std::stoi(a[++i]);
        } else if (a[i] == "-c" && has_value) {
            copy = a[++i] == "copy";
        } else if (a[i] == "-f" && has_value) {
            null_sink = null_sink || (after_input && a[i + 1] == "null");
            ++i;
        } else if ((a[i] == "-s" || a[i] == "-r" || a[i] == "-pix_fmt") && has_value) {
            ++i;
        } else if (a[i] == "-" || a[i].empty() || a[i][0] != '-') {
            output = a[i];
        }
    }

    auto found = media_.find(input);
    if (found == media_.end()) {
        return finish(0.05, p.chip_idle + 2.0, 0, 1);
    }
    const Media in = found->second;
    const double copies = static_cast<double>(loops + 1);
    const double frames = in.frames * copies;
    const double scale = static_cast<double>(in.width) * in.height / kUhdPixels;
    auto jitter = [&](double rel) { return 1.0 + rel * std::normal_distribution<double>(0.0, 1.0)(rng); };

    if (!vcodec.empty()) {
        if (in.encoded || crf < 0) {
            return finish(0.05, p.chip_idle + 2.0, 0, 1);
        }
        const bool hevc = vcodec == "libx265";
        const double crf_factor = 1.45 - 0.012 * crf;
        const double per_frame = (hevc ? 0.060 : 0.022) * std::pow(scale, 0.9) * crf_factor * in.complexity;
        const double duration = frames * per_frame * std::max(jitter(0.01), 0.9);
        const double chip = (p.chip_idle + 55.0 + 25.0 * std::sqrt(scale) + (hevc ? 15.0 : 0.0)) *
                            std::max(jitter(0.02), 0.9);
        const double bpp = 0.30 * std::exp2(-(crf - 10) / 7.0) * in.complexity * (hevc ? 0.62 : 1.0);
        Media out = in;
        out.frames = frames;
        out.encoded = true;
        out.codec = hevc ? Codec::x265 : Codec::x264;
        out.crf = crf;
        out.size = static_cast<std::uint64_t>(bpp * in.width * in.height * frames / 8.0);
        store(output, out);
        return finish(duration, chip, out.size);
    }
    if (null_sink) {
        if (!in.encoded) {
            return finish(0.05, p.chip_idle + 2.0, 0, 1);
        }
        const bool hevc = in.codec == Codec::x265;
        const double per_frame = (hevc ? 0.0050 : 0.0035) * std::pow(scale, 0.95) *
                                 (1.2 - 0.006 * in.crf) * in.complexity;
        const double duration = frames * per_frame * std::max(jitter(0.02), 0.9);
        const double chip = (p.chip_idle + 18.0 + 10.0 * std::sqrt(scale) + (hevc ? 4.0 : 0.0)) *
                            std::max(jitter(0.03), 0.9);
        return finish(duration, chip, 0);
    }
    if (!filter.empty()) {
        int w = 0, h = 0;
        if (std::sscanf(filter.c_str(), "scale=%d:%d", &w, &h) != 2 || output.empty()) {
            return finish(0.05, p.chip_idle + 2.0, 0, 1);
        }
        Media out = in;
        out.width = w;
        out.height = h;
        out.frames = frames;
        store(output, out);
        return finish(0.2 + frames * 0.004 * scale, p.chip_idle + 30.0, 0);
    }
    if (copy && !output.empty() && output != "-") {
        Media out = in;
        out.frames = frames;
        out.size = static_cast<std::uint64_t>(static_cast<double>(in.size) * copies);
        store(output, out);
        return finish(0.2 + frames * 0.0005, p.chip_idle + 8.0, out.size);
    }
    return finish(0.05, p.chip_idle + 2.0, 0, 1);
}

SimulatedMeter::SimulatedMeter(MeterSpec spec, SimulatedWorkstation& station, double sample_noise)
    : spec_(std::move(spec)), station_(station), sample_noise_(sample_noise),
      rng_(station.params().seed ^ fnv1a(spec_.meter_id)) {}

void SimulatedMeter::start() {
    if (running_) {
        throw SamplerError("meter " + spec_.meter_id + " is already sampling");
    }
    running_ = true;
    started_ = station_.clock().now();
}

SampleResult SimulatedMeter::stop() {
    if (!running_) {
        throw SamplerError("meter " + spec_.meter_id + " was not started");
    }
    running_ = false;
    const double stopped = station_.clock().now();
    SampleResult out;
    out.trace = {spec_.meter_id, {}, spec_.nominal_interval};
    auto sample = [&](double t, int side) {
        double p = station_.power(spec_.scope, t, side);
        if (sample_noise_ > 0.0) {
            p += std::normal_distribution<double>(0.0, sample_noise_)(rng_);
        }
        out.trace.samples.push_back({t, std::max(p, 0.0)});
    };
    sample(started_, +1);
    for (std::size_t k = 1;; ++k) {
        const double t = started_ + static_cast<double>(k) * spec_.nominal_interval;
        if (t >= stopped - 1e-9) {
            break;
        }
        sample(t, 0);
    }
    if (stopped > started_) {
        sample(stopped, -1);
    }
    return out;
}

PipelineConfig simulation_config(const SimulationOptions& options) {
    if (options.sequences < 1) {
        throw ConfigError("sequences", "simulation needs at least one sequence");
    }
    constexpr int kFps[] = {24, 30, 60, 15};
    PipelineConfig c;
    for (int i = 0; i < options.sequences; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "sim%02d", i + 1);
        SequenceSpec s;
        s.sequence_id = id;
        s.path = fs::path("source") / (std::string(id) + ".yuv");
        s.fps = kFps[i % 4];
        c.sequences.push_back(s);
    }
    c.codecs = {Codec::x264, Codec::x265};
    c.crf_set.assign(std::begin(kCrfValues), std::end(kCrfValues));
    c.resolutions.assign(std::begin(kResolutions), std::end(kResolutions));
    MeterConfig sw;
    sw.spec = {"sw", MeterKind::synthetic, MeterScope::chip, 0.1, {}};
    MeterConfig hw;
    hw.spec = {"hw", MeterKind::synthetic, MeterScope::wall, 0.5, {}};
    c.meters = {sw, hw};
    c.reliability = options.reliability;
    c.output_dir = options.output_dir;
    c.idle_duration = 10.0;
    return c;
}

Dataset run_simulation(const SimulationOptions& options, std::ostream* log) {
    SimulationParams params;
    params.seed = options.seed;
    params.hw_noise = options.noise;
    SimulatedWorkstation station(params);
    SimulatedExecutor executor(station);
    const PipelineConfig config = simulation_config(options);

    std::mt19937_64 content(options.seed ^ 0x5eed5eed5eedull);
    std::uniform_real_distribution<double> complexity(0.8, 1.25);
    for (const auto& seq : config.sequences) {
        executor.register_source(seq, complexity(content));
    }

    std::vector<std::unique_ptr<SimulatedMeter>> meters;
    std::vector<Meter*> handles;
    for (const auto& mc : config.meters) {
        const double noise = mc.spec.scope == MeterScope::chip ? params.chip_sample_noise
                                                               : params.wall_sample_noise;
        meters.push_back(std::make_unique<SimulatedMeter>(mc.spec, station, noise));
        handles.push_back(meters.back().get());
    }
    PipelineContext ctx{executor, station.clock(), handles, log};
    return run_pipeline(config, ctx);
}

} // namespace vcenergy
