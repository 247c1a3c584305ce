#include "vcenergy/config.hpp"

#include <cstdlib>
#include <fstream>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ConfigError(path.empty() ? key : path + "." + key, "is required");
    }
    return obj.at(key);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

template <typename T>
T get(const json& value, const std::string& field) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(field, "has the wrong type");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    return get<T>(obj.at(key), join(path, key));
}

fs::path resolve(const fs::path& p, const fs::path& base) {
    if (p.empty() || p.is_absolute() || base.empty()) {
        return p;
    }
    return base / p;
}

template <typename Fn>
auto wrap_parse(const std::string& field, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        throw ConfigError(field, e.what());
    }
}

SyntheticProfile parse_profile(const json& j, const std::string& path) {
    SyntheticProfile p;
    const auto& segs = require(j, "segments", path);
    if (!segs.is_array()) {
        throw ConfigError(join(path, "segments"), "must be an array");
    }
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string f = join(path, "segments[" + std::to_string(i) + "]");
        SyntheticSegment s;
        s.duration = get<double>(require(segs[i], "duration", f), f + ".duration");
        s.start_power = get<double>(require(segs[i], "start_power", f), f + ".start_power");
        s.end_power = get_or<double>(segs[i], "end_power", f, s.start_power);
        p.segments.push_back(s);
    }
    p.noise_std = get_or<double>(j, "noise_std", path, 0.0);
    p.seed = get_or<std::uint64_t>(j, "seed", path, 0);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return p;
}

} // namespace

PipelineConfig parse_config_json(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) {
        throw ConfigError("$", "config must be a JSON object");
    }
    PipelineConfig c;

    const auto& seqs = require(doc, "sequences", "");
    if (!seqs.is_array()) {
        throw ConfigError("sequences", "must be an array");
    }
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const std::string f = "sequences[" + std::to_string(i) + "]";
        const auto& j = seqs[i];
        SequenceSpec s;
        s.sequence_id = get<std::string>(require(j, "sequence_id", f), f + ".sequence_id");
        s.path = resolve(get<std::string>(require(j, "path", f), f + ".path"), base_dir);
        s.width = get_or<int>(j, "width", f, 3840);
        s.height = get_or<int>(j, "height", f, 2160);
        s.fps = get<int>(require(j, "fps", f), f + ".fps");
        s.pixel_format = get_or<std::string>(j, "pixel_format", f, "yuv420");
        s.duration = get_or<double>(j, "duration", f, 20.0);
        c.sequences.push_back(std::move(s));
    }

    const auto& codecs = require(doc, "codecs", "");
    for (std::size_t i = 0; i < codecs.size(); ++i) {
        const std::string f = "codecs[" + std::to_string(i) + "]";
        c.codecs.push_back(wrap_parse(f, [&] { return parse_codec(get<std::string>(codecs[i], f)); }));
    }
    c.crf_set = get<std::vector<int>>(require(doc, "crf_set", ""), "crf_set");
    const auto& res = require(doc, "resolutions", "");
    for (std::size_t i = 0; i < res.size(); ++i) {
        const std::string f = "resolutions[" + std::to_string(i) + "]";
        c.resolutions.push_back(
            wrap_parse(f, [&] { return parse_resolution(get<std::string>(res[i], f)); }));
    }

    const auto& meters = require(doc, "meters", "");
    if (!meters.is_array()) {
        throw ConfigError("meters", "must be an array");
    }
    for (std::size_t i = 0; i < meters.size(); ++i) {
        const std::string f = "meters[" + std::to_string(i) + "]";
        const auto& j = meters[i];
        MeterConfig m;
        m.spec.meter_id = get<std::string>(require(j, "meter_id", f), f + ".meter_id");
        m.spec.kind = wrap_parse(f + ".kind", [&] {
            return parse_meter_kind(get<std::string>(require(j, "kind", f), f + ".kind"));
        });
        m.spec.scope = wrap_parse(f + ".scope", [&] {
            return parse_meter_scope(get<std::string>(require(j, "scope", f), f + ".scope"));
        });
        m.spec.nominal_interval =
            get<double>(require(j, "nominal_interval", f), f + ".nominal_interval");
        if (j.contains("domains")) {
            const auto names = get<std::vector<std::string>>(j.at("domains"), f + ".domains");
            for (const auto& d : names) {
                m.spec.domains.push_back(wrap_parse(f + ".domains", [&] { return parse_power_domain(d); }));
            }
        } else if (m.spec.kind == MeterKind::counter_software) {
            m.spec.domains = {PowerDomain::pkg};
        }
        m.source = resolve(get_or<std::string>(j, "source", f, ""), base_dir);
        if (j.contains("profile")) {
            m.profile = parse_profile(j.at("profile"), f + ".profile");
        }
        c.meters.push_back(std::move(m));
    }

    if (doc.contains("reliability")) {
        const auto& r = doc.at("reliability");
        c.reliability.alpha = get_or<double>(r, "alpha", "reliability", c.reliability.alpha);
        c.reliability.n_min = get_or<int>(r, "n_min", "reliability", c.reliability.n_min);
        c.reliability.max_repetitions =
            get_or<int>(r, "max_repetitions", "reliability", c.reliability.max_repetitions);
    }
    c.encoder_binary = get_or<std::string>(doc, "encoder_binary", "", "ffmpeg");
    if (const char* env = std::getenv(kEncoderEnvVar); env && *env) {
        c.encoder_binary = env;
    }
    c.output_dir = resolve(get<std::string>(require(doc, "output_dir", ""), "output_dir"), base_dir);
    c.idle_duration = get_or<double>(doc, "idle_duration", "", c.idle_duration);
    c.max_gap_factor = get_or<double>(doc, "max_gap_factor", "", c.max_gap_factor);

    c.validate();
    return c;
}

PipelineConfig parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open config file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_config_json(doc, path.parent_path());
}

} // namespace vcenergy
