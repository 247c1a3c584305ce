#include "vcenergy/trace.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::pair<std::string_view, Enum> (&table)[N],
                std::string_view what) {
    for (const auto& [name, value] : table) {
        if (name == text) {
            return value;
        }
    }
    throw ParseError("unknown " + std::string(what) + " '" + std::string(text) + "'");
}

constexpr std::pair<std::string_view, Codec> kCodecNames[] = {{"x264", Codec::x264},
                                                              {"x265", Codec::x265}};
constexpr std::pair<std::string_view, Process> kProcessNames[] = {
    {"encode", Process::encode}, {"decode", Process::decode}, {"idle", Process::idle}};
constexpr std::pair<std::string_view, MeterKind> kKindNames[] = {
    {"counter_software", MeterKind::counter_software},
    {"external_hardware", MeterKind::external_hardware},
    {"synthetic", MeterKind::synthetic}};
constexpr std::pair<std::string_view, MeterScope> kScopeNames[] = {{"chip", MeterScope::chip},
                                                                   {"wall", MeterScope::wall}};
constexpr std::pair<std::string_view, PowerDomain> kDomainNames[] = {
    {"PKG", PowerDomain::pkg}, {"PP0", PowerDomain::pp0}, {"PP1", PowerDomain::pp1},
    {"DRAM", PowerDomain::dram}, {"pkg", PowerDomain::pkg}, {"pp0", PowerDomain::pp0},
    {"pp1", PowerDomain::pp1}, {"dram", PowerDomain::dram}};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_number(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

template <typename Int>
bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, Int& out) {
    if (pos + len > text.size()) {
        return false;
    }
    const auto* first = text.data() + pos;
    for (std::size_t i = 0; i < len; ++i) {
        if (first[i] < '0' || first[i] > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc() && ptr == first + len;
}

double parse_iso8601(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS[.fff][Z|+00:00|-00:00]
    int year = 0;
    unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
    const bool shape = text.size() >= 19 && text[4] == '-' && text[7] == '-' &&
                       (text[10] == 'T' || text[10] == ' ') && text[13] == ':' &&
                       text[16] == ':';
    if (!shape || !parse_fixed_int(text, 0, 4, year) || !parse_fixed_int(text, 5, 2, month) ||
        !parse_fixed_int(text, 8, 2, day) || !parse_fixed_int(text, 11, 2, hour) ||
        !parse_fixed_int(text, 14, 2, minute) || !parse_fixed_int(text, 17, 2, second)) {
        throw ParseError("invalid timestamp '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
        throw ParseError("invalid timestamp '" + std::string(text) + "'");
    }

    std::string_view rest = text.substr(19);
    double fraction = 0.0;
    if (!rest.empty() && rest.front() == '.') {
        std::size_t digits = 1;
        while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') {
            ++digits;
        }
        if (digits == 1) {
            throw ParseError("invalid fractional seconds in '" + std::string(text) + "'");
        }
        std::string frac = "0" + std::string(rest.substr(0, digits));
        parse_number(frac, fraction);
        rest.remove_prefix(digits);
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00" || rest == "-00:00")) {
        throw ParseError("only UTC timestamps are supported: '" + std::string(text) + "'");
    }

    const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
    const auto whole = static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
    return static_cast<double>(whole) + fraction;
}

} // namespace

std::string_view to_string(Codec codec) { return codec == Codec::x264 ? "x264" : "x265"; }

std::string_view to_string(Process process) {
    switch (process) {
    case Process::encode: return "encode";
    case Process::decode: return "decode";
    case Process::idle: return "idle";
    }
    return "?";
}

std::string_view to_string(MeterKind kind) {
    switch (kind) {
    case MeterKind::counter_software: return "counter_software";
    case MeterKind::external_hardware: return "external_hardware";
    case MeterKind::synthetic: return "synthetic";
    }
    return "?";
}

std::string_view to_string(MeterScope scope) { return scope == MeterScope::chip ? "chip" : "wall"; }

std::string_view to_string(PowerDomain domain) {
    switch (domain) {
    case PowerDomain::pkg: return "PKG";
    case PowerDomain::pp0: return "PP0";
    case PowerDomain::pp1: return "PP1";
    case PowerDomain::dram: return "DRAM";
    }
    return "?";
}

Codec parse_codec(std::string_view text) { return parse_enum(text, kCodecNames, "codec"); }
Process parse_process(std::string_view text) { return parse_enum(text, kProcessNames, "process"); }
MeterKind parse_meter_kind(std::string_view text) { return parse_enum(text, kKindNames, "meter kind"); }
MeterScope parse_meter_scope(std::string_view text) { return parse_enum(text, kScopeNames, "meter scope"); }
PowerDomain parse_power_domain(std::string_view text) {
    return parse_enum(text, kDomainNames, "power domain");
}

void MeterSpec::validate() const {
    if (meter_id.empty()) {
        throw ConfigError("meter_id", "must not be empty");
    }
    if (!(nominal_interval > 0.0) || !std::isfinite(nominal_interval)) {
        throw ConfigError("nominal_interval", "must be a positive number of seconds");
    }
    const bool counter = kind == MeterKind::counter_software;
    if (counter && domains.empty()) {
        throw ConfigError("domains", "counter_software meters need at least one power domain");
    }
    if (!counter && !domains.empty()) {
        throw ConfigError("domains", "only counter_software meters take power domains");
    }
}

std::string to_string(Resolution r) {
    return std::to_string(r.width) + "x" + std::to_string(r.height);
}

Resolution parse_resolution(std::string_view text) {
    const auto x = text.find('x');
    Resolution r;
    if (x == std::string_view::npos ||
        std::from_chars(text.data(), text.data() + x, r.width).ptr != text.data() + x ||
        std::from_chars(text.data() + x + 1, text.data() + text.size(), r.height).ptr !=
            text.data() + text.size()) {
        throw ParseError("invalid resolution '" + std::string(text) + "', expected WIDTHxHEIGHT");
    }
    return r;
}

bool is_supported_resolution(Resolution r) {
    return std::find(std::begin(kResolutions), std::end(kResolutions), r) != std::end(kResolutions);
}

bool is_supported_fps(int fps) {
    return std::find(std::begin(kFrameRates), std::end(kFrameRates), fps) != std::end(kFrameRates);
}

bool is_supported_crf(int crf) {
    return std::find(std::begin(kCrfValues), std::end(kCrfValues), crf) != std::end(kCrfValues);
}

void validate_job_params(const JobParams& params) {
    if (params.process == Process::idle) {
        return;
    }
    if (!is_supported_crf(params.crf)) {
        throw ConfigError("crf", std::to_string(params.crf) + " is not one of {10,20,30,40,50}");
    }
    if (!is_supported_resolution(params.resolution())) {
        throw ConfigError("resolution", to_string(params.resolution()) +
                                            " is not one of {3840x2160,1920x1080,1280x720}");
    }
    if (!is_supported_fps(params.fps)) {
        throw ConfigError("fps", std::to_string(params.fps) + " is not one of {15,24,30,60}");
    }
    if (params.duplication_factor < 1) {
        throw ConfigError("duplication_factor", "must be at least 1");
    }
}

std::vector<TraceViolation> validate_trace(const PowerTrace& trace) {
    std::vector<TraceViolation> out;
    using Kind = TraceViolation::Kind;
    const bool interval_ok = trace.nominal_interval > 0.0 && std::isfinite(trace.nominal_interval);
    if (!interval_ok) {
        out.push_back({Kind::bad_interval, 0, "nominal interval must be positive"});
    }
    const auto& s = trace.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i].timestamp) || !std::isfinite(s[i].power)) {
            out.push_back({Kind::non_finite, i, "non-finite value at index " + std::to_string(i)});
            continue;
        }
        if (s[i].power < 0.0) {
            out.push_back({Kind::negative_power, i, "negative power at index " + std::to_string(i)});
        }
        if (i == 0) {
            continue;
        }
        const double dt = s[i].timestamp - s[i - 1].timestamp;
        if (!(dt > 0.0)) {
            out.push_back({Kind::non_increasing_timestamp, i,
                           "non-increasing timestamp at index " + std::to_string(i)});
        } else if (interval_ok && dt > kGapToleranceFactor * trace.nominal_interval) {
            out.push_back({Kind::gap, i,
                           "gap of " + format_double(dt) + " s before index " + std::to_string(i)});
        }
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

double parse_timestamp(std::string_view text) {
    text = trim(text);
    double value = 0.0;
    if (parse_number(text, value)) {
        if (!std::isfinite(value)) {
            throw ParseError("non-finite timestamp");
        }
        return value;
    }
    return parse_iso8601(text);
}

void write_trace_csv(std::ostream& out, const PowerTrace& trace) {
    out << "timestamp,power_w\n";
    for (const auto& s : trace.samples) {
        out << format_double(s.timestamp) << ',' << format_double(s.power) << '\n';
    }
}

PowerTrace read_trace_csv(std::istream& in, std::string meter_id, double nominal_interval) {
    PowerTrace trace{std::move(meter_id), {}, nominal_interval};
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    bool seen_any = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = trim(line);
        if (row.empty()) {
            continue;
        }
        seen_any = true;
        if (std::exchange(first, false) && row.starts_with("timestamp")) {
            if (row != "timestamp,power_w") {
                throw ParseError("expected header 'timestamp,power_w'", lineno);
            }
            continue;
        }
        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            throw ParseError("expected two columns", lineno);
        }
        PowerSample sample;
        try {
            sample.timestamp = parse_timestamp(row.substr(0, comma));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!parse_number(trim(row.substr(comma + 1)), sample.power) ||
            !std::isfinite(sample.power)) {
            throw ParseError("invalid power value", lineno);
        }
        if (sample.power < 0.0) {
            throw ParseError("negative power " + format_double(sample.power), lineno);
        }
        if (!trace.samples.empty() && !(sample.timestamp > trace.samples.back().timestamp)) {
            throw ParseError("non-increasing timestamp", lineno);
        }
        trace.samples.push_back(sample);
    }
    if (!seen_any) {
        throw ParseError("empty meter log");
    }
    return trace;
}

void to_json(nlohmann::json& j, const JobParams& p) {
    j = nlohmann::json{{"codec", to_string(p.codec)},
                       {"process", to_string(p.process)},
                       {"width", p.width},
                       {"height", p.height},
                       {"fps", p.fps},
                       {"crf", p.crf},
                       {"pixel_format", p.pixel_format},
                       {"duplication_factor", p.duplication_factor}};
}

void from_json(const nlohmann::json& j, JobParams& p) {
    p.codec = parse_codec(j.at("codec").get<std::string>());
    p.process = parse_process(j.at("process").get<std::string>());
    j.at("width").get_to(p.width);
    j.at("height").get_to(p.height);
    j.at("fps").get_to(p.fps);
    j.at("crf").get_to(p.crf);
    p.pixel_format = j.value("pixel_format", std::string("yuv420"));
    p.duplication_factor = j.value("duplication_factor", 1);
}

void to_json(nlohmann::json& j, const JobRecord& r) {
    j = nlohmann::json{{"job_id", r.job_id},
                       {"sequence_id", r.sequence_id},
                       {"repetition_index", r.repetition_index},
                       {"params", r.params},
                       {"start", r.start},
                       {"end", r.end},
                       {"exit_status", r.exit_status},
                       {"output_size", r.output_size}};
}

void from_json(const nlohmann::json& j, JobRecord& r) {
    j.at("job_id").get_to(r.job_id);
    r.sequence_id = j.value("sequence_id", std::string());
    r.repetition_index = j.value("repetition_index", 0);
    j.at("params").get_to(r.params);
    j.at("start").get_to(r.start);
    j.at("end").get_to(r.end);
    r.exit_status = j.value("exit_status", 0);
    r.output_size = j.value("output_size", std::uint64_t{0});
    if (!(r.end > r.start)) {
        throw ParseError("job '" + r.job_id + "' has end <= start");
    }
}

void to_json(nlohmann::json& j, const MeterSpec& m) {
    nlohmann::json domains = nlohmann::json::array();
    for (auto d : m.domains) {
        domains.push_back(to_string(d));
    }
    j = nlohmann::json{{"meter_id", m.meter_id},
                       {"kind", to_string(m.kind)},
                       {"scope", to_string(m.scope)},
                       {"nominal_interval", m.nominal_interval},
                       {"domains", domains}};
}

void from_json(const nlohmann::json& j, MeterSpec& m) {
    j.at("meter_id").get_to(m.meter_id);
    m.kind = parse_meter_kind(j.at("kind").get<std::string>());
    m.scope = parse_meter_scope(j.at("scope").get<std::string>());
    j.at("nominal_interval").get_to(m.nominal_interval);
    m.domains.clear();
    if (j.contains("domains")) {
        for (const auto& d : j.at("domains")) {
            m.domains.push_back(parse_power_domain(d.get<std::string>()));
        }
    }
}

void write_jobs_jsonl(std::ostream& out, const std::vector<JobRecord>& records) {
    for (const auto& r : records) {
        out << nlohmann::json(r).dump() << '\n';
    }
}

std::vector<JobRecord> read_jobs_jsonl(std::istream& in) {
    std::vector<JobRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        try {
            out.push_back(nlohmann::json::parse(line).get<JobRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), lineno);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return out;
}

} // namespace vcenergy
