#include "vcenergy/commands.hpp"

#include <stdexcept>

#include "vcenergy/errors.hpp"

namespace vcenergy {

namespace fs = std::filesystem;

std::string pixel_format_token(std::string_view pixel_format) {
    if (pixel_format == "yuv420" || pixel_format == "420") {
        return "yuv420p";
    }
    return std::string(pixel_format);
}

std::string_view encoder_library(Codec codec) {
    return codec == Codec::x264 ? "libx264" : "libx265";
}

Command build_encode_command(const SequenceSpec& seq, const JobParams& params,
                             const fs::path& input, const fs::path& output,
                             std::string_view binary) {
    validate_job_params(params);
    const std::string format = pixel_format_token(params.pixel_format.empty() ? seq.pixel_format
                                                                              : params.pixel_format);
    Command cmd;
    cmd.program = std::string(binary);
    cmd.args = {"-s", to_string(params.resolution()),
                "-r", std::to_string(params.fps),
                "-pix_fmt", format,
                "-i", input.string(),
                "-c:v", std::string(encoder_library(params.codec)),
                "-crf", std::to_string(params.crf),
                output.string()};
    cmd.output = output;
    return cmd;
}

Command build_decode_command(const fs::path& encoded, std::string_view binary) {
    std::error_code ec;
    if (!fs::exists(encoded, ec)) {
        throw Error("encoded input '" + encoded.string() + "' does not exist");
    }
    return Command{std::string(binary), {"-i", encoded.string(), "-f", "null", "-"}, {}};
}

namespace {

std::string stem_for(const SequenceSpec& seq, Resolution r) {
    return seq.sequence_id + "_" + std::to_string(r.height) + "p";
}

std::vector<std::string> raw_input_args(const SequenceSpec& seq, Resolution r) {
    return {"-f", "rawvideo", "-s", to_string(r), "-r", std::to_string(seq.fps),
            "-pix_fmt", pixel_format_token(seq.pixel_format)};
}

} // namespace

fs::path prepared_input_path(const SequenceSpec& seq, Resolution target, int copies,
                             const fs::path& work_dir) {
    const bool scale = !(target == seq.resolution());
    if (!scale && copies <= 1) {
        return seq.path;
    }
    if (copies <= 1) {
        return work_dir / (stem_for(seq, target) + ".yuv");
    }
    return work_dir / (stem_for(seq, target) + "_x" + std::to_string(copies) + ".yuv");
}

std::vector<Command> build_prepare_commands(const SequenceSpec& seq, Resolution target, int copies,
                                            const fs::path& work_dir, std::string_view binary) {
    if (!is_supported_resolution(target)) {
        throw ConfigError("resolution", to_string(target) + " is not a supported target");
    }
    if (target.width > seq.width || target.height > seq.height) {
        throw ConfigError("resolution", "cannot upscale " + to_string(seq.resolution()) + " to " +
                                            to_string(target));
    }
    if (copies < 1) {
        throw std::invalid_argument("duplication factor must be at least 1");
    }
    std::vector<Command> out;
    fs::path source = seq.path;
    if (!(target == seq.resolution())) {
        const fs::path scaled = prepared_input_path(seq, target, 1, work_dir);
        Command scale{std::string(binary), raw_input_args(seq, seq.resolution()), scaled};
        const std::string filter = "scale=" + std::to_string(target.width) + ":" +
                                   std::to_string(target.height) + ":flags=lanczos:param0=3";
        for (auto a : {std::string("-i"), source.string(), std::string("-vf"), filter,
                       std::string("-f"), std::string("rawvideo"), std::string("-pix_fmt"),
                       pixel_format_token(seq.pixel_format), scaled.string()}) {
            scale.args.push_back(std::move(a));
        }
        out.push_back(std::move(scale));
        source = scaled;
    }
    if (copies > 1) {
        const fs::path looped = prepared_input_path(seq, target, copies, work_dir);
        Command loop{std::string(binary), {"-stream_loop", std::to_string(copies - 1)}, looped};
        for (auto a : raw_input_args(seq, target)) {
            loop.args.push_back(std::move(a));
        }
        for (auto a : {std::string("-i"), source.string(), std::string("-c"), std::string("copy"),
                       std::string("-f"), std::string("rawvideo"), looped.string()}) {
            loop.args.push_back(std::move(a));
        }
        out.push_back(std::move(loop));
    }
    return out;
}

Command build_stream_duplicate_command(const fs::path& encoded, int copies, const fs::path& output,
                                       std::string_view binary) {
    if (copies < 2) {
        throw std::invalid_argument("stream duplication needs at least two copies");
    }
    return Command{std::string(binary),
                   {"-stream_loop", std::to_string(copies - 1), "-i", encoded.string(), "-c", "copy",
                    output.string()},
                   output};
}

} // namespace vcenergy
