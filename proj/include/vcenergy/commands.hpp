#pragma once

// ffmpeg invocations for input preparation, encoding and decoding.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vcenergy/job.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

struct SequenceSpec {
    std::string sequence_id;
    std::filesystem::path path; ///< raw planar video
    int width = 3840;
    int height = 2160;
    int fps = 30;
    std::string pixel_format = "yuv420";
    double duration = 20.0; ///< seconds

    Resolution resolution() const { return {width, height}; }
};

/// Encoder pixel-format tag: "yuv420" becomes the planar "yuv420p"; other
/// tags pass through.
std::string pixel_format_token(std::string_view pixel_format);

/// ffmpeg library name for the codec ("libx264", "libx265").
std::string_view encoder_library(Codec codec);

/// `-s WxH -r FPS -pix_fmt FMT -i INPUT -c:v LIB -crf CRF OUTPUT`.
/// Throws ConfigError when params fall outside the supported sets.
Command build_encode_command(const SequenceSpec& seq, const JobParams& params,
                             const std::filesystem::path& input,
                             const std::filesystem::path& output,
                             std::string_view binary = "ffmpeg");

/// `-i ENCODED -f null -`. Throws Error when `encoded` does not exist.
Command build_decode_command(const std::filesystem::path& encoded,
                             std::string_view binary = "ffmpeg");

/// Downscale (Lanczos, parameter 3) to `target` unless it is the native
/// resolution, then a stream-copy loop producing `copies` concatenated copies
/// when copies > 1. Outputs land in `work_dir`. Empty when nothing is needed.
std::vector<Command> build_prepare_commands(const SequenceSpec& seq, Resolution target, int copies,
                                            const std::filesystem::path& work_dir,
                                            std::string_view binary = "ffmpeg");

/// Path of the raw input produced by build_prepare_commands (the source path
/// when no preparation is needed).
std::filesystem::path prepared_input_path(const SequenceSpec& seq, Resolution target, int copies,
                                          const std::filesystem::path& work_dir);

/// Container-level duplication of an encoded stream without re-encoding.
Command build_stream_duplicate_command(const std::filesystem::path& encoded, int copies,
                                       const std::filesystem::path& output,
                                       std::string_view binary = "ffmpeg");

} // namespace vcenergy
