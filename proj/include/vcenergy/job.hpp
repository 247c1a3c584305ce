#pragma once

// Job execution: a command, an executor that runs it, and the JobRecord that
// timestamps it on the shared clock.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vcenergy/clock.hpp"
#include "vcenergy/errors.hpp"
#include "vcenergy/trace.hpp"

namespace vcenergy {

struct Command {
    std::string program;
    std::vector<std::string> args;
    std::filesystem::path output; ///< file the command writes; empty for none

    /// Shell-style rendering for logs.
    std::string to_string() const;

    friend bool operator==(const Command&, const Command&) = default;
};

struct ExecResult {
    int exit_status = 0;
    std::uint64_t output_size = 0;
};

class Executor {
public:
    virtual ~Executor() = default;

    /// Runs the command to completion. Throws SpawnError when it cannot start.
    virtual ExecResult execute(const Command& command) = 0;
};

class SpawnError : public Error {
public:
    using Error::Error;
};

/// Spawns real processes. A stale output file is removed before launch;
/// stdout/stderr go to `log` (appended) or /dev/null.
class ProcessExecutor final : public Executor {
public:
    explicit ProcessExecutor(std::filesystem::path log = {});

    ExecResult execute(const Command& command) override;

private:
    std::filesystem::path log_;
};

struct JobSpec {
    std::string job_id;
    std::string sequence_id;
    JobParams params;
    Command command;
    int repetition_index = 0;
};

/// Nonzero exit status. Carries the full record.
class JobFailed : public Error {
public:
    explicit JobFailed(JobRecord record);

    const JobRecord& record() const noexcept { return record_; }

private:
    JobRecord record_;
};

/// Executes one job. start/end are read from `clock` immediately around the
/// executor call. Throws JobFailed on nonzero exit.
JobRecord run_job(const JobSpec& job, Executor& executor, Clock& clock);

/// Output bitrate in kbit/s: bytes * 8 / duration / 1000.
double extract_bitrate(const JobRecord& record, double media_duration);

} // namespace vcenergy
