#include "vcenergy/job.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <spawn.h>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace vcenergy {

namespace {

std::string quote(const std::string& s) {
    if (!s.empty() && s.find_first_of(" \t\"'\\$") == std::string::npos) {
        return s;
    }
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

} // namespace

std::string Command::to_string() const {
    std::string out = quote(program);
    for (const auto& a : args) {
        out += ' ';
        out += quote(a);
    }
    return out;
}

ProcessExecutor::ProcessExecutor(std::filesystem::path log) : log_(std::move(log)) {}

ExecResult ProcessExecutor::execute(const Command& command) {
    std::error_code ec;
    if (!command.output.empty()) {
        std::filesystem::remove(command.output, ec);
    }

    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(command.program.c_str()));
    for (const auto& a : command.args) {
        argv.push_back(const_cast<char*>(a.c_str()));
    }
    argv.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    const std::string sink = log_.empty() ? "/dev/null" : log_.string();
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, sink.c_str(),
                                     O_WRONLY | O_CREAT | O_APPEND, 0644);
    posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);

    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, command.program.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw SpawnError("cannot spawn '" + command.program + "': " + std::strerror(rc));
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            throw SpawnError("waitpid failed: " + std::string(std::strerror(errno)));
        }
    }
    ExecResult result;
    if (WIFEXITED(status)) {
        result.exit_status = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_status = 128 + WTERMSIG(status);
    } else {
        result.exit_status = -1;
    }
    if (!command.output.empty() && std::filesystem::exists(command.output, ec)) {
        result.output_size = std::filesystem::file_size(command.output, ec);
    }
    return result;
}

JobFailed::JobFailed(JobRecord record)
    : Error("job '" + record.job_id + "' repetition " + std::to_string(record.repetition_index) +
            " exited with status " + std::to_string(record.exit_status)),
      record_(std::move(record)) {}

JobRecord run_job(const JobSpec& job, Executor& executor, Clock& clock) {
    JobRecord record;
    record.job_id = job.job_id;
    record.sequence_id = job.sequence_id;
    record.params = job.params;
    record.repetition_index = job.repetition_index;

    record.start = clock.now();
    const ExecResult result = executor.execute(job.command);
    record.end = clock.now();

    record.exit_status = result.exit_status;
    record.output_size = result.output_size;
    if (result.exit_status != 0) {
        throw JobFailed(std::move(record));
    }
    return record;
}

double extract_bitrate(const JobRecord& record, double media_duration) {
    if (!(media_duration > 0.0)) {
        throw std::invalid_argument("media duration must be positive");
    }
    if (record.output_size == 0) {
        throw std::invalid_argument("job '" + record.job_id + "' has no output size");
    }
    return static_cast<double>(record.output_size) * 8.0 / media_duration / 1000.0;
}

} // namespace vcenergy
