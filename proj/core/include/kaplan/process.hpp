#ifndef KAPLAN_PROCESS_HPP
#define KAPLAN_PROCESS_HPP

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace kaplan {

struct ProcessResult {
    int exit_code = 0;
    bool timed_out = false;
    std::string stderr_text;
};

/// Runs `/bin/sh -c "<command> \"$@\"" sh args...` and waits up to `timeout`.
/// A process still running at the deadline is killed and reported with
/// timed_out set. Standard output is discarded.
ProcessResult run_shell_command(const std::string& command, const std::vector<std::string>& args,
                                std::chrono::milliseconds timeout);

} // namespace kaplan

#endif // KAPLAN_PROCESS_HPP
