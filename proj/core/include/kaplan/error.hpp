#ifndef KAPLAN_ERROR_HPP
#define KAPLAN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kaplan {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or a configuration value was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed, or its contents could not be parsed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A descriptor file is structurally malformed (bad magic, truncated, ...).
class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// Two descriptors (or a backend output and its input) disagree in K, R or planes.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// A backend output broke the completion contract (valid range, skip cells).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A completion backend failed while processing one query point. The
/// original exception is attached with std::throw_with_nested.
class BackendFailure : public Error {
public:
    BackendFailure(std::size_t query_index, const std::string& what)
        : Error("backend failed at query " + std::to_string(query_index) + ": " + what), query_index_(query_index)
    {
    }

    std::size_t query_index() const noexcept { return query_index_; }

private:
    std::size_t query_index_;
};

/// An external backend process exited with a non-zero status.
class ProcessFailed : public Error {
public:
    ProcessFailed(int exit_code, std::string captured_stderr)
        : Error("external backend exited with status " + std::to_string(exit_code) +
                (captured_stderr.empty() ? std::string() : ": " + captured_stderr)),
          exit_code_(exit_code),
          stderr_(std::move(captured_stderr))
    {
    }

    int exit_code() const noexcept { return exit_code_; }
    const std::string& captured_stderr() const noexcept { return stderr_; }

private:
    int exit_code_;
    std::string stderr_;
};

/// An external backend process did not finish within its deadline.
class ProcessTimeout : public Error {
public:
    using Error::Error;
};

} // namespace kaplan

#endif // KAPLAN_ERROR_HPP
