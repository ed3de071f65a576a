#include <kaplan/error.hpp>
#include <kaplan/process.hpp>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <thread>

extern char** environ;

namespace kaplan {

namespace {

class TempFile {
public:
    TempFile()
    {
        const char* dir = std::getenv("TMPDIR");
        path_ = std::string(dir && *dir ? dir : "/tmp") + "/kaplan-stderr-XXXXXX";
        fd_ = ::mkstemp(path_.data());
        if (fd_ < 0) {
            throw IoError(std::string("cannot create temporary file: ") + std::strerror(errno));
        }
    }
    ~TempFile()
    {
        ::close(fd_);
        ::unlink(path_.c_str());
    }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    int fd() const { return fd_; }

    std::string contents() const
    {
        std::ifstream in(path_, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

private:
    std::string path_;
    int fd_ = -1;
};

class SpawnActions {
public:
    SpawnActions() { ::posix_spawn_file_actions_init(&actions_); }
    ~SpawnActions() { ::posix_spawn_file_actions_destroy(&actions_); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &actions_; }

private:
    posix_spawn_file_actions_t actions_{};
};

class SpawnAttr {
public:
    SpawnAttr() { ::posix_spawnattr_init(&attr_); }
    ~SpawnAttr() { ::posix_spawnattr_destroy(&attr_); }
    SpawnAttr(const SpawnAttr&) = delete;
    SpawnAttr& operator=(const SpawnAttr&) = delete;
    posix_spawnattr_t* get() { return &attr_; }

private:
    posix_spawnattr_t attr_{};
};

} // namespace

ProcessResult run_shell_command(const std::string& command, const std::vector<std::string>& args,
                                std::chrono::milliseconds timeout)
{
    TempFile err;
    SpawnActions actions;
    ::posix_spawn_file_actions_addopen(actions.get(), STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    ::posix_spawn_file_actions_addopen(actions.get(), STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
    ::posix_spawn_file_actions_adddup2(actions.get(), err.fd(), STDERR_FILENO);

    // Own process group, so a timeout can kill everything the shell started.
    SpawnAttr attr;
    ::posix_spawnattr_setflags(attr.get(), POSIX_SPAWN_SETPGROUP);
    ::posix_spawnattr_setpgroup(attr.get(), 0);

    std::vector<std::string> argv_storage{"/bin/sh", "-c", command + " \"$@\"", "sh"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (std::string& a : argv_storage) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);

    pid_t pid = 0;
    if (const int rc = ::posix_spawn(&pid, "/bin/sh", actions.get(), attr.get(), argv.data(), environ); rc != 0) {
        throw Error(std::string("cannot start /bin/sh: ") + std::strerror(rc));
    }

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    for (;;) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            break;
        }
        if (done < 0 && errno != EINTR) {
            throw Error(std::string("waitpid failed: ") + std::strerror(errno));
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

    if (!result.timed_out) {
        if (WIFEXITED(status)) {
            result.exit_code = WEXITSTATUS(status);
        } else if (WIFSIGNALED(status)) {
            result.exit_code = 128 + WTERMSIG(status);
        }
    }
    result.stderr_text = err.contents();
    while (!result.stderr_text.empty() && (result.stderr_text.back() == '\n' || result.stderr_text.back() == '\r')) {
        result.stderr_text.pop_back();
    }
    return result;
}

} // namespace kaplan
