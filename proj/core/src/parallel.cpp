#include <kaplan/parallel.hpp>

#include <atomic>
#include <cstdlib>
#include <string>

namespace kaplan {

namespace {

std::size_t initial_thread_count()
{
    if (const char* env = std::getenv("KAPLAN_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) {
                return static_cast<std::size_t>(n);
            }
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<std::size_t>& thread_setting()
{
    static std::atomic<std::size_t> value{initial_thread_count()};
    return value;
}

} // namespace

std::size_t default_thread_count()
{
    return thread_setting().load();
}

void set_default_thread_count(std::size_t threads)
{
    thread_setting().store(threads == 0 ? initial_thread_count() : threads);
}

} // namespace kaplan
