#include <kaplan/backends.hpp>
#include <kaplan/descriptor_io.hpp>
#include <kaplan/error.hpp>
#include <kaplan/point_cloud_io.hpp>
#include <kaplan/process.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <system_error>

namespace kaplan {

namespace {

std::string make_uuid()
{
    static std::atomic<std::uint64_t> counter{0};
    static const std::uint64_t salt = [] {
        std::random_device rd;
        return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }();
    std::mt19937_64 rng(salt ^ (counter.fetch_add(1) * 0x9E3779B97F4A7C15ULL));
    const std::uint64_t a = rng();
    const std::uint64_t b = rng();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(a),
                  static_cast<unsigned long long>(b));
    return buf;
}

void remove_quietly(const std::filesystem::path& p)
{
    std::error_code ec;
    std::filesystem::remove(p, ec);
}

} // namespace

void validate_backend_output(const KaplanDescriptor& k0, const KaplanDescriptor& out)
{
    if (!k0.same_shape(out)) {
        throw ShapeMismatch("backend output has K=" + std::to_string(out.num_planes()) +
                            " R=" + std::to_string(out.resolution) + " or different planes; input has K=" +
                            std::to_string(k0.num_planes()) + " R=" + std::to_string(k0.resolution));
    }
    out.validate_layout();
    for (std::size_t p = 0; p < out.num_planes(); ++p) {
        for (const ChannelImage& img : out.channels[p].images) {
            for (double v : img.values()) {
                if (!std::isfinite(v)) {
                    throw ContractViolation("backend output contains a non-finite value");
                }
            }
        }
        for (double v : out.channels[p][Channel::valid].values()) {
            if (v < 0.0 || v > 1.0) {
                throw ContractViolation("backend output valid flag " + std::to_string(v) + " outside [0, 1]");
            }
        }
    }
}

void check_skip_connection(const KaplanDescriptor& k0, const KaplanDescriptor& out, double tolerance)
{
    for (std::size_t p = 0; p < k0.num_planes(); ++p) {
        for (int i = 0; i < k0.resolution; ++i) {
            for (int j = 0; j < k0.resolution; ++j) {
                if (k0.value(p, Channel::valid, i, j) < 0.5) {
                    continue;
                }
                for (std::size_t c = 0; c < kChannelsPerPlane; ++c) {
                    const double a = k0.channels[p].images[c].at(i, j);
                    const double b = out.channels[p].images[c].at(i, j);
                    if (std::abs(a - b) > tolerance) {
                        throw ContractViolation("backend changed input-valid cell (plane " + std::to_string(p) +
                                                ", " + std::to_string(i) + ", " + std::to_string(j) + ")");
                    }
                }
            }
        }
    }
}

void enforce_skip_connection(const KaplanDescriptor& k0, KaplanDescriptor& out, double valid_threshold)
{
    for (std::size_t p = 0; p < k0.num_planes(); ++p) {
        for (int i = 0; i < k0.resolution; ++i) {
            for (int j = 0; j < k0.resolution; ++j) {
                if (k0.value(p, Channel::valid, i, j) >= 0.5) {
                    for (std::size_t c = 0; c < kChannelsPerPlane; ++c) {
                        out.channels[p].images[c].at(i, j) = k0.channels[p].images[c].at(i, j);
                    }
                } else if (out.value(p, Channel::valid, i, j) < valid_threshold) {
                    out.value(p, Channel::depth, i, j) = 0.0;
                    out.set_local_normal(p, i, j, Vector3::Zero());
                }
            }
        }
    }
}

KaplanDescriptor complete_descriptor(const CompletionBackend& backend, const KaplanDescriptor& k0,
                                     double valid_threshold)
{
    KaplanDescriptor out = backend.infer(k0);
    validate_backend_output(k0, out);
    if (backend.strict_skip()) {
        check_skip_connection(k0, out, CompletionBackend::skip_tolerance);
    }
    enforce_skip_connection(k0, out, valid_threshold);
    out.query = k0.query;
    out.query_index = k0.query_index;
    return out;
}

GtOracleBackend::GtOracleBackend(PointCloud complete_cloud, KaplanConfig aggregation)
    : cloud_(std::move(complete_cloud)), aggregation_(aggregation)
{
    if (cloud_.size() == 0) {
        throw InvalidArgument("gt-oracle backend needs a non-empty complete cloud");
    }
}

KaplanDescriptor GtOracleBackend::infer(const KaplanDescriptor& k0) const
{
    return build_kaplan(cloud_, k0.query, k0.planes, aggregation_, k0.query_index);
}

ExternalBackend::ExternalBackend(std::string command, std::filesystem::path io_dir, std::chrono::milliseconds timeout)
    : command_(std::move(command)), io_dir_(std::move(io_dir)), timeout_(timeout)
{
    if (command_.empty()) {
        throw InvalidArgument("external backend: empty command");
    }
    std::filesystem::create_directories(io_dir_);
}

KaplanDescriptor ExternalBackend::infer(const KaplanDescriptor& k0) const
{
    const std::string id = make_uuid();
    const auto in_path = io_dir_ / ("in_" + id + ".kpln");
    const auto out_path = io_dir_ / ("out_" + id + ".kpln");

    struct Cleanup {
        const ExternalBackend& self;
        std::filesystem::path a;
        std::filesystem::path b;
        ~Cleanup()
        {
            if (!self.keep_files_) {
                remove_quietly(a);
                remove_quietly(b);
            }
        }
    } cleanup{*this, in_path, out_path};

    write_kpln(in_path, k0);
    const ProcessResult run = run_shell_command(command_, {in_path.string(), out_path.string()}, timeout_);
    if (run.timed_out) {
        throw ProcessTimeout("external backend did not finish within " + std::to_string(timeout_.count()) + " ms");
    }
    if (run.exit_code != 0) {
        throw ProcessFailed(run.exit_code, run.stderr_text);
    }
    if (!std::filesystem::exists(out_path)) {
        throw FormatError("external backend produced no output file " + out_path.string());
    }
    KaplanDescriptor out = read_kpln(out_path);
    out.query_index = k0.query_index;
    validate_backend_output(k0, out);
    return out;
}

std::unique_ptr<CompletionBackend> make_backend(const std::string& spec, const KaplanConfig& aggregation,
                                                const std::filesystem::path& io_dir)
{
    if (spec == "identity") {
        return std::make_unique<IdentityBackend>();
    }
    constexpr std::string_view gt_prefix = "gt-oracle:";
    constexpr std::string_view ext_prefix = "external:";
    if (spec.starts_with(gt_prefix)) {
        const std::string path = spec.substr(gt_prefix.size());
        if (path.empty()) {
            throw InvalidArgument("gt-oracle backend needs a cloud path: gt-oracle:<file>");
        }
        return std::make_unique<GtOracleBackend>(read_point_cloud(path), aggregation);
    }
    if (spec.starts_with(ext_prefix)) {
        return std::make_unique<ExternalBackend>(spec.substr(ext_prefix.size()), io_dir);
    }
    throw InvalidArgument("unknown backend '" + spec + "' (expected identity, gt-oracle:<file> or external:<command>)");
}

} // namespace kaplan
