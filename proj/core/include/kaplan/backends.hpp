#ifndef KAPLAN_BACKENDS_HPP
#define KAPLAN_BACKENDS_HPP

#include <kaplan/descriptor.hpp>
#include <kaplan/kdtree.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

namespace kaplan {

/// Maps an input descriptor K0 to a completed descriptor K.
///
/// Implementations only provide the raw prediction. Callers go through
/// complete_descriptor(), which validates the output and imposes the
/// skip-connection contract: cells valid in K0 come back unchanged.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    virtual KaplanDescriptor infer(const KaplanDescriptor& k0) const = 0;

    virtual std::string name() const = 0;
    virtual bool supports_normals() const { return true; }
    /// Largest number of concurrent infer() calls; 0 means unbounded.
    virtual std::size_t max_concurrency() const { return 0; }
    /// When true, complete_descriptor() rejects outputs that move a K0-valid
    /// cell by more than `skip_tolerance` before re-imposing the exact values.
    virtual bool strict_skip() const { return false; }

    static constexpr double skip_tolerance = 1e-5;
};

/// Throws ShapeMismatch if `out` differs from `k0` in K, R or planes, and
/// ContractViolation if a valid flag is outside [0, 1] or not finite.
void validate_backend_output(const KaplanDescriptor& k0, const KaplanDescriptor& out);

/// Copies depth, valid flag and normal of every K0-valid cell (valid >= 0.5)
/// into `out`, and zeroes every cell invalid in both (output valid below
/// `valid_threshold`).
void enforce_skip_connection(const KaplanDescriptor& k0, KaplanDescriptor& out, double valid_threshold = 0.5);

/// Throws ContractViolation if a K0-valid cell of `out` differs from K0 by
/// more than `tolerance` in depth, valid flag or normal.
void check_skip_connection(const KaplanDescriptor& k0, const KaplanDescriptor& out, double tolerance);

/// infer() + validate_backend_output() + enforce_skip_connection(), with
/// check_skip_connection() first for strict backends.
KaplanDescriptor complete_descriptor(const CompletionBackend& backend, const KaplanDescriptor& k0,
                                     double valid_threshold = 0.5);

/// Returns its input.
class IdentityBackend final : public CompletionBackend {
public:
    KaplanDescriptor infer(const KaplanDescriptor& k0) const override { return k0; }
    std::string name() const override { return "identity"; }
};

/// Rebuilds every descriptor on the complete ground-truth cloud with the
/// same planes and aggregation settings: the best any learned completion
/// could do.
class GtOracleBackend final : public CompletionBackend {
public:
    GtOracleBackend(PointCloud complete_cloud, KaplanConfig aggregation);

    KaplanDescriptor infer(const KaplanDescriptor& k0) const override;
    std::string name() const override { return "gt-oracle"; }
    bool supports_normals() const override { return cloud_.cloud().has_normals(); }

    /// Depth threshold and valid radius are taken from this config; planes
    /// and resolution always come from the input descriptor.
    const KaplanConfig& aggregation() const noexcept { return aggregation_; }
    void set_aggregation(const KaplanConfig& aggregation) { aggregation_ = aggregation; }

private:
    IndexedCloud cloud_;
    KaplanConfig aggregation_;
};

/// Bridges to an out-of-process model through .kpln files.
///
/// Each call writes `<io_dir>/in_<uuid>.kpln`, runs
/// `command <in> <out>` through /bin/sh and reads `<io_dir>/out_<uuid>.kpln`.
/// Errors: ProcessFailed (non-zero exit, with captured stderr),
/// ProcessTimeout, FormatError (missing or malformed output),
/// ShapeMismatch, ContractViolation (valid range; through
/// complete_descriptor() also a K0-valid cell changed by more than
/// `skip_tolerance`).
class ExternalBackend final : public CompletionBackend {
public:
    ExternalBackend(std::string command, std::filesystem::path io_dir,
                    std::chrono::milliseconds timeout = std::chrono::seconds(60));

    KaplanDescriptor infer(const KaplanDescriptor& k0) const override;
    std::string name() const override { return "external"; }
    std::size_t max_concurrency() const override { return 1; }
    bool strict_skip() const override { return true; }

    /// Keep the exchanged .kpln files instead of deleting them after each call.
    void set_keep_files(bool keep) { keep_files_ = keep; }

private:
    std::string command_;
    std::filesystem::path io_dir_;
    std::chrono::milliseconds timeout_;
    bool keep_files_ = false;
};

/// Parses "identity", "gt-oracle:<cloud file>" or "external:<command>".
/// The gt-oracle cloud is read from disk; `aggregation` seeds its settings.
std::unique_ptr<CompletionBackend> make_backend(const std::string& spec, const KaplanConfig& aggregation,
                                                const std::filesystem::path& io_dir);

} // namespace kaplan

#endif // KAPLAN_BACKENDS_HPP
