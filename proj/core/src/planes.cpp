#include <kaplan/error.hpp>
#include <kaplan/planes.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace kaplan {

namespace {

constexpr double kFrameTolerance = 1e-6;
constexpr double kMinRandomAngleDeg = 30.0;
constexpr int kMaxRejections = 1000;

PlaneFrame frame_from_axes(const Point3& origin, const Vector3& u, const Vector3& v, const Vector3& w,
                           const KaplanConfig& config)
{
    PlaneFrame f;
    f.origin = origin;
    f.u_axis = u;
    f.v_axis = v;
    f.w_axis = w;
    f.side_length = config.side_length;
    f.resolution = config.resolution;
    return f;
}

PlaneFrame rotated(const PlaneFrame& f, const Eigen::Matrix3d& r)
{
    PlaneFrame out = f;
    out.u_axis = (r * f.u_axis).normalized();
    out.v_axis = (r * f.v_axis).normalized();
    out.w_axis = (r * f.w_axis).normalized();
    return out;
}

Eigen::Matrix3d rotation(const Vector3& axis, double degrees)
{
    return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
}

/// Frame with normal w; u is the coordinate axis least aligned with w,
/// orthogonalised against it.
PlaneFrame frame_from_normal(const Point3& origin, const Vector3& normal, const KaplanConfig& config)
{
    const Vector3 w = normal.normalized();
    int axis = 0;
    w.cwiseAbs().minCoeff(&axis);
    const Vector3 e = Vector3::Unit(axis);
    const Vector3 u = (e - e.dot(w) * w).normalized();
    const Vector3 v = w.cross(u);
    return frame_from_axes(origin, u, v, w, config);
}

/// 53 random bits mapped to [0, 1); portable across standard libraries.
double uniform01(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Vector3 random_direction(std::mt19937_64& rng)
{
    const double z = 2.0 * uniform01(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vector3(r * std::cos(phi), r * std::sin(phi), z);
}

double unoriented_angle_deg(const Vector3& a, const Vector3& b)
{
    const double c = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
    return std::acos(c) * 180.0 / std::numbers::pi;
}

} // namespace

Eigen::Vector2d PlaneFrame::cell_center(int i, int j) const
{
    // (2i + 1 - R) / (2R) * side is exactly 0 for the central cell.
    const double denom = 2.0 * resolution;
    return {(2.0 * i + 1.0 - resolution) / denom * side_length, (2.0 * j + 1.0 - resolution) / denom * side_length};
}

Vector3 PlaneFrame::project(const Point3& p) const
{
    const Vector3 d = p - origin;
    return {d.dot(u_axis), d.dot(v_axis), d.dot(w_axis)};
}

std::optional<std::pair<int, int>> PlaneFrame::cell_of(double u, double v) const
{
    const double half = 0.5 * side_length;
    const double cell = cell_size();
    auto index = [&](double c) -> std::optional<int> {
        if (!(std::abs(c) <= half * (1.0 + 1e-12))) {
            return std::nullopt;
        }
        const int k = static_cast<int>(std::floor((c + half) / cell));
        return std::clamp(k, 0, resolution - 1);
    };
    const auto i = index(u);
    const auto j = index(v);
    if (!i || !j) {
        return std::nullopt;
    }
    return std::pair{*i, *j};
}

void PlaneFrame::validate() const
{
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
        throw InvalidArgument("plane side length must be positive");
    }
    if (resolution < 3 || resolution % 2 == 0) {
        throw InvalidArgument("plane resolution must be odd and >= 3, got " + std::to_string(resolution));
    }
    for (const Vector3* a : {&u_axis, &v_axis, &w_axis}) {
        if (std::abs(a->norm() - 1.0) > kFrameTolerance) {
            throw InvalidArgument("plane axis is not unit length");
        }
    }
    if (std::abs(u_axis.dot(v_axis)) > kFrameTolerance || std::abs(u_axis.dot(w_axis)) > kFrameTolerance ||
        std::abs(v_axis.dot(w_axis)) > kFrameTolerance) {
        throw InvalidArgument("plane axes are not orthogonal");
    }
    if ((u_axis.cross(v_axis) - w_axis).norm() > kFrameTolerance) {
        throw InvalidArgument("plane frame is not right-handed");
    }
}

std::string_view to_string(OrientationMode mode)
{
    switch (mode) {
    case OrientationMode::canonical: return "canonical";
    case OrientationMode::random_min30: return "random";
    case OrientationMode::tangential: return "tangential";
    }
    return "canonical";
}

OrientationMode parse_orientation_mode(std::string_view text)
{
    if (text == "canonical") return OrientationMode::canonical;
    if (text == "random" || text == "random_min30") return OrientationMode::random_min30;
    if (text == "tangential") return OrientationMode::tangential;
    throw InvalidArgument("unknown orientation mode '" + std::string(text) + "'");
}

void KaplanConfig::validate() const
{
    if (num_planes < 1) {
        throw InvalidArgument("num_planes must be >= 1");
    }
    if (resolution < 3 || resolution % 2 == 0) {
        throw InvalidArgument("resolution must be odd and >= 3, got " + std::to_string(resolution));
    }
    if (!(side_length > 0.0) || !std::isfinite(side_length)) {
        throw InvalidArgument("side_length must be positive");
    }
    if (!(depth_agg_threshold > 0.0)) {
        throw InvalidArgument("depth_agg_threshold must be positive");
    }
    if (!(valid_center_radius > 0.0)) {
        throw InvalidArgument("valid_center_radius must be positive");
    }
    if (orientation == OrientationMode::canonical && num_planes != 3 && num_planes != 9 && num_planes != 27) {
        throw InvalidArgument("canonical orientation needs num_planes in {3, 9, 27}, got " +
                              std::to_string(num_planes));
    }
    if (orientation == OrientationMode::tangential && num_planes != 1) {
        throw InvalidArgument("tangential orientation uses exactly one plane");
    }
    if (tangent_neighbors < 3) {
        throw InvalidArgument("tangent_neighbors must be >= 3");
    }
}

double min_pairwise_normal_angle_deg(const std::vector<PlaneFrame>& planes)
{
    double best = 90.0;
    for (std::size_t a = 0; a < planes.size(); ++a) {
        for (std::size_t b = a + 1; b < planes.size(); ++b) {
            best = std::min(best, unoriented_angle_deg(planes[a].w_axis, planes[b].w_axis));
        }
    }
    return best;
}

std::vector<PlaneFrame> make_planes(const Point3& query, const KaplanConfig& config,
                                    const std::optional<Vector3>& query_normal)
{
    config.validate();
    std::vector<PlaneFrame> planes;

    switch (config.orientation) {
    case OrientationMode::canonical: {
        for (int a = 0; a < 3; ++a) {
            const Vector3 w = Vector3::Unit(a);
            const Vector3 u = Vector3::Unit((a + 1) % 3);
            planes.push_back(frame_from_axes(query, u, w.cross(u), w, config));
        }
        if (config.num_planes >= 9) {
            for (int a = 0; a < 3; ++a) {
                const PlaneFrame base = planes[static_cast<std::size_t>(a)];
                planes.push_back(rotated(base, rotation(base.u_axis, 45.0)));
                planes.push_back(rotated(base, rotation(base.u_axis, -45.0)));
            }
        }
        if (config.num_planes == 27) {
            const std::vector<PlaneFrame> nine = planes;
            for (const PlaneFrame& f : nine) {
                planes.push_back(rotated(f, rotation(f.w_axis, 45.0)));
                planes.push_back(rotated(f, rotation(f.w_axis, -45.0)));
            }
        }
        break;
    }
    case OrientationMode::random_min30: {
        std::mt19937_64 rng(config.rng_seed);
        const double cos_limit = std::cos(kMinRandomAngleDeg * std::numbers::pi / 180.0);
        int rejections = 0;
        while (static_cast<int>(planes.size()) < config.num_planes) {
            const Vector3 w = random_direction(rng);
            const bool ok = std::all_of(planes.begin(), planes.end(),
                                        [&](const PlaneFrame& f) { return std::abs(f.w_axis.dot(w)) <= cos_limit; });
            if (!ok) {
                if (++rejections >= kMaxRejections) {
                    throw InvalidArgument("random plane orientation: no direction at least 30 degrees from the " +
                                          std::to_string(planes.size()) + " accepted planes after " +
                                          std::to_string(kMaxRejections) + " draws");
                }
                continue;
            }
            rejections = 0;
            planes.push_back(frame_from_normal(query, w, config));
        }
        break;
    }
    case OrientationMode::tangential: {
        if (!query_normal || !(query_normal->norm() > 0.0) || !is_finite(*query_normal)) {
            throw InvalidArgument("tangential orientation needs a non-zero query normal");
        }
        planes.push_back(frame_from_normal(query, *query_normal, config));
        break;
    }
    }
    return planes;
}

} // namespace kaplan
