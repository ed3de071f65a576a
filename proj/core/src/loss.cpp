#include <kaplan/error.hpp>
#include <kaplan/loss.hpp>

#include <algorithm>
#include <cmath>

namespace kaplan {

LossBreakdown compute_losses(const KaplanDescriptor& pred, const KaplanDescriptor& gt, const LossWeights& weights)
{
    if (pred.num_planes() != gt.num_planes() || pred.resolution != gt.resolution) {
        throw ShapeMismatch("compute_losses: descriptors differ in plane count or resolution");
    }
    pred.validate_layout();
    gt.validate_layout();

    const int r = gt.resolution;
    const double k = static_cast<double>(gt.num_planes());
    const double cells = static_cast<double>(r) * static_cast<double>(r);
    const bool use_normals = gt.has_normals();

    LossBreakdown out;
    for (std::size_t p = 0; p < gt.num_planes(); ++p) {
        double valid_sum = 0.0;
        double depth_sum = 0.0;
        double normal_sum = 0.0;
        std::size_t masked = 0;
        for (int i = 0; i < r; ++i) {
            for (int j = 0; j < r; ++j) {
                const double v_gt = gt.value(p, Channel::valid, i, j);
                valid_sum += std::abs(v_gt - pred.value(p, Channel::valid, i, j));
                if (v_gt < 0.5) {
                    continue;
                }
                ++masked;
                depth_sum += std::abs(gt.value(p, Channel::depth, i, j) - pred.value(p, Channel::depth, i, j));
                if (use_normals) {
                    const Vector3 a = gt.local_normal(p, i, j);
                    const Vector3 b = pred.local_normal(p, i, j);
                    const double denom = a.norm() * b.norm();
                    const double cosine = denom > 0.0 ? std::clamp(a.dot(b) / denom, -1.0, 1.0) : 0.0;
                    normal_sum += 1.0 - cosine;
                }
            }
        }
        out.valid_loss += valid_sum / cells;
        if (masked > 0) {
            out.depth_loss += depth_sum / static_cast<double>(masked);
            out.normal_loss += normal_sum / static_cast<double>(masked);
        }
    }
    out.valid_loss /= k;
    out.depth_loss /= k;
    out.normal_loss /= k;
    out.total = weights.valid * out.valid_loss + weights.depth * out.depth_loss + weights.normal * out.normal_loss;
    return out;
}

} // namespace kaplan
