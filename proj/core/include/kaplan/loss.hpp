#ifndef KAPLAN_LOSS_HPP
#define KAPLAN_LOSS_HPP

#include <kaplan/descriptor.hpp>

namespace kaplan {

struct LossWeights {
    double valid = 0.75;
    double depth = 1.0;
    double normal = 0.01;
};

struct LossBreakdown {
    double valid_loss = 0.0;
    double depth_loss = 0.0;
    double normal_loss = 0.0;
    double total = 0.0;
};

/// Training loss between a predicted and a ground-truth descriptor.
///
/// valid: mean |V - V^| over all K * R * R cells.
/// depth: per-plane mean |D - D^| over cells where the gt valid flag is
///        >= 0.5, averaged over the K planes (an empty mask contributes 0).
/// normal: same masking, with 1 - cos(angle) between the normals; a zero
///        normal counts as cos = 0. Skipped when gt carries no normals.
///
/// Throws ShapeMismatch if K or R differ.
LossBreakdown compute_losses(const KaplanDescriptor& pred, const KaplanDescriptor& gt,
                             const LossWeights& weights = {});

} // namespace kaplan

#endif // KAPLAN_LOSS_HPP
