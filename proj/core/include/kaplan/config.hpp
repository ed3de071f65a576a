#ifndef KAPLAN_CONFIG_HPP
#define KAPLAN_CONFIG_HPP

#include <kaplan/completion.hpp>
#include <kaplan/planes.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace kaplan {

// Configuration files are TOML, or JSON when the text starts with '{' or
// the file ends in ".json". Keys (all optional):
//
//   seed = 7                      valid_threshold = 0.5
//   [kaplan]                      shared descriptor settings
//   num_planes, resolution, side_length, orientation ("canonical",
//   "random", "tangential"), depth_agg_threshold, valid_center_radius,
//   tangent_neighbors
//   [[levels]]                    one table per level, coarse to fine
//   num_query_points, side_length, depth_change_threshold,
//   filter_voxel_size, gaussian_sigma, min_support, plus any [kaplan] key
//   as a per-level override
//
// Missing [[levels]] means the three default levels. Malformed files and
// invalid values raise InvalidArgument.

PipelineConfig parse_pipeline_config(std::string_view text, bool json);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// The [kaplan] table alone (plus "seed"), for single-descriptor commands.
KaplanConfig parse_kaplan_config(std::string_view text, bool json);
KaplanConfig load_kaplan_config(const std::filesystem::path& path);

/// JSON snapshot of a configuration, for run manifests.
std::string pipeline_config_to_json(const PipelineConfig& config);
std::string kaplan_config_to_json(const KaplanConfig& config);

} // namespace kaplan

#endif // KAPLAN_CONFIG_HPP
