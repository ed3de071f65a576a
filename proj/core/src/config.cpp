#include <kaplan/config.hpp>
#include <kaplan/error.hpp>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>
#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace kaplan {

namespace {

using nlohmann::json;

const std::set<std::string> kKaplanKeys{"num_planes",          "resolution",          "side_length",
                                        "orientation",         "depth_agg_threshold", "valid_center_radius",
                                        "tangent_neighbors"};
const std::set<std::string> kLevelKeys{"num_query_points", "depth_change_threshold", "filter_voxel_size",
                                       "gaussian_sigma", "min_support"};

json to_json(std::string_view text, bool is_json)
{
    try {
        if (is_json) {
            return json::parse(text);
        }
        const toml::table table = toml::parse(text);
        std::ostringstream out;
        out << toml::json_formatter{table};
        return json::parse(out.str());
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config: " << e.description() << " at line " << e.source().begin.line;
        throw InvalidArgument(msg.str());
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
}

void require_object(const json& j, const std::string& where)
{
    if (!j.is_object()) {
        throw InvalidArgument("config: " + where + " must be a table");
    }
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where)
{
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) {
            throw InvalidArgument("config: " + where + "." + key + " must be a string");
        }
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw InvalidArgument("config: " + where + "." + key + " must be an integer");
        }
        if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
            throw InvalidArgument("config: " + where + "." + key + " must be non-negative");
        }
    } else {
        if (!v.is_number()) {
            throw InvalidArgument("config: " + where + "." + key + " must be a number");
        }
    }
    return v.get<T>();
}

void apply_kaplan_keys(const json& j, KaplanConfig& cfg, const std::string& where)
{
    if (j.contains("num_planes")) cfg.num_planes = get<int>(j, "num_planes", where);
    if (j.contains("resolution")) cfg.resolution = get<int>(j, "resolution", where);
    if (j.contains("side_length")) cfg.side_length = get<double>(j, "side_length", where);
    if (j.contains("orientation")) {
        cfg.orientation = parse_orientation_mode(get<std::string>(j, "orientation", where));
    }
    if (j.contains("depth_agg_threshold")) cfg.depth_agg_threshold = get<double>(j, "depth_agg_threshold", where);
    if (j.contains("valid_center_radius")) cfg.valid_center_radius = get<double>(j, "valid_center_radius", where);
    if (j.contains("tangent_neighbors")) cfg.tangent_neighbors = get<int>(j, "tangent_neighbors", where);
}

void reject_unknown(const json& j, const std::set<std::string>& a, const std::set<std::string>& b,
                    const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        if (!a.count(key) && !b.count(key)) {
            throw InvalidArgument("config: unknown key '" + key + "' in " + where);
        }
    }
}

KaplanConfig kaplan_from(const json& root)
{
    KaplanConfig cfg;
    if (root.contains("seed")) cfg.rng_seed = get<std::uint64_t>(root, "seed", "root");
    if (root.contains("kaplan")) {
        const json& k = root.at("kaplan");
        require_object(k, "kaplan");
        reject_unknown(k, kKaplanKeys, {}, "[kaplan]");
        apply_kaplan_keys(k, cfg, "kaplan");
    }
    return cfg;
}

PipelineConfig pipeline_from(const json& root)
{
    require_object(root, "root");
    reject_unknown(root, {"seed", "valid_threshold", "threads", "kaplan", "levels"}, {}, "root");

    const KaplanConfig shared = kaplan_from(root);
    PipelineConfig cfg;
    if (root.contains("levels")) {
        const json& levels = root.at("levels");
        if (!levels.is_array()) {
            throw InvalidArgument("config: levels must be an array of tables");
        }
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const json& lj = levels[l];
            const std::string where = "levels[" + std::to_string(l) + "]";
            require_object(lj, where);
            reject_unknown(lj, kKaplanKeys, kLevelKeys, where);
            LevelConfig level;
            level.level_id = static_cast<int>(l);
            level.kaplan = shared;
            apply_kaplan_keys(lj, level.kaplan, where);
            if (lj.contains("side_length")) level.side_length = level.kaplan.side_length;
            if (lj.contains("num_query_points")) {
                level.num_query_points = get<std::size_t>(lj, "num_query_points", where);
            }
            if (lj.contains("depth_change_threshold")) {
                level.depth_change_threshold = get<double>(lj, "depth_change_threshold", where);
            }
            if (lj.contains("filter_voxel_size")) level.filter_voxel_size = get<double>(lj, "filter_voxel_size", where);
            if (lj.contains("gaussian_sigma")) level.gaussian_sigma = get<double>(lj, "gaussian_sigma", where);
            if (lj.contains("min_support")) level.min_support = get<std::size_t>(lj, "min_support", where);
            cfg.levels.push_back(level);
        }
    } else {
        cfg = PipelineConfig::defaults();
        for (LevelConfig& level : cfg.levels) {
            level.kaplan = shared;
        }
    }
    cfg.rng_seed = shared.rng_seed;
    if (root.contains("valid_threshold")) cfg.valid_threshold = get<double>(root, "valid_threshold", "root");
    if (root.contains("threads")) cfg.threads = get<std::size_t>(root, "threads", "root");
    cfg.validate();
    return cfg;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool looks_like_json(const std::filesystem::path& path, std::string_view text)
{
    if (path.extension() == ".json") {
        return true;
    }
    const auto first = text.find_first_not_of(" \t\r\n");
    return first != std::string_view::npos && text[first] == '{';
}

json kaplan_json(const KaplanConfig& c)
{
    return json{{"num_planes", c.num_planes},
                {"resolution", c.resolution},
                {"side_length", c.side_length},
                {"orientation", std::string(to_string(c.orientation))},
                {"depth_agg_threshold", c.depth_agg_threshold},
                {"valid_center_radius", c.valid_center_radius},
                {"tangent_neighbors", c.tangent_neighbors},
                {"seed", c.rng_seed}};
}

} // namespace

PipelineConfig parse_pipeline_config(std::string_view text, bool is_json)
{
    return pipeline_from(to_json(text, is_json));
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    return parse_pipeline_config(text, looks_like_json(path, text));
}

KaplanConfig parse_kaplan_config(std::string_view text, bool is_json)
{
    const json root = to_json(text, is_json);
    require_object(root, "root");
    KaplanConfig cfg = kaplan_from(root);
    cfg.validate();
    return cfg;
}

KaplanConfig load_kaplan_config(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    return parse_kaplan_config(text, looks_like_json(path, text));
}

std::string pipeline_config_to_json(const PipelineConfig& config)
{
    json levels = json::array();
    for (const LevelConfig& l : config.levels) {
        json lj{{"level_id", l.level_id},
                {"num_query_points", l.num_query_points},
                {"min_support", l.min_support},
                {"kaplan", kaplan_json(l.kaplan)}};
        lj["side_length"] = l.side_length ? json(*l.side_length) : json(nullptr);
        lj["depth_change_threshold"] = l.depth_change_threshold ? json(*l.depth_change_threshold) : json(nullptr);
        lj["filter_voxel_size"] = l.filter_voxel_size ? json(*l.filter_voxel_size) : json(nullptr);
        lj["gaussian_sigma"] = l.gaussian_sigma ? json(*l.gaussian_sigma) : json(nullptr);
        levels.push_back(std::move(lj));
    }
    const json root{{"seed", config.rng_seed},
                    {"valid_threshold", config.valid_threshold},
                    {"threads", config.threads},
                    {"levels", levels}};
    return root.dump(2);
}

std::string kaplan_config_to_json(const KaplanConfig& config)
{
    return kaplan_json(config).dump(2);
}

} // namespace kaplan
