// kaplan: command-line front end for hole synthesis, completion,
// descriptor export, denoising and evaluation.

#include <kaplan/backends.hpp>
#include <kaplan/completion.hpp>
#include <kaplan/config.hpp>
#include <kaplan/datagen.hpp>
#include <kaplan/descriptor.hpp>
#include <kaplan/descriptor_io.hpp>
#include <kaplan/error.hpp>
#include <kaplan/metrics.hpp>
#include <kaplan/parallel.hpp>
#include <kaplan/point_cloud_io.hpp>
#include <kaplan/version.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

/// Run record written next to every command's outputs.
class Manifest {
public:
    explicit Manifest(std::string command)
    {
        doc_["command"] = std::move(command);
        doc_["version"] = kaplan::kVersion;
        doc_["timings_s"] = json::object();
    }

    json& operator[](const char* key) { return doc_[key]; }

    template <class F>
    auto timed(const char* stage, F&& f)
    {
        const auto start = std::chrono::steady_clock::now();
        struct Record {
            json& timings;
            const char* stage;
            std::chrono::steady_clock::time_point start;
            ~Record()
            {
                timings[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        } record{doc_["timings_s"], stage, start};
        return f();
    }

    void write(const fs::path& path) const
    {
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        std::ofstream out(path);
        if (!out) {
            throw kaplan::IoError("cannot write manifest " + path.string());
        }
        out << doc_.dump(2) << '\n';
    }

private:
    json doc_;
};

struct CommonOptions {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t threads = 0;
    std::string manifest;
};

void add_common(CLI::App& cmd, CommonOptions& opts)
{
    cmd.add_option("--seed", opts.seed, "Random seed")->each([&opts](const std::string&) { opts.seed_given = true; });
    cmd.add_option("--threads", opts.threads, "Worker threads (default: KAPLAN_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    cmd.add_option("--manifest", opts.manifest, "Run manifest path");
}

void apply_threads(const CommonOptions& opts)
{
    if (opts.threads > 0) {
        kaplan::set_default_thread_count(opts.threads);
    }
}

fs::path manifest_path(const CommonOptions& opts, const fs::path& fallback)
{
    return opts.manifest.empty() ? fallback : fs::path(opts.manifest);
}

fs::path sibling_manifest(const fs::path& output)
{
    fs::path p = output;
    p.replace_extension(".manifest.json");
    return p;
}

kaplan::PointCloud load_nonempty(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw kaplan::IoError("no such file: " + path.string());
    }
    kaplan::PointCloud cloud = kaplan::read_point_cloud(path);
    if (cloud.empty()) {
        throw kaplan::InvalidArgument("empty input: " + path.string());
    }
    return cloud;
}

json report_json(const kaplan::EvalReport& r)
{
    return json{{"region", std::string(kaplan::to_string(r.region))},
                {"chamfer", std::isnan(r.chamfer) ? json(nullptr) : json(r.chamfer)},
                {"chamfer_x1e3", std::isnan(r.chamfer) ? json(nullptr) : json(1e3 * r.chamfer)},
                {"accuracy", r.accuracy},
                {"completeness", r.completeness},
                {"f1", r.f1},
                {"threshold", r.threshold},
                {"pred_count", r.pred_count},
                {"gt_count", r.gt_count},
                {"empty_restriction", r.empty_restriction}};
}

json cloud_summary(const fs::path& path, const kaplan::PointCloud& cloud)
{
    return json{{"path", path.string()}, {"points", cloud.size()}};
}

// gen-holes ---------------------------------------------------------------

struct GenHolesOptions {
    std::string input;
    std::string output_dir;
    double fraction = 0.1;
    std::optional<std::size_t> center;
    std::vector<double> ratios{0.25, 0.5, 1.0};
};

int run_gen_holes(const GenHolesOptions& o, const CommonOptions& c)
{
    apply_threads(c);
    Manifest m("gen-holes");
    const fs::path out_dir(o.output_dir);
    const kaplan::PointCloud cloud = m.timed("load", [&] { return load_nonempty(o.input); });

    kaplan::HoleSpec spec;
    spec.fraction = o.fraction;
    spec.center_index = o.center;
    spec.seed = c.seed;
    const kaplan::HoleSplit split = m.timed("hole", [&] { return kaplan::synthesize_hole(cloud, spec); });
    const auto levels = m.timed("levels", [&] {
        return kaplan::build_level_hierarchy(split.incomplete, split.missing, o.ratios, c.seed);
    });

    json files = json::array();
    m.timed("write", [&] {
        fs::create_directories(out_dir);
        for (const kaplan::LevelData& level : levels) {
            const std::string prefix = "level" + std::to_string(level.level_id) + "_";
            const fs::path inc = out_dir / (prefix + "incomplete.ply");
            const fs::path mis = out_dir / (prefix + "missing.ply");
            const fs::path com = out_dir / (prefix + "complete.ply");
            kaplan::write_point_cloud(inc, level.incomplete);
            kaplan::write_point_cloud(mis, level.missing);
            kaplan::write_point_cloud(com, level.complete);
            files.push_back(json{{"level", level.level_id},
                                 {"incomplete", cloud_summary(inc, level.incomplete)},
                                 {"missing", cloud_summary(mis, level.missing)},
                                 {"complete", cloud_summary(com, level.complete)}});
        }
        return 0;
    });

    m["input"] = cloud_summary(o.input, cloud);
    m["seed"] = c.seed;
    m["fraction"] = o.fraction;
    m["center_index"] = split.center_index;
    m["ratios"] = o.ratios;
    m["levels"] = files;
    m.write(manifest_path(c, out_dir / "manifest.json"));
    std::cout << "hole: " << split.missing.size() << " of " << cloud.size() << " points around index "
              << split.center_index << "\n";
    return 0;
}

// complete ----------------------------------------------------------------

struct CompleteOptions {
    std::string input;
    std::string output;
    std::string backend = "identity";
    std::string config;
    std::string missing;
    std::string gt;
    std::string debug_dir;
    double tau = 0.01;
};

int run_complete(const CompleteOptions& o, const CommonOptions& c)
{
    apply_threads(c);
    Manifest m("complete");
    kaplan::PipelineConfig cfg =
        o.config.empty() ? kaplan::PipelineConfig::defaults() : kaplan::load_pipeline_config(o.config);
    if (c.seed_given) {
        cfg.rng_seed = c.seed;
    }
    if (c.threads > 0) {
        cfg.threads = c.threads;
    }
    const kaplan::PointCloud cloud = m.timed("load", [&] { return load_nonempty(o.input); });
    const kaplan::KaplanConfig aggregation = cfg.levels.empty() ? kaplan::KaplanConfig{} : cfg.levels.front().kaplan;
    const fs::path io_dir = o.debug_dir.empty() ? fs::temp_directory_path() : fs::path(o.debug_dir) / "io";
    const auto backend = kaplan::make_backend(o.backend, aggregation, io_dir);

    kaplan::CompletionTrace trace;
    const kaplan::PointCloud completed =
        m.timed("complete", [&] { return kaplan::complete(cloud, *backend, cfg, &trace); });
    m.timed("write", [&] {
        kaplan::write_point_cloud(o.output, completed);
        return 0;
    });

    json levels = json::array();
    for (std::size_t l = 0; l < trace.levels.size(); ++l) {
        const kaplan::LevelResult& lr = trace.levels[l];
        json lj{{"level", l},
                {"side_length", lr.settings.kaplan.side_length},
                {"queries", lr.queries.size()},
                {"raw_predictions", lr.raw_predictions},
                {"new_points", lr.new_points.size()},
                {"points_after", lr.augmented.size()}};
        if (!o.debug_dir.empty()) {
            const fs::path dir(o.debug_dir);
            fs::create_directories(dir);
            const fs::path level_path = dir / ("level" + std::to_string(l) + ".ply");
            kaplan::write_point_cloud(level_path, lr.augmented);
            kaplan::PointCloud fresh;
            fresh.points = lr.new_points;
            const fs::path new_path = dir / ("level" + std::to_string(l) + "_new.ply");
            kaplan::write_point_cloud(new_path, fresh);

            json provenance = json::array();
            for (const kaplan::FilteredPrediction& f : lr.survivors) {
                provenance.push_back(json{{"point", {f.record.point.x(), f.record.point.y(), f.record.point.z()}},
                                          {"query", f.record.source_query},
                                          {"plane", f.record.source_plane},
                                          {"cell", {f.record.cell_i, f.record.cell_j}},
                                          {"depth", f.record.predicted_depth},
                                          {"supporting_queries", f.supporting_queries}});
            }
            std::ofstream(dir / ("level" + std::to_string(l) + "_provenance.json")) << provenance.dump(1) << '\n';
            lj["cloud"] = level_path.string();
        }
        levels.push_back(std::move(lj));
    }

    m["config"] = json::parse(kaplan::pipeline_config_to_json(cfg));
    m["seed"] = cfg.rng_seed;
    m["backend"] = o.backend;
    m["input"] = cloud_summary(o.input, cloud);
    m["output"] = cloud_summary(o.output, completed);
    m["levels"] = levels;

    if (!o.missing.empty()) {
        std::string gt_path = o.gt;
        if (gt_path.empty() && o.backend.rfind("gt-oracle:", 0) == 0) {
            gt_path = o.backend.substr(std::string("gt-oracle:").size());
        }
        if (gt_path.empty()) {
            throw kaplan::InvalidArgument("--missing needs --gt or a gt-oracle backend");
        }
        const kaplan::PointCloud gt = load_nonempty(gt_path);
        const kaplan::PointCloud missing = load_nonempty(o.missing);
        const auto report = m.timed(
            "eval", [&] { return kaplan::hole_region_report(completed, gt, missing, o.tau, cfg.threads); });
        m["hole_only"] = report_json(report);
        std::printf("hole-only F1 %.2f (accuracy %.2f, completeness %.2f)\n", report.f1, report.accuracy,
                    report.completeness);
    }
    m.write(manifest_path(c, sibling_manifest(o.output)));
    std::cout << "completed: " << cloud.size() << " -> " << completed.size() << " points\n";
    return 0;
}

// descriptors -------------------------------------------------------------

struct DescriptorOptions {
    std::string input;
    std::string output_dir;
    std::size_t count = 0;
    std::string queries;
    std::string config;
};

int run_descriptors(const DescriptorOptions& o, const CommonOptions& c)
{
    apply_threads(c);
    Manifest m("descriptors");
    kaplan::KaplanConfig cfg = o.config.empty() ? kaplan::KaplanConfig{} : kaplan::load_kaplan_config(o.config);
    if (c.seed_given) {
        cfg.rng_seed = c.seed;
    }
    cfg.validate();
    if ((o.count == 0) == o.queries.empty()) {
        throw kaplan::InvalidArgument("give exactly one of --count and --queries");
    }
    const kaplan::PointCloud cloud = m.timed("load", [&] { return load_nonempty(o.input); });
    const std::vector<kaplan::Point3> queries =
        o.queries.empty() ? kaplan::select_query_points(cloud, o.count, cfg.rng_seed) : load_nonempty(o.queries).points;

    const kaplan::IndexedCloud indexed(cloud);
    std::vector<kaplan::KaplanDescriptor> descriptors(queries.size());
    m.timed("build", [&] {
        kaplan::parallel_for(queries.size(), [&](std::size_t q) {
            descriptors[q] = kaplan::build_kaplan(indexed, queries[q], cfg, q);
        });
        return 0;
    });

    const fs::path out_dir(o.output_dir);
    json files = json::array();
    m.timed("write", [&] {
        fs::create_directories(out_dir);
        for (std::size_t q = 0; q < descriptors.size(); ++q) {
            char name[32];
            std::snprintf(name, sizeof name, "desc_%05zu.kpln", q);
            kaplan::write_kpln(out_dir / name, descriptors[q]);
            files.push_back(json{{"file", name}, {"query", {queries[q].x(), queries[q].y(), queries[q].z()}}});
        }
        return 0;
    });

    m["config"] = json::parse(kaplan::kaplan_config_to_json(cfg));
    m["seed"] = cfg.rng_seed;
    m["input"] = cloud_summary(o.input, cloud);
    m["descriptors"] = files;
    m.write(manifest_path(c, out_dir / "manifest.json"));
    std::cout << "wrote " << descriptors.size() << " descriptors to " << out_dir.string() << "\n";
    return 0;
}

// denoise -----------------------------------------------------------------

struct DenoiseOptions {
    std::string input;
    std::string output;
    std::string backend = "identity";
    std::string config;
    double valid_threshold = 0.5;
};

int run_denoise(const DenoiseOptions& o, const CommonOptions& c)
{
    apply_threads(c);
    Manifest m("denoise");
    kaplan::KaplanConfig cfg = o.config.empty() ? kaplan::KaplanConfig{} : kaplan::load_kaplan_config(o.config);
    if (c.seed_given) {
        cfg.rng_seed = c.seed;
    }
    cfg.validate();
    const kaplan::PointCloud cloud = m.timed("load", [&] { return load_nonempty(o.input); });
    const auto backend = kaplan::make_backend(o.backend, cfg, fs::temp_directory_path());
    const kaplan::PointCloud out =
        m.timed("denoise", [&] { return kaplan::denoise(cloud, *backend, cfg, o.valid_threshold, c.threads); });
    m.timed("write", [&] {
        kaplan::write_point_cloud(o.output, out);
        return 0;
    });

    double moved = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        moved += (out.points[i] - cloud.points[i]).norm();
    }
    m["config"] = json::parse(kaplan::kaplan_config_to_json(cfg));
    m["seed"] = cfg.rng_seed;
    m["backend"] = o.backend;
    m["valid_threshold"] = o.valid_threshold;
    m["input"] = cloud_summary(o.input, cloud);
    m["output"] = cloud_summary(o.output, out);
    m["mean_displacement"] = moved / static_cast<double>(cloud.size());
    m.write(manifest_path(c, sibling_manifest(o.output)));
    std::cout << "denoised " << cloud.size() << " points\n";
    return 0;
}

// eval --------------------------------------------------------------------

struct EvalOptions {
    std::string pred;
    std::string gt;
    std::string missing;
    std::string report;
    double tau = 0.01;
};

void print_table(const std::vector<kaplan::EvalReport>& reports)
{
    std::printf("%-10s | %10s | %7s | %8s | %12s | %8s | %8s\n", "region", "10^3*CD", "F1", "accuracy",
                "completeness", "#pred", "#gt");
    for (const kaplan::EvalReport& r : reports) {
        char cd[32];
        if (std::isnan(r.chamfer)) {
            std::snprintf(cd, sizeof cd, "%s", "n/a");
        } else {
            std::snprintf(cd, sizeof cd, "%.3f", 1e3 * r.chamfer);
        }
        std::printf("%-10s | %10s | %7.2f | %8.2f | %12.2f | %8zu | %8zu\n",
                    std::string(kaplan::to_string(r.region)).c_str(), cd, r.f1, r.accuracy, r.completeness,
                    r.pred_count, r.gt_count);
    }
}

int run_eval(const EvalOptions& o, const CommonOptions& c)
{
    apply_threads(c);
    Manifest m("eval");
    const kaplan::PointCloud pred = load_nonempty(o.pred);
    const kaplan::PointCloud gt = load_nonempty(o.gt);
    std::vector<kaplan::EvalReport> reports;
    reports.push_back(m.timed("global", [&] { return kaplan::f1_score(pred, gt, o.tau, c.threads); }));
    if (!o.missing.empty()) {
        const kaplan::PointCloud missing = load_nonempty(o.missing);
        reports.push_back(
            m.timed("hole_only", [&] { return kaplan::hole_region_report(pred, gt, missing, o.tau, c.threads); }));
    }
    print_table(reports);

    m["pred"] = cloud_summary(o.pred, pred);
    m["gt"] = cloud_summary(o.gt, gt);
    if (!o.missing.empty()) {
        m["missing"] = o.missing;
    }
    m["threshold"] = o.tau;
    m["seed"] = c.seed;
    json results = json::object();
    for (const auto& r : reports) {
        results[std::string(kaplan::to_string(r.region))] = report_json(r);
    }
    m["results"] = results;
    if (!o.report.empty()) {
        m.write(o.report);
    } else if (!c.manifest.empty()) {
        m.write(c.manifest);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"KAPLAN point cloud completion toolkit"};
    app.set_version_flag("--version", std::string(kaplan::kVersion));
    app.require_subcommand(1);

    CommonOptions common;

    GenHolesOptions gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-holes", "Cut a hole and build the coarse-to-fine level data");
    gen_cmd->add_option("input", gen.input, "Complete point cloud (.ply or .xyz)")->required();
    gen_cmd->add_option("-o,--output-dir", gen.output_dir, "Output directory")->required();
    gen_cmd->add_option("--fraction", gen.fraction, "Fraction of points to remove")
        ->check(CLI::Range(0.0, 1.0).description("in (0, 1)"));
    gen_cmd->add_option("--center", gen.center, "Hole center point index (default: seeded random)");
    gen_cmd->add_option("--ratios", gen.ratios, "Sampling ratio per level, coarse to fine")->delimiter(',');
    add_common(*gen_cmd, common);

    CompleteOptions comp;
    CLI::App* comp_cmd = app.add_subcommand("complete", "Coarse-to-fine shape completion");
    comp_cmd->add_option("input", comp.input, "Incomplete point cloud")->required();
    comp_cmd->add_option("-o,--output", comp.output, "Completed point cloud")->required();
    comp_cmd->add_option("-b,--backend", comp.backend, "identity | gt-oracle:<complete.ply> | external:<command>");
    comp_cmd->add_option("-c,--config", comp.config, "Pipeline configuration (TOML or JSON)")
        ->check(CLI::ExistingFile);
    comp_cmd->add_option("--missing", comp.missing, "Missing region, enables hole-only evaluation");
    comp_cmd->add_option("--gt", comp.gt, "Complete ground truth for hole-only evaluation");
    comp_cmd->add_option("--tau", comp.tau, "F1 threshold")->check(CLI::PositiveNumber);
    comp_cmd->add_option("--debug-dir", comp.debug_dir, "Per-level clouds and provenance");
    add_common(*comp_cmd, common);

    DescriptorOptions desc;
    CLI::App* desc_cmd = app.add_subcommand("descriptors", "Export descriptors as .kpln files");
    desc_cmd->add_option("input", desc.input, "Point cloud")->required();
    desc_cmd->add_option("-o,--output-dir", desc.output_dir, "Output directory")->required();
    desc_cmd->add_option("-n,--count", desc.count, "Number of FPS query points");
    desc_cmd->add_option("-q,--queries", desc.queries, "Query points file (.xyz or .ply)");
    desc_cmd->add_option("-c,--config", desc.config, "Descriptor configuration (TOML or JSON)")
        ->check(CLI::ExistingFile);
    add_common(*desc_cmd, common);

    DenoiseOptions den;
    CLI::App* den_cmd = app.add_subcommand("denoise", "Move points by the backend's depth correction");
    den_cmd->add_option("input", den.input, "Noisy point cloud")->required();
    den_cmd->add_option("-o,--output", den.output, "Denoised point cloud")->required();
    den_cmd->add_option("-b,--backend", den.backend, "identity | gt-oracle:<clean.ply> | external:<command>");
    den_cmd->add_option("-c,--config", den.config, "Descriptor configuration (TOML or JSON)")
        ->check(CLI::ExistingFile);
    den_cmd->add_option("--valid-threshold", den.valid_threshold, "Central-cell vote threshold")
        ->check(CLI::Range(0.0, 1.0));
    add_common(*den_cmd, common);

    EvalOptions ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Chamfer distance and F1");
    eval_cmd->add_option("pred", ev.pred, "Predicted point cloud")->required();
    eval_cmd->add_option("gt", ev.gt, "Complete ground truth")->required();
    eval_cmd->add_option("--missing", ev.missing, "Missing region, adds a hole-only row");
    eval_cmd->add_option("--tau", ev.tau, "F1 threshold")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--report", ev.report, "JSON report path");
    add_common(*eval_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen_cmd) {
            if (!(gen.fraction > 0.0 && gen.fraction < 1.0)) {
                throw kaplan::InvalidArgument("--fraction must be in (0, 1)");
            }
            return run_gen_holes(gen, common);
        }
        if (*comp_cmd) return run_complete(comp, common);
        if (*desc_cmd) return run_descriptors(desc, common);
        if (*den_cmd) return run_denoise(den, common);
        if (*eval_cmd) return run_eval(ev, common);
    } catch (const kaplan::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const kaplan::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
