// Runs the kaplan executable end to end.

#include "support/fixtures.hpp"

#include <kaplan/descriptor_io.hpp>
#include <kaplan/point_cloud_io.hpp>

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args)
{
    const std::string cmd = std::string(KAPLAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p)
{
    return json::parse(slurp(p));
}

std::string q(const fs::path& p)
{
    return "'" + p.string() + "'";
}

double mean_abs_z(const kaplan::PointCloud& c)
{
    double s = 0;
    for (const auto& p : c.points) {
        s += std::abs(p.z());
    }
    return s / static_cast<double>(c.size());
}

} // namespace

TEST_CASE("gen-holes writes level files and a manifest")
{
    const auto dir = fixtures::scratch_dir("cli_gen");
    kaplan::write_point_cloud(dir / "cloud.ply", fixtures::sphere(10000, 0.5, 1));
    REQUIRE(run("gen-holes " + q(dir / "cloud.ply") + " -o " + q(dir / "a") + " --fraction 0.1 --seed 4 --ratios 1.0") == 0);
    CHECK(kaplan::read_point_cloud(dir / "a/level0_incomplete.ply").size() == 9000);
    CHECK(kaplan::read_point_cloud(dir / "a/level0_missing.ply").size() == 1000);
    const json m = read_json(dir / "a/manifest.json");
    CHECK(m["seed"] == 4);
    CHECK(m["fraction"] == 0.1);
    CHECK(m.contains("center_index"));
    CHECK(m["ratios"].size() == 1);

    REQUIRE(run("gen-holes " + q(dir / "cloud.ply") + " -o " + q(dir / "b") + " --fraction 0.1 --seed 4 --ratios 1.0") == 0);
    CHECK(slurp(dir / "a/level0_missing.ply") == slurp(dir / "b/level0_missing.ply"));
    CHECK(slurp(dir / "a/level0_incomplete.ply") == slurp(dir / "b/level0_incomplete.ply"));

    REQUIRE(run("gen-holes " + q(dir / "cloud.ply") + " -o " + q(dir / "c") + " --seed 4") == 0);
    CHECK(kaplan::read_point_cloud(dir / "c/level0_incomplete.ply").size() == 2250);
    CHECK(kaplan::read_point_cloud(dir / "c/level2_complete.ply").size() == 10000);

    CHECK(run("gen-holes " + q(dir / "cloud.ply") + " -o " + q(dir / "d") + " --fraction 1.5") == 2);
    CHECK(run("gen-holes " + q(dir / "nope.ply") + " -o " + q(dir / "d")) == 2);
    CHECK(run("gen-holes") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("complete: identity, gt oracle, config errors and determinism")
{
    const auto dir = fixtures::scratch_dir("cli_complete");
    kaplan::write_point_cloud(dir / "cloud.ply", fixtures::sphere(4000, 0.5, 2));
    REQUIRE(run("gen-holes " + q(dir / "cloud.ply") + " -o " + q(dir / "h") + " --seed 1 --ratios 1.0") == 0);
    const fs::path inc = dir / "h/level0_incomplete.ply";
    const fs::path mis = dir / "h/level0_missing.ply";

    REQUIRE(run("complete " + q(inc) + " -o " + q(dir / "id.ply") + " -b identity") == 0);
    CHECK(kaplan::read_point_cloud(dir / "id.ply").size() == 3600);

    const std::string gt = "gt-oracle:" + (dir / "cloud.ply").string();
    REQUIRE(run("complete " + q(inc) + " -o " + q(dir / "gt.ply") + " -b '" + gt + "' --missing " + q(mis) +
                " --debug-dir " + q(dir / "dbg")) == 0);
    const json m = read_json(dir / "gt.manifest.json");
    CHECK(m["hole_only"]["f1"].get<double>() > 0.0);
    CHECK(m["levels"].size() == 3);
    CHECK(m.contains("timings_s"));
    CHECK(m.contains("version"));
    CHECK(fs::exists(dir / "dbg/level2.ply"));
    CHECK(fs::exists(dir / "dbg/level0_provenance.json"));

    for (int t : {1, 2, 8}) {
        REQUIRE(run("complete " + q(inc) + " -o " + q(dir / ("t" + std::to_string(t) + ".ply")) + " -b '" + gt +
                    "' --seed 5 --threads " + std::to_string(t)) == 0);
    }
    CHECK(slurp(dir / "t1.ply") == slurp(dir / "t2.ply"));
    CHECK(slurp(dir / "t1.ply") == slurp(dir / "t8.ply"));

    std::ofstream(dir / "cfg.toml") << "[[levels]]\nnum_query_points = 5\n";
    REQUIRE(run("complete " + q(inc) + " -o " + q(dir / "one.ply") + " -b '" + gt + "' -c " + q(dir / "cfg.toml")) == 0);
    CHECK(read_json(dir / "one.manifest.json")["levels"].size() == 1);

    std::ofstream(dir / "bad.toml") << "[kaplan]\nresolution = 10\n";
    CHECK(run("complete " + q(inc) + " -o " + q(dir / "x.ply") + " -c " + q(dir / "bad.toml")) == 2);
    CHECK(run("complete " + q(inc) + " -o " + q(dir / "x.ply") + " -c " + q(dir / "missing.toml")) == 2);
    CHECK(run("complete " + q(inc) + " -o " + q(dir / "x.ply") + " -b bogus") == 2);
    CHECK(run("complete " + q(inc) + " -o " + q(dir / "x.ply") + " -b 'external:exit 4;'") == 3);

    const std::string ext = std::string("'external:") + KPLN_TOOL_PATH + " copy'";
    REQUIRE(run("complete " + q(inc) + " -o " + q(dir / "ext.ply") + " -b " + ext + " -c " + q(dir / "cfg.toml")) == 0);
    CHECK(kaplan::read_point_cloud(dir / "ext.ply") == kaplan::read_point_cloud(inc));
}

TEST_CASE("descriptors: count, query files and round trips")
{
    const auto dir = fixtures::scratch_dir("cli_desc");
    kaplan::write_point_cloud(dir / "cloud.xyz", fixtures::sphere(2000, 0.5, 3));
    REQUIRE(run("descriptors " + q(dir / "cloud.xyz") + " -o " + q(dir / "d") + " --count 10 --seed 2") == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "d")) {
        if (e.path().extension() == ".kpln") {
            ++files;
            const auto bytes = kaplan::encode_kpln(kaplan::read_kpln(e.path()));
            const std::string raw = slurp(e.path());
            CHECK(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()) == raw);
        }
    }
    CHECK(files == 10);

    kaplan::PointCloud queries;
    queries.points = {{0.1, 0.2, 0.3}, {-0.5, 0, 0}};
    kaplan::write_point_cloud(dir / "q.xyz", queries);
    REQUIRE(run("descriptors " + q(dir / "cloud.xyz") + " -o " + q(dir / "e") + " --queries " + q(dir / "q.xyz")) == 0);
    const auto d1 = kaplan::read_kpln(dir / "e/desc_00001.kpln");
    CHECK(d1.query == queries.points[1]);
    for (const auto& plane : d1.planes) {
        CHECK(plane.origin == queries.points[1]);
    }

    std::ofstream(dir / "even.toml") << "[kaplan]\nresolution = 34\n";
    CHECK(run("descriptors " + q(dir / "cloud.xyz") + " -o " + q(dir / "f") + " --count 2 -c " + q(dir / "even.toml")) == 2);
    CHECK(run("descriptors " + q(dir / "cloud.xyz") + " -o " + q(dir / "f")) == 2);
}

TEST_CASE("denoise: identity, gt oracle and empty input")
{
    const auto dir = fixtures::scratch_dir("cli_denoise");
    const kaplan::PointCloud noisy = fixtures::plane(800, 0.5, 0.005, 4);
    kaplan::write_point_cloud(dir / "noisy.xyz", noisy);
    kaplan::write_point_cloud(dir / "clean.xyz", fixtures::flatten(noisy));

    REQUIRE(run("denoise " + q(dir / "noisy.xyz") + " -o " + q(dir / "same.xyz") + " -b identity") == 0);
    CHECK(slurp(dir / "same.xyz") == slurp(dir / "noisy.xyz"));

    REQUIRE(run("denoise " + q(dir / "noisy.xyz") + " -o " + q(dir / "out.xyz") + " -b 'gt-oracle:" +
                (dir / "clean.xyz").string() + "'") == 0);
    const kaplan::PointCloud out = kaplan::read_point_cloud(dir / "out.xyz");
    CHECK(out.size() == noisy.size());
    CHECK(mean_abs_z(out) < mean_abs_z(noisy));

    std::ofstream(dir / "empty.xyz") << "";
    CHECK(run("denoise " + q(dir / "empty.xyz") + " -o " + q(dir / "e.xyz")) == 2);
}

TEST_CASE("eval: table, JSON report and errors")
{
    const auto dir = fixtures::scratch_dir("cli_eval");
    const kaplan::PointCloud s = fixtures::sphere(1000, 0.5, 5);
    kaplan::write_point_cloud(dir / "gt.ply", s);
    kaplan::PointCloud missing;
    missing.points.assign(s.points.begin(), s.points.begin() + 100);
    kaplan::write_point_cloud(dir / "missing.ply", missing);

    REQUIRE(run("eval " + q(dir / "gt.ply") + " " + q(dir / "gt.ply") + " --report " + q(dir / "r.json")) == 0);
    const json r = read_json(dir / "r.json");
    CHECK(r["results"]["global"]["chamfer"] == 0.0);
    CHECK(r["results"]["global"]["f1"] == 100.0);
    CHECK_FALSE(r["results"].contains("hole_only"));

    REQUIRE(run("eval " + q(dir / "gt.ply") + " " + q(dir / "gt.ply") + " --missing " + q(dir / "missing.ply") +
                " --report " + q(dir / "h.json")) == 0);
    CHECK(read_json(dir / "h.json")["results"].contains("hole_only"));

    CHECK(run("eval " + q(dir / "nope.ply") + " " + q(dir / "gt.ply")) == 2);

    const std::string cmd = std::string(KAPLAN_CLI_PATH) + " eval " + q(dir / "gt.ply") + " " + q(dir / "gt.ply") +
                            " > " + q(dir / "table.txt");
    REQUIRE(std::system(cmd.c_str()) == 0);
    const std::string table = slurp(dir / "table.txt");
    CHECK(table.find("10^3*CD") != std::string::npos);
    CHECK(table.find("100.00") != std::string::npos);
}
