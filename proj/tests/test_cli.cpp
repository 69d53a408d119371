#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cimsim/cli.hpp"
#include "test_paths.hpp"

using namespace cimsim;
using testing_paths::data;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("cimsim_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t csv_rows(const fs::path& p)
{
    const auto text = slurp(p);
    return std::count(text.begin(), text.end(), '\n') - 1;
}

std::vector<std::string> simulate_args(const fs::path& out)
{
    return {"simulate", "--model", data("toy/toy.json"), "--hw", data("hw/tiny.json"), "--calib",
            data("calibration/default-65nm.json"), "--prefill", "8", "--decode", "4", "--out", out.string()};
}

} // namespace

TEST_CASE("simulate writes metrics, stages and a manifest")
{
    const auto dir = fresh_dir("simulate");
    auto args = simulate_args(dir);
    args.push_back("--dump-plans");
    const auto r = run(args);
    REQUIRE(r.code == 0);

    const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(metrics.at("metrics").at("per_stage").size() == 9);
    for (const char* k : {"latency_s", "energy_j", "throughput_tok_s", "efficiency_tok_j", "area_mm2"}) {
        CHECK(metrics.at("metrics").contains(k));
    }
    CHECK(csv_rows(dir / "stages.csv") == 9);
    CHECK(slurp(dir / "stages.csv").rfind("stage,cycles,energy_pj,dram_bytes,cycle_share\n", 0) == 0);
    CHECK(fs::exists(dir / "plans.json"));

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("command") == "simulate");
    CHECK(manifest.at("tool_version") == kToolVersion);
    CHECK(manifest.at("argv").get<std::vector<std::string>>() == args);
    CHECK(manifest.at("output_paths").size() == 4);
    CHECK(manifest.at("hw").at("resolved").at("c_v") == 1);
}

TEST_CASE("missing required flag exits 2 and names the flag")
{
    auto args = simulate_args(fresh_dir("missing"));
    args.erase(args.begin() + 5, args.begin() + 7);
    const auto r = run(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("--calib") != std::string::npos);
}

TEST_CASE("invalid values exit 2")
{
    auto args = simulate_args(fresh_dir("invalid"));
    args[4] = "c_v=1,c_h=1,t_v_act=2,t_h_act=2,t_total=5";
    auto r = run(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("m_mult") != std::string::npos);

    args = simulate_args(fresh_dir("invalid"));
    args.insert(args.end(), {"--precision", "int2"});
    r = run(args);
    CHECK(r.code == 2);
    CHECK(r.err.find("--precision") != std::string::npos);

    args = simulate_args(fresh_dir("invalid"));
    args.insert(args.end(), {"--alpha", "2"});
    CHECK(run(args).code == 2);
}

TEST_CASE("unreadable inputs exit 1")
{
    auto args = simulate_args(fresh_dir("io"));
    args[2] = "/nonexistent/model.json";
    const auto r = run(args);
    CHECK(r.code == 1);
    CHECK(r.err.find("/nonexistent/model.json") != std::string::npos);
}

TEST_CASE("inline hw and precision override")
{
    const auto dir = fresh_dir("inline");
    auto args = simulate_args(dir);
    args[4] = "c_v=1,c_h=1,t_v_act=2,t_h_act=2,m_mult=2,pe_count=4,bus_inter_cluster=512,"
              "bus_inter_tile=512,bus_intra_tile=512";
    args.insert(args.end(), {"--precision", "int4"});
    REQUIRE(run(args).code == 0);
    const auto metrics = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(metrics.at("precision") == "int4");
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("hw").at("inline") == true);
}

TEST_CASE("replay reproduces outputs")
{
    const auto a = fresh_dir("replay_a");
    const auto b = fresh_dir("replay_b");
    REQUIRE(run({"dse", "--model", data("toy/toy.json"), "--calib", data("calibration/default-65nm.json"),
                 "--prefill", "8", "--decode", "4", "--space", "reduced", "--generations", "5", "--seed", "3",
                 "--jobs", "2", "--out", a.string()})
                .code == 0);
    REQUIRE(run({"replay", "--manifest", (a / "manifest.json").string(), "--out", b.string()}).code == 0);
    CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
    CHECK(slurp(a / "best.json") == slurp(b / "best.json"));
    CHECK(csv_rows(a / "history.csv") == 5 * 20);

    // The replayed run records the underlying command, so it can be replayed again.
    const auto c = fresh_dir("replay_c");
    REQUIRE(run({"replay", "--manifest", (b / "manifest.json").string(), "--out", c.string()}).code == 0);
    CHECK(slurp(c / "history.csv") == slurp(a / "history.csv"));
    CHECK(run({"replay", "--manifest", "/nonexistent/manifest.json"}).code == 1);

    const auto loop = fresh_dir("replay_loop");
    fs::create_directories(loop);
    const auto path = (loop / "manifest.json").string();
    std::ofstream(path) << nlohmann::json{{"argv", {"replay", "--manifest", path}}}.dump();
    CHECK(run({"replay", "--manifest", path}).code == 2);
}

TEST_CASE("sweep-alpha writes one row per alpha and repeat")
{
    const auto dir = fresh_dir("sweep_alpha");
    REQUIRE(run({"sweep-alpha", "--model", data("toy/toy.json"), "--calib", data("calibration/default-65nm.json"),
                 "--prefill", "4", "--decode", "2", "--space", "reduced", "--generations", "3", "--out",
                 dir.string()})
                .code == 0);
    CHECK(csv_rows(dir / "sweep_alpha.csv") == 25);
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("sweep-tokens covers the grid")
{
    const auto dir = fresh_dir("sweep_tokens");
    REQUIRE(run({"sweep-tokens", "--model", data("toy/toy.json"), "--hw", data("hw/tiny.json"), "--calib",
                 data("calibration/default-65nm.json"), "--prefill-grid", "4,8", "--decode-grid", "2,3", "--out",
                 dir.string()})
                .code == 0);
    CHECK(csv_rows(dir / "sweep_tokens.csv") == 4);
    CHECK(slurp(dir / "sweep_tokens.csv").rfind("prefill,decode,latency_s,energy_j,edp\n", 0) == 0);
}

TEST_CASE("bench on a fixed hw covers every model at both precisions")
{
    const auto dir = fresh_dir("bench");
    REQUIRE(run({"bench", "--models", data("models"), "--calib", data("calibration/default-65nm.json"), "--hw",
                 data("hw/hstar.json"), "--prefill", "16", "--decode", "2", "--out", dir.string()})
                .code == 0);
    CHECK(csv_rows(dir / "bench.csv") == 24);
}

TEST_CASE("json table format")
{
    const auto dir = fresh_dir("json_format");
    auto args = simulate_args(dir);
    args.insert(args.end(), {"--format", "json"});
    REQUIRE(run(args).code == 0);
    const auto t = nlohmann::json::parse(slurp(dir / "stages.json"));
    CHECK(t.at("columns").size() == 5);
    CHECK(t.at("rows").size() == 9);
    CHECK_FALSE(fs::exists(dir / "stages.csv"));
}

TEST_CASE("exhaustive ranks the reduced space")
{
    const auto dir = fresh_dir("exhaustive");
    REQUIRE(run({"exhaustive", "--model", data("toy/toy.json"), "--calib", data("calibration/default-65nm.json"),
                 "--prefill", "4", "--decode", "2", "--out", dir.string()})
                .code == 0);
    CHECK(csv_rows(dir / "ranked.csv") == 1024);
    CHECK(run({"exhaustive", "--model", data("toy/toy.json"), "--calib", data("calibration/default-65nm.json"),
               "--space", "full", "--out", dir.string()})
              .code == 2);
}

TEST_CASE("enumerate prints the space size")
{
    auto r = run({"enumerate"});
    CHECK(r.code == 0);
    CHECK(r.out.find("3136000") != std::string::npos);
    r = run({"enumerate", "--space", "reduced"});
    CHECK(r.out.find("1024") != std::string::npos);
}

TEST_CASE("help, version and unknown subcommands")
{
    CHECK(run({"--help"}).code == 0);
    const auto v = run({"--version"});
    CHECK(v.code == 0);
    CHECK(v.out.find(kToolVersion) != std::string::npos);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
}
