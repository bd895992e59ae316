#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "slab/cli.hpp"
#include "slab/experiments.hpp"
#include "slab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace slab;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
    std::string path;
    explicit TempDir(const std::string& name) : path("cli_test_" + name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("parse_config: minimal thresholds config fills defaults") {
    const auto cfg = parse_config(R"({"command":"thresholds","alpha":8,"theta":4})");
    CHECK(cfg.command == "thresholds");
    CHECK(cfg.params["n"] == 1000);
    CHECK(cfg.seed == 1);
    CHECK(cfg.workers == 1);
}

TEST_CASE("parse_config: rejections carry the offending path") {
    CHECK_THROWS_WITH_AS(parse_config(R"({"command":"thresholds"})"),
                         doctest::Contains("config.alpha"), domain_error);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"command":"thresholds","alpha":8,"theta":4,"bogus":1})"),
        doctest::Contains("config.bogus"), domain_error);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"command":"simulate","beta":2,"alpha":8,"theta":4,"n":500})"),
        doctest::Contains("beta is derived"), domain_error);
    CHECK_THROWS_WITH_AS(parse_config("{not json"), doctest::Contains("malformed JSON"),
                         domain_error);
    CHECK_THROWS_WITH_AS(
        parse_config(R"({"command":"transit","alpha":0.9,"theta":10,"n_list":[8]})"),
        doctest::Contains("transit requires alpha > 1"), domain_error);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command":"mystery"})"),
                         doctest::Contains("unknown command"), domain_error);
    CHECK_THROWS_WITH_AS(parse_config(R"({"command":"simulate","alpha":8,"theta":4,"n":3})"),
                         doctest::Contains("config.n"), domain_error);
    // CLI hint conflicting with the document
    CHECK_THROWS_AS(parse_config(R"({"command":"sweep","alpha_grid":[1],"theta_grid":[2]})",
                                 "thresholds"),
                    domain_error);
}

TEST_CASE("dispatch thresholds: CSV row with the derived scalars") {
    TempDir dir("thresholds");
    auto cfg = parse_config(R"({"command":"thresholds","alpha":8,"theta":4})");
    cfg.out_dir = dir.path;
    CHECK(dispatch(cfg) == kExitOk);

    const auto rows = read_csv(dir.path + "/thresholds.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][3] == "m_e");
    CHECK(std::stod(rows[1][3]) == doctest::Approx(0.8819).epsilon(1e-3));
    CHECK(rows[1][12] == "true");

    const auto manifest = json::parse(slurp(dir.path + "/manifest.json"));
    CHECK(manifest["config"]["command"] == "thresholds");
    CHECK(manifest["config"]["n"] == 1000);
}

TEST_CASE("dispatch thresholds at an invalid phase point exits with the domain code") {
    TempDir dir("thresholds_bad");
    // beta*(lambda1-lambda2) = 1*(2.5-2) < 1
    auto cfg = parse_config(R"({"command":"thresholds","alpha":2,"theta":2})");
    cfg.out_dir = dir.path;
    CHECK(dispatch(cfg) == kExitDomain);
}

TEST_CASE("dispatch free-energy: sidecar carries closed form, delta, contour and MC") {
    TempDir dir("fe");
    auto cfg = parse_config(
        R"({"command":"free-energy","alpha":2,"theta":2,"n":200,"q_points":41,"mc_samples":200000})");
    cfg.out_dir = dir.path;
    REQUIRE(dispatch(cfg) == kExitOk);

    const auto sidecar = json::parse(slurp(dir.path + "/free_energy.json"));
    CHECK(sidecar["delta"].get<double>() == doctest::Approx(0.09093).epsilon(1e-3));
    CHECK(sidecar["closed_form"].get<double>() == doctest::Approx(0.34093).epsilon(1e-3));
    CHECK(std::abs(sidecar["contour_value"].get<double>() -
                   sidecar["closed_form"].get<double>()) < 0.08);
    CHECK(sidecar["mc_stderr"].get<double>() > 0);

    const auto rows = read_csv(dir.path + "/band.csv");
    REQUIRE(rows.size() == 42);
    CHECK(rows[0][0] == "q");
}

TEST_CASE("dispatch simulate: determinism of outputs and manifest") {
    TempDir dir_a("sim_a"), dir_b("sim_b");
    const std::string text =
        R"({"command":"simulate","alpha":8,"theta":4,"n":100,"seed":7,"t_max":2.0})";
    auto cfg_a = parse_config(text);
    cfg_a.out_dir = dir_a.path;
    auto cfg_b = parse_config(text);
    cfg_b.out_dir = dir_b.path;
    REQUIRE(dispatch(cfg_a) == kExitOk);
    REQUIRE(dispatch(cfg_b) == kExitOk);

    CHECK(slurp(dir_a.path + "/trajectory.csv") == slurp(dir_b.path + "/trajectory.csv"));
    CHECK(slurp(dir_a.path + "/events.json") == slurp(dir_b.path + "/events.json"));

    auto ma = json::parse(slurp(dir_a.path + "/manifest.json"));
    auto mb = json::parse(slurp(dir_b.path + "/manifest.json"));
    ma.erase("runtime");
    mb.erase("runtime");
    ma.erase("created_unix_ms");
    mb.erase("created_unix_ms");
    CHECK(ma == mb);
}

TEST_CASE("dispatch sweep: pinned CSV columns") {
    TempDir dir("sweep");
    auto cfg = parse_config(
        R"({"command":"sweep","alpha_grid":[0.5,8],"theta_grid":[2,4]})");
    cfg.out_dir = dir.path;
    REQUIRE(dispatch(cfg) == kExitOk);
    const auto rows = read_csv(dir.path + "/sweep.csv");
    REQUIRE(rows.size() == 5);
    const std::vector<std::string> header = {"alpha", "theta", "m_e",      "m_be", "m_pi",
                                             "valid", "delta", "theta_0L", "label"};
    CHECK(rows[0][0] == "alpha");
    CHECK(rows[0][6] == "theta_0L");
    CHECK(rows[0][7] == "delta");
    bool found = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "8" && rows[i][1] == "4") {
            CHECK(rows[i][5] == "true");
            CHECK(rows[i][8] == "low_T_symmetric_fast");
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("dispatch mixing: manifest records the exact per-replica seeds") {
    TempDir dir("mixing");
    auto cfg = parse_config(
        R"({"command":"mixing","alpha":8,"theta":4,"n":32,"replicas":32,"horizon":1.0,"seed":5})");
    cfg.out_dir = dir.path;
    REQUIRE(dispatch(cfg) == kExitOk);

    const auto manifest = json::parse(slurp(dir.path + "/manifest.json"));
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::projected_tv;
    spec.seed = 5;
    const auto expected = replica_seed(spec, 0, 17);
    CHECK(manifest["replica_seeds"]["uniform"][17].get<std::uint64_t>() == expected);
}

TEST_CASE("emit_results: empty record set and float round-trips") {
    TempDir dir("io");
    write_csv(dir.path + "/empty.csv", {"a", "b"}, {});
    CHECK(slurp(dir.path + "/empty.csv") == "a,b\n");

    const std::vector<double> values = {0.1, 1.0 / 3.0, 6.02214076e23, -1.25e-7, 0.8819171036881969};
    std::vector<CsvRow> rows;
    for (double v : values) rows.push_back({v, std::int64_t{1}});
    write_csv(dir.path + "/floats.csv", {"v", "k"}, rows);
    const auto parsed = read_csv(dir.path + "/floats.csv");
    REQUIRE(parsed.size() == values.size() + 1);
    for (std::size_t i = 0; i < values.size(); ++i)
        CHECK(std::stod(parsed[i + 1][0]) == values[i]);

    // LF endings, no CR
    const auto text = slurp(dir.path + "/floats.csv");
    CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("unwritable output path maps to the numerical exit code") {
    auto cfg = parse_config(R"({"command":"thresholds","alpha":8,"theta":4})");
    cfg.out_dir = "/proc/definitely/not/writable";
    CHECK(dispatch(cfg) == kExitNumerical);
}

TEST_CASE("validate-only style use: parse fills effective dt") {
    const auto cfg = parse_config(
        R"({"command":"simulate","alpha":8,"theta":4,"n":500,"seed":7})");
    CHECK(cfg.params["dt"].get<double>() == doctest::Approx(0.01 / 4.25).epsilon(1e-12));
    CHECK(cfg.params["t_max"].get<double>() > 0);
    CHECK(cfg.params["init"] == "uniform");
}
