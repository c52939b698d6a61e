#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcs/annuity.hpp"
#include "mcs/config.hpp"
#include "mcs/errors.hpp"

using namespace mcs;
namespace fs = std::filesystem;

namespace {

const char* kDetConfig = R"({
  "market": {
    "type": "deterministic", "T": 20.0,
    "r": {"kind": "constant", "value": 0.03},
    "assets": [{"alpha": {"kind": "constant", "value": 0.07},
                "sigma": [{"kind": "constant", "value": 0.2}]}]
  },
  "strategy": {"type": "deterministic", "pi": [{"kind": "constant", "value": 0.0}]},
  "rule": {"kind": "mcs"},
  "sim": {"x0": 1.0, "steps": 400, "paths": 64, "master_seed": 4}
})";

const char* kTreeConfig = R"({
  "tree": {
    "root": {"children": [{"ret": 0.0, "p": 1.0, "children": [
      {"ret": 0.0, "p": 1.0, "children": [{"ret": 0.0, "p": 1.0}]}]}]}
  }
})";

std::string write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "mcslab_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MCSLAB_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

// first data row (after the comment and header lines), split on commas
std::vector<std::string> first_data_row(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    std::getline(in, line); // comment
    std::getline(in, line); // header
    std::getline(in, line);
    std::vector<std::string> out;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("experiment parsing") {
    const auto spec = parse_experiment(kDetConfig);
    REQUIRE(spec.det_market.has_value());
    CHECK(spec.det_market->horizon() == 20.0);
    CHECK(spec.det_market->asset_count() == 1);
    CHECK(spec.det_market->rate(3.0) == doctest::Approx(0.03));
    REQUIRE(spec.strategy.has_value());
    CHECK(spec.rule_kind == "mcs");
    CHECK(spec.sim.steps == 400);
    CHECK(spec.sim.paths == 64);
    CHECK(spec.sim.master_seed == 4);

    const auto rule = spec.build_rule();
    CHECK(rule.factor(0.0) ==
          doctest::Approx(annuity_factor_constant(0.03, 0.0, 20.0)).epsilon(1e-12));
}

TEST_CASE("parsing failures carry ConfigError") {
    CHECK_THROWS_AS(parse_experiment("{ not json"), ConfigError);
    CHECK_THROWS_AS(parse_experiment(R"({"market": {"type": "nope", "T": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment(R"({"market": {"type": "deterministic"}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_experiment(
            R"({"market": {"type": "deterministic", "T": 5, "r": {"kind": "weird"}}})"),
        ConfigError);
}

TEST_CASE("tree parsing round trip") {
    const auto spec = parse_experiment(kTreeConfig);
    REQUIRE(spec.tree.has_value());
    CHECK(spec.tree->periods() == 3);
    const auto rec = solve_recursion(*spec.tree);
    CHECK(static_cast<double>(rec.a[1]) == doctest::Approx(3.0));
    CHECK(static_cast<double>(rec.a[2]) == doctest::Approx(2.0));
    CHECK(static_cast<double>(rec.a[3]) == doctest::Approx(1.0));
}

TEST_CASE("fnv hash is stable and content-sensitive") {
    CHECK(fnv1a_hash("abc") == fnv1a_hash("abc"));
    CHECK(fnv1a_hash("abc") != fnv1a_hash("abd"));
}

TEST_CASE("cli: factor table starts at the closed-form value") {
    const std::string cfg = write_temp("det.json", kDetConfig);
    const std::string out = (fs::temp_directory_path() / "mcslab_test" / "out_factor").string();
    REQUIRE(run_cli("factor --config " + cfg + " --out " + out) == 0);
    const auto row = first_data_row(slurp(out + "/factor.csv"));
    REQUIRE(row.size() == 2);
    CHECK(std::stod(row[0]) == 0.0);
    CHECK(std::stod(row[1]) ==
          doctest::Approx(annuity_factor_constant(0.03, 0.0, 20.0)).epsilon(1e-12));
}

TEST_CASE("cli: fixed-rate discrete run emits the 3-2-1 ladder") {
    const std::string cfg = write_temp("tree.json", kTreeConfig);
    const std::string out = (fs::temp_directory_path() / "mcslab_test" / "out_tree").string();
    REQUIRE(run_cli("discrete --config " + cfg + " --out " + out) == 0);
    const std::string text = slurp(out + "/discrete.csv");
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::vector<double> a_col;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        a_col.push_back(std::stod(cells[4]));
    }
    REQUIRE(a_col.size() == 4); // root + 3 nodes
    CHECK(a_col[1] == doctest::Approx(3.0));
    CHECK(a_col[2] == doctest::Approx(2.0));
    CHECK(a_col[3] == doctest::Approx(1.0));
}

TEST_CASE("cli: same config and seed give byte-identical artifacts") {
    const std::string cfg = write_temp("det2.json", kDetConfig);
    const std::string out1 = (fs::temp_directory_path() / "mcslab_test" / "rep1").string();
    const std::string out2 = (fs::temp_directory_path() / "mcslab_test" / "rep2").string();
    REQUIRE(run_cli("simulate --config " + cfg + " --out " + out1) == 0);
    REQUIRE(run_cli("simulate --config " + cfg + " --out " + out2) == 0);
    for (const char* name : {"/report.csv", "/exhaustion.csv", "/paths.csv"})
        CHECK(slurp(out1 + name) == slurp(out2 + name));
    // header carries the config hash
    const std::string head = slurp(out1 + "/report.csv").substr(0, 120);
    CHECK(head.find("config_hash=") != std::string::npos);
    CHECK(head.find("mcslab") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
    CHECK(run_cli("factor --config /nonexistent.json --out /tmp/mcslab_test_none") == 2);

    // assert-martingale on a submartingale consumption stream exits 4
    const char* sub = R"({
      "market": {"type": "deterministic", "T": 20.0,
        "r": {"kind": "constant", "value": 0.02},
        "assets": [{"alpha": {"kind": "constant", "value": 0.08},
                    "sigma": [{"kind": "constant", "value": 0.2}]}]},
      "strategy": {"type": "deterministic", "pi": [{"kind": "constant", "value": 1.5}]},
      "preferences": {"gamma": 1.0, "beta": {"kind": "constant", "value": 0.02}},
      "rule": {"kind": "merton"},
      "sim": {"steps": 500, "paths": 4000, "master_seed": 9}
    })";
    const std::string cfg = write_temp("sub.json", sub);
    const std::string out = (fs::temp_directory_path() / "mcslab_test" / "out_sub").string();
    CHECK(run_cli("simulate --assert-martingale --config " + cfg + " --out " + out) == 4);
    CHECK(run_cli("simulate --config " + cfg + " --out " + out) == 0);
}
