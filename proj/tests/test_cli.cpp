#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "rdelab/measure.hpp"

using namespace rdelab;
using namespace rdelab::cli;
namespace fs = std::filesystem;

namespace {

Schema demo() {
    Schema s;
    s.add("x", Kind::Real, 1.0, "")
        .add("n", Kind::Int, 3, "")
        .add("flag", Kind::Bool, false, "")
        .add("name", Kind::Str, "diamond", "")
        .add("depths", Kind::IntList, Json::array({2, 4}), "")
        .add("grid", Kind::RealList, Json::array({-1.0, 1.0}), "")
        .require("seed", Kind::Int, "");
    return s;
}

fs::path scratch() {
    static const fs::path d = [] {
        auto p = fs::temp_directory_path() / ("rdelab_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return d;
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

int run(const std::string& args) {
    const std::string cmd = std::string(RDE_LAB_EXE) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("layers: defaults, file, flags, --set") {
    const auto s = demo();
    const auto toml = write_file("a.toml", "x = 2.5\nn = 4\nname = \"cavity\"\nseed = 2\n");
    auto cfg = s.resolve(toml.string(), {{"n", "5"}}, {"n=6", "flag=true"});
    CHECK(get_real(cfg, "x") == 2.5);
    CHECK(get_int(cfg, "n") == 6);
    CHECK(cfg["flag"].get<bool>());
    CHECK(cfg["name"] == "cavity");
    CHECK(get_ints(cfg, "depths") == std::vector<int>{2, 4});
    cfg = s.resolve("", {{"seed", "1"}}, {});
    CHECK(get_real(cfg, "x") == 1.0);
    CHECK(get_int(cfg, "seed") == 1);
    // the resolved object lists every field in schema order
    std::vector<std::string> keys;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"x", "n", "flag", "name", "depths", "grid", "seed"});
}

TEST_CASE("value syntax") {
    const auto s = demo();
    const auto cfg = s.resolve("", {{"depths", "1, 3,5"}, {"grid", "[-inf, 2]"}}, {"name=racket", "seed=9", "x=inf"});
    CHECK(get_ints(cfg, "depths") == std::vector<int>{1, 3, 5});
    CHECK(get_reals(cfg, "grid")[0] == -kInf);
    CHECK(get_real(cfg, "x") == kInf);
    CHECK(cfg["name"] == "racket");
    CHECK(get_real(s.resolve("", {{"x", "3"}, {"seed", "1"}}, {}), "x") == 3.0);
}

TEST_CASE("configuration errors") {
    const auto s = demo();
    CHECK_THROWS_AS(s.resolve("", {}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "1"}}, {"bogus=1"}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "1"}}, {"noequals"}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "x"}}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "1"}, {"n", "1.5"}}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "1"}, {"flag", "yes"}}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve("", {{"seed", "1"}, {"depths", "[1, 2.5]"}}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve(write_file("b.toml", "mystery = 1\n").string(), {{"seed", "1"}}, {}), ConfigError);
    CHECK_THROWS_AS(s.resolve(write_file("c.toml", "x = \n").string(), {{"seed", "1"}}, {}), ConfigError);
}

TEST_CASE("every command has seed and out") {
    for (const auto& c : commands()) {
        INFO(c.name);
        CHECK(c.schema.find("seed") != nullptr);
        CHECK(c.schema.find("seed")->required);
        CHECK(c.schema.find("out") != nullptr);
    }
}

TEST_CASE("exit codes and artifacts") {
    const auto out = scratch() / "sc.json";
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("solve-cavity --q 1 --k 1 --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("solve-cavity --q 1 --k 1 --seed 1 --set bogus=2 --out " + out.string()) == 2);
    CHECK(run("solve-cavity --q 0.5 --k 1 --seed 1 --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run("critical-drift --seed 1 --bracket 0,1 --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));

    const auto toml = write_file("sc.toml", "q = 1.0\nk = 1\nseed = 4\n");
    REQUIRE(run("solve-cavity --config " + toml.string() + " --out " + out.string()) == 0);
    REQUIRE(fs::exists(out));
    REQUIRE(fs::exists(scratch() / "sc.csv"));
    const auto art = Json::parse(slurp(out));
    CHECK(art["command"] == "solve-cavity");
    CHECK(art["seed"] == 4);
    CHECK(art["config"]["cutoff"] == 24.0);
    CHECK(art["pass"].get<bool>());
    CHECK(slurp(scratch() / "sc.csv").rfind("x,tail\n", 0) == 0);
}
