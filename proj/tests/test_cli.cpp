// gramspec command line: exit codes and output formats

#include "gramspec/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / ("gramspec_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Run run(const std::string& args) {
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = std::string("\"") + GRAMSPEC_CLI + "\" " + args + " > \"" + out.string() + "\" 2> /dev/null";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    return r;
}

std::string sample(const char* name) { return std::string("\"") + GRAMSPEC_SAMPLES + "/" + name + "\""; }

gramspec::io::json parsed(const Run& r) { return gramspec::io::json::parse(r.out); }

} // namespace

TEST(Cli, AnalyzeExampleSucceeds) {
    const auto r = run("analyze " + sample("example1.json"));
    ASSERT_EQ(r.code, 0);
    const auto j = parsed(r);
    EXPECT_EQ(j["n"], 3);
    EXPECT_EQ(j["path"], "simple");
}

TEST(Cli, AnalyzeWithAllSections) {
    const auto r = run("analyze " + sample("stable3.json") + " --pairs --inverse --finite 1");
    ASSERT_EQ(r.code, 0);
    const auto j = parsed(r);
    for (const char* key : {"gramian", "pairs", "inverse", "finite"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Cli, AnalyzeMultipleSpectrumAndMatrices) {
    EXPECT_EQ(run("analyze " + sample("example5.json") + " --inverse").code, 0);
    EXPECT_EQ(run("analyze " + sample("oscillator.json")).code, 0);
    EXPECT_EQ(run("analyze " + sample("two_input.json")).code, 0);
    EXPECT_EQ(run("analyze " + sample("scalar.json") + " --raw").code, 0);
}

TEST(Cli, AnalyzeInitialConditionFile) {
    const auto r = run("analyze " + sample("stable3.json") + " --finite 0.5 --initial " + sample("initial.json"));
    EXPECT_EQ(r.code, 0);
}

TEST(Cli, OutputFileIsParseable) {
    const fs::path target = scratch() / "report.json";
    fs::remove(target);
    const auto r = run("roots " + sample("example1.json") + " --output \"" + target.string() + "\"");
    ASSERT_EQ(r.code, 0);
    const auto j = gramspec::io::json::parse(slurp(target));
    EXPECT_EQ(j["roots"].size(), 3u);
}

TEST(Cli, RootsAndVerify) {
    EXPECT_EQ(run("roots " + sample("example1.json")).code, 0);
    const auto v = run("verify " + sample("example1.json") + " --seed 3");
    ASSERT_EQ(v.code, 0);
    EXPECT_TRUE(parsed(v)["passed"].get<bool>());
    EXPECT_EQ(run("verify " + sample("example5.json")).code, 0);
}

TEST(Cli, EnergyJsonAndCsv) {
    const auto e = run("energy " + sample("stable3.json") + " --x0 1,0,0");
    ASSERT_EQ(e.code, 0);
    EXPECT_NEAR(parsed(e)["energy"].get<double>(), 132.0, 1e-9);
    const auto csv = run("energy " + sample("stable3.json") + " --x0 1,0,0 --format csv --time-series -2 0 10");
    ASSERT_EQ(csv.code, 0);
    EXPECT_EQ(csv.out.substr(0, 4), "t,u,");
}

TEST(Cli, SolvabilityFailuresExitTwo) {
    EXPECT_EQ(run("energy " + sample("example1.json") + " --x0 1,0,0 --format csv --time-series -1 0 4").code, 2);
    const auto r = run("analyze " + sample("imaginary_pair.json"));
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(parsed(r).contains("error"));
}

TEST(Cli, UncontrollableExitsThree) { EXPECT_EQ(run("analyze " + sample("uncontrollable.json")).code, 3); }

TEST(Cli, UsageAndSchemaErrorsExitOne) {
    EXPECT_EQ(run("analyze " + sample("does_not_exist.json")).code, 1);
    const fs::path bad = scratch() / "bad.json";
    std::ofstream(bad) << "{\"char_poly\": [1, 2";
    EXPECT_EQ(run("analyze \"" + bad.string() + "\"").code, 1);
    EXPECT_EQ(run("frobnicate " + sample("example1.json")).code, 1);
    EXPECT_EQ(run("energy " + sample("stable3.json") + " --x0 1,zero,0").code, 1);
    EXPECT_EQ(run("energy " + sample("stable3.json") + " --x0 1,0").code, 1);
    EXPECT_EQ(run("").code, 1);
}
