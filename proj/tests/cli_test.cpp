// End-to-end exercises of the CLI binary: exit codes are the machine
// contract (0 feasible/bound, 2 infeasible, 3 unknown, 1 input/usage error).

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "steerhier/io.hpp"

using namespace steerhier;
namespace fs = std::filesystem;

namespace {

const char* kCli = STEERHIER_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("steerhier_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& cmdline) {
    int rc = std::system((std::string(kCli) + " " + cmdline + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

TEST(Cli, GenerateCheckValidateLoop) {
    TempDir dir;
    std::string q = dir.file("q.json");
    ASSERT_EQ(run("gen-quantum --scenario "
                  "'{\"n_alices\":1,\"n_outcomes\":2,\"n_inputs\":2,\"n_bob_inputs\":2,\"bob_dim\":2}' "
                  "--seed 5 --aux-dim 2 --output " + q),
              0);
    ASSERT_EQ(run("check --input " + q + " --level 1"), 0);

    auto rec = io::read_json_file(dir.file("q.verdict.json"));
    EXPECT_EQ(rec["verdict"], "feasible");
    EXPECT_EQ(rec["level"], 1);
    EXPECT_TRUE(fs::exists(dir.file("q.verdict.cert.json")));

    EXPECT_EQ(run("validate-cert " + dir.file("q.verdict.cert.json") + " --against " + q), 0);

    // corrupting one block must flip the offline validation to FAIL
    auto cert = io::read_json_file(dir.file("q.verdict.cert.json"));
    cert["classes"][1]["re"][0][0] = cert["classes"][1]["re"][0][0].get<double>() + 0.2;
    io::write_json_file(dir.file("broken.cert.json"), cert);
    EXPECT_EQ(run("validate-cert " + dir.file("broken.cert.json") + " --against " + q), 1);
}

TEST(Cli, PostQuantumInputExitsTwo) {
    TempDir dir;
    // transpose twist over all three qubit MUBs: certified infeasible at level 2
    ScenarioSpec s{1, 2, 3, 2, 2};
    Assemblage tw(s);
    MatrixXcd z0 = (MatrixXcd(2, 2) << 1, 0, 0, 0).finished();
    MatrixXcd z1 = (MatrixXcd(2, 2) << 0, 0, 0, 1).finished();
    MatrixXcd x0 = (MatrixXcd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished();
    MatrixXcd x1 = (MatrixXcd(2, 2) << 0.5, -0.5, -0.5, 0.5).finished();
    MatrixXcd y0 = (MatrixXcd(2, 2) << 0.5, complexd(0, -0.5), complexd(0, 0.5), 0.5).finished();
    MatrixXcd y1 = (MatrixXcd(2, 2) << 0.5, complexd(0, 0.5), complexd(0, -0.5), 0.5).finished();
    std::vector<std::vector<MatrixXcd>> pis = {{z0, z1}, {x0, x1}, {y0, y1}};
    for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a) {
            tw.block(a, x, 0) = pis[x][a].transpose() / 2.0;
            tw.block(a, x, 1) = tw.block(a, x, 0).transpose();
        }
    io::write_json_file(dir.file("pq.json"), io::to_json(tw));
    EXPECT_EQ(run("check --input " + dir.file("pq.json") + " --level 2"), 2);
    auto rec = io::read_json_file(dir.file("pq.verdict.json"));
    EXPECT_EQ(rec["verdict"], "infeasible");
    EXPECT_GE(rec["margins"]["dual_margin"].get<double>(), 1e-7);
    EXPECT_TRUE(fs::exists(dir.file("pq.verdict.dual.json")));
    auto dual = io::read_json_file(dir.file("pq.verdict.dual.json"));
    EXPECT_EQ(dual["flavor"], "dual");
}

TEST(Cli, BoundCommand) {
    TempDir dir;
    io::write_json_file(dir.file("f.json"), io::to_json(normalization_functional(ScenarioSpec{1, 2, 2, 2, 2})));
    ASSERT_EQ(run("bound --input " + dir.file("f.json") + " --level 1 --output " + dir.file("b.json")), 0);
    auto rec = io::read_json_file(dir.file("b.json"));
    EXPECT_NEAR(rec["upper_bound"].get<double>(), 1.0, 1e-6);
}

TEST(Cli, InstrumentalCheckCommand) {
    TempDir dir;
    auto asm_ = assemblage_from_quantum(gen_random_quantum(9, ScenarioSpec{1, 2, 2, 2, 2}, {2}, 1));
    io::write_json_file(dir.file("ia.json"), io::to_json(instrumental_from_assemblage(asm_)));
    EXPECT_EQ(run("instrumental-check --input " + dir.file("ia.json") + " --level 2"), 0);
    auto rec = io::read_json_file(dir.file("ia.verdict.json"));
    EXPECT_EQ(rec["command"], "instrumental-check");
}

TEST(Cli, InputAndUsageErrorsExitOne) {
    TempDir dir;
    EXPECT_EQ(run("check --input " + dir.file("missing.json") + " --level 1"), 1);
    EXPECT_EQ(run("check --level 1"), 1);  // missing required --input
    EXPECT_EQ(run("gen-quantum --scenario '{\"n_alices\":0}' --seed 1 --output " + dir.file("x.json")), 1);
    std::ofstream(dir.file("junk.json")) << "{ not json";
    EXPECT_EQ(run("check --input " + dir.file("junk.json") + " --level 1"), 1);
}

TEST(Cli, SolverSettingsFromEnvironment) {
    TempDir dir;
    std::string q = dir.file("q.json");
    ASSERT_EQ(run("gen-quantum --scenario "
                  "'{\"n_alices\":1,\"n_outcomes\":2,\"n_inputs\":2,\"n_bob_inputs\":2,\"bob_dim\":2}' "
                  "--seed 6 --output " + q),
              0);
    std::ofstream(dir.file("settings.json")) << R"({"max_iterations": 80, "gap_tol": 1e-10})";
    auto with_env = [&](const std::string& file, const std::string& cmd) {
        int rc = std::system(("STEERHIER_SOLVER_SETTINGS=" + file + " " + std::string(kCli) + " " + cmd +
                              " >/dev/null 2>&1")
                                 .c_str());
        return WEXITSTATUS(rc);
    };
    EXPECT_EQ(with_env(dir.file("settings.json"), "check --input " + q + " --level 1"), 0);
    EXPECT_EQ(with_env(dir.file("nope.json"), "check --input " + q + " --level 1"), 1);
}

TEST(Cli, RoundTripConsumesOwnOutput) {
    TempDir dir;
    std::string ns = dir.file("ns.json");
    ASSERT_EQ(run("gen-ns --scenario "
                  "'{\"n_alices\":1,\"n_outcomes\":2,\"n_inputs\":2,\"n_bob_inputs\":1,\"bob_dim\":2}' "
                  "--seed 3 --output " + ns),
              0);
    EXPECT_EQ(run("check --input " + ns + " --level 1"), 0);
    std::string tw = dir.file("tw.json");
    ASSERT_EQ(run("gen-twist --seed 4 --output " + tw), 0);
    EXPECT_EQ(run("check --input " + tw + " --level 1"), 0);
}

}  // namespace
