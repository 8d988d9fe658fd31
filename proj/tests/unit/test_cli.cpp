#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string command = std::string(ATP_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buffer{};
    std::size_t got = 0;
    while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) r.out.append(buffer.data(), got);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string data(const std::string& name) { return std::string(ATP_DATA_DIR) + "/" + name; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("atp_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto path = dir_ / name;
        std::ofstream(path) << text;
        return path.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SolveCounterexample) {
    const auto r = run("solve " + data("counterexample.json") + " --rho -1");
    ASSERT_EQ(r.status, 0);
    const auto doc = json::parse(r.out);
    EXPECT_NEAR(doc["result"]["utilities"][3].get<double>(), 0.449490, 1e-6);
    EXPECT_TRUE(doc.contains("tolerances"));
}

TEST_F(Cli, SolveMaxmin) {
    const auto r = run("solve " + data("two_agents_one_good.json") + " --rho maxmin");
    ASSERT_EQ(r.status, 0);
    EXPECT_DOUBLE_EQ(json::parse(r.out)["gamma"].get<double>(), 0.5);
}

TEST_F(Cli, SolveUtilitarianLie) {
    const auto r = run("solve " + data("lie_instance.json") + " --rho 1");
    ASSERT_EQ(r.status, 0);
    for (const auto& u : json::parse(r.out)["result"]["utilities"]) EXPECT_NEAR(u.get<double>(), 0.5, 1e-9);
}

TEST_F(Cli, EquilibriumVerifyReduceChain) {
    const auto eq = run("equilibrium " + data("small.json") + " --rho 0 -o " + path("eq.json"));
    ASSERT_EQ(eq.status, 0);
    std::ifstream in(path("eq.json"));
    const auto doc = json::parse(in);
    EXPECT_TRUE(doc["verdict"]["is_ne"].get<bool>());
    EXPECT_LT(doc["relative_gap"].get<double>(), 1e-5);
    const auto bids = write("bids.json", json{{"bids", doc["bids"]}}.dump());

    const auto verified = run("verify " + data("small.json") + " " + bids + " --curves atp_rho:0 --sweep --assert");
    EXPECT_EQ(verified.status, 0);
    EXPECT_TRUE(json::parse(verified.out)["report"]["is_ne"].get<bool>());

    ASSERT_EQ(run("reduce " + data("small.json") + " " + bids + " --direction tp2pc --curves atp_rho:0 -o " +
                  path("pce.json"))
                  .status,
              0);
    const auto pce = run("verify " + data("small.json") + " " + path("pce.json") + " --kind pce --curves " +
                         path("pce.json") + " --assert");
    EXPECT_EQ(pce.status, 0);
    EXPECT_TRUE(json::parse(pce.out)["report"]["is_pce"].get<bool>());

    ASSERT_EQ(run("reduce " + data("small.json") + " " + path("pce.json") + " --direction pc2tp --curves " +
                  path("pce.json") + " -o " + path("tp.json"))
                  .status,
              0);
    EXPECT_EQ(run("verify " + data("small.json") + " " + path("tp.json") + " --curves " + path("tp.json") +
                  " --assert")
                  .status,
              0);
}

TEST_F(Cli, VerifyAssertFailsWithStatusFour) {
    const auto bids = write("bids.json", "[[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]]");
    const auto r = run("verify " + data("small.json") + " " + bids + " --curves atp_rho:0 --assert");
    EXPECT_EQ(r.status, 4);
    EXPECT_FALSE(json::parse(r.out)["report"]["is_ne"].get<bool>());
    EXPECT_EQ(run("verify " + data("small.json") + " " + bids + " --curves atp_rho:0").status, 0);
}

TEST_F(Cli, ParseErrorsExitWithStatusTwo) {
    EXPECT_EQ(run("solve " + write("bad.json", "{\"supplies\": [1,]}") + " --rho 0").status, 2);
    EXPECT_EQ(run("solve " + write("range.json", R"({"supplies":[1],"agents":[{"desired":[3]}]})") + " --rho 0").status,
              2);
    EXPECT_EQ(run("solve " + path("missing.json") + " --rho 0").status, 2);
    EXPECT_EQ(run("equilibrium " + data("small.json") + " --rho 1").status, 2);
    EXPECT_EQ(run("solve " + data("small.json") + " --rho 2").status, 2);
    EXPECT_EQ(run("frobnicate").status, 2);
}

TEST_F(Cli, DemosNotStrategyproofNash) {
    const auto r = run("demos not-strategyproof --rho 0");
    ASSERT_EQ(r.status, 0);
    const auto doc = json::parse(r.out)["report"];
    EXPECT_NEAR(doc["truthful_u4"].get<double>(), 0.4, 1e-6);
    EXPECT_NEAR(doc["lie_u4"].get<double>(), 0.5, 1e-6);
}

TEST_F(Cli, DemosMechanisms) {
    const auto bad = json::parse(run("demos bad-ne --n 3").out)["report"];
    EXPECT_TRUE(bad["all_goods_profile_is_ne"].get<bool>());
    EXPECT_DOUBLE_EQ(bad["ratio"].get<double>(), 3.0);
    const auto m2 = run("demos m2-truthful --instance " + data("small.json"));
    ASSERT_EQ(m2.status, 0);
    EXPECT_TRUE(json::parse(m2.out)["report"]["is_ne"].get<bool>());
    EXPECT_FALSE(json::parse(run("demos m2-all-goods --n 3").out)["report"]["check"]["is_ne"].get<bool>());
}

TEST_F(Cli, ReportsAreDeterministic) {
    const std::string args = "dynamics " + data("small.json") + " --rho 0.5 --seed 9";
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.status, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_TRUE(json::parse(a.out).contains("welfare_per_round"));
}
