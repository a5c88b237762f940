#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#ifndef WSAMPLE_PATH
#error "WSAMPLE_PATH must point at the wsample binary"
#endif

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(WSAMPLE_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, SolveZeroDelay) {
    const auto r = run("solve --delay det:0");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["gamma_star"].get<double>(), 0.0);
}

TEST(Cli, SolveUniformInBracket) {
    const auto r = run("solve --delay uniform:0,1");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_GT(j["gamma_star"].get<double>(), 1.0 / 12.0);
    EXPECT_LT(j["gamma_star"].get<double>(), 1.0 / 3.0);
    for (const auto* key : {"nu_star", "tau_star", "frame_length_star", "mse_opt", "residual"})
        EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Cli, SolveAuto10) {
    const auto r = run("solve --delay lognormal:0.8,1.2 --fmax auto10");
    ASSERT_EQ(r.code, 0);
    const double l = nlohmann::json::parse(r.out)["frame_length_star"].get<double>();
    EXPECT_NEAR(l / (10.0 * std::exp(1.52)), 1.0, 1e-6);
}

TEST(Cli, ParseErrorsExitOne) {
    EXPECT_EQ(run("solve --delay bogus").code, 1);
    EXPECT_EQ(run("solve --frames notanumber").code, 1);
    EXPECT_EQ(run("simulate --alpha 0.4").code, 1);
    EXPECT_EQ(run("frobnicate").code, 1);
    EXPECT_EQ(run("simulate --policy greedy").code, 1);
}

TEST(Cli, IoErrorExitsThree) {
    EXPECT_EQ(run("simulate --delay det:1 --policy zerowait --frames 10 --reps 1 --out /proc/forbidden/x").code, 3);
    EXPECT_EQ(run("solve --config /nonexistent/config.json").code, 3);
}

TEST(Cli, SimulateIsDeterministic) {
    const auto base = std::filesystem::temp_directory_path() / "wsamp_cli";
    std::filesystem::remove_all(base);
    const std::string common = "simulate --delay uniform:0,1 --policy online --frames 500 --reps 3 --seed 5 ";
    ASSERT_EQ(run(common + "--threads 1 --out " + (base / "a").string()).code, 0);
    ASSERT_EQ(run(common + "--threads 3 --out " + (base / "b").string()).code, 0);
    for (const auto* f : {"online_rep0.csv", "online_rep1.csv", "online_rep2.csv", "summary.json"}) {
        const auto a = slurp(base / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(base / "b" / f)) << f;
    }
    std::filesystem::remove_all(base);
}

TEST(Cli, EmpiricalNeedsDlb) {
    const auto path = std::filesystem::temp_directory_path() / "wsamp_cli_delays.csv";
    {
        std::ofstream os(path);
        os << "0.5\n1.0\n1.5\n";
    }
    EXPECT_EQ(run("simulate --delay empirical:" + path.string() + " --frames 10 --reps 1").code, 1);
    EXPECT_EQ(run("simulate --delay empirical:" + path.string() + " --frames 10 --reps 1 --dlb 0.5").code, 0);
    EXPECT_EQ(run("solve --delay empirical:" + path.string()).code, 0);
    std::filesystem::remove(path);
}
