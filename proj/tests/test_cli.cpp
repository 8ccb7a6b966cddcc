#include "support.hpp"

#include "pdmpcert/io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace pdmpcert;

namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "pdmpcert_test_cli" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string quoted(const std::string& s) { return "'" + s + "'"; }

/// Runs the CLI with stdout/stderr captured into `dir`; returns the exit status.
int run(const fs::path& dir, const std::string& args) {
    std::string cmd = quoted(PDMP_CLI) + " --out " + quoted(dir.string()) + " " + args + " >" +
                      quoted((dir / "stdout.txt").string()) + " 2>" + quoted((dir / "stderr.txt").string());
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fx(const std::string& name) { return quoted(testing::fixture(name)); }

}  // namespace

TEST_CASE("help lists every subcommand") {
    auto d = workdir("help");
    CHECK(run(d, "--help") == 0);
    std::string out = slurp(d / "stdout.txt");
    for (const char* sub : {"certify", "simulate", "tv-decay", "bracket-scan", "equilibrium", "reach", "submersion",
                            "invasion", "sis-spectrum", "lv-classify"}) {
        CAPTURE(sub);
        CHECK(out.find(sub) != std::string::npos);
    }
}

TEST_CASE("usage and input errors exit 64 with a diagnostic") {
    auto d = workdir("errors");
    CHECK(run(d, "") == 64);
    CHECK(run(d, "frobnicate") == 64);
    CHECK(run(d, "certify") == 64);
    CHECK(run(d, "bracket-scan " + fx("torus.json") + " --depth 99") == 64);
    CHECK(run(d, "certify /nonexistent/model.json") == 64);
    Json diag = Json::parse(slurp(d / "stderr.txt"));
    CHECK(diag.at("exit_code") == 64);
    CHECK(diag.at("error") == "input");

    fs::path bad = d / "bad.json";
    std::ofstream(bad) << "{\"model\": \"torus\", \"params\": {\"eps\": ";
    CHECK(run(d, "certify " + quoted(bad.string())) == 64);
    std::ofstream(bad, std::ios::trunc) << "{\"model\": \"torus\", \"rates\": {\"kind\": \"nope\"}}";
    CHECK(run(d, "simulate " + quoted(bad.string())) == 64);
}

TEST_CASE("invalid model parameters are module errors") {
    auto d = workdir("model_error");
    fs::path bad = d / "neg.json";
    std::ofstream(bad) << "{\"model\": \"annulus\", \"params\": {\"eps_bump\": -1}}";
    CHECK(run(d, "certify " + quoted(bad.string())) == 1);
    CHECK(fs::exists(d / "error.json"));
    CHECK(Json::parse(slurp(d / "error.json")).at("error") == "model");
}

TEST_CASE("certify exit codes follow the verdict") {
    auto d = workdir("certify");
    CHECK(run(d, "certify " + fx("annulus.json")) == 0);
    Json cert = Json::parse(slurp(d / "certificate.json")).at("certificate");
    CHECK(cert.at("verdict") == "certified-numerically");
    CHECK(cert.at("status").at("condition_i") == true);

    CHECK(run(d, "certify " + fx("torus.json")) == 2);
    cert = Json::parse(slurp(d / "certificate.json")).at("certificate");
    CHECK(cert.at("verdict") == "partial");
    CHECK(cert.at("status").at("condition_i") == false);
    CHECK(cert.at("condition_i").at("residual").get<double>() >= 0.5);

    CHECK(run(d, "certify " + fx("sis_coinciding.json")) == 2);
    cert = Json::parse(slurp(d / "certificate.json")).at("certificate");
    CHECK(cert.at("status").at("condition_i") == true);
    CHECK(cert.at("status").at("reach_estar_to_xstar") == false);

    CHECK(fs::exists(d / "pdmpcert.log"));
}

TEST_CASE("outputs are identical across reruns and thread counts") {
    const std::string runs[] = {
        "certify " + fx("annulus.json"),
        "simulate " + fx("torus_sin2.json") + " --T 50 --dt-out 0.5",
        "bracket-scan " + fx("annulus.json") + " --kind weak --depth 2 --res 12,6",
        "tv-decay " + fx("torus.json") + " --times 1:3:1 --replicates 300 --bins 4,4 --permutations 5",
        "reach " + fx("torus.json") + " --target 0.5,0.5 --from-grid 2,2 --budget 500",
    };
    const char* files[] = {"certificate.json", "trajectory.csv", "bracket_scan.csv", "tv_decay.csv", "reach.json"};
    for (int k = 0; k < 5; ++k) {
        CAPTURE(runs[k]);
        auto a = workdir("det_a");
        auto b = workdir("det_b");
        auto c = workdir("det_c");
        int ra = run(a, "--seed 9 --threads 1 " + runs[k]);
        int rb = run(b, "--seed 9 --threads 1 " + runs[k]);
        int rc = run(c, "--seed 9 --threads 4 " + runs[k]);
        CHECK(ra == rb);
        CHECK(ra == rc);
        REQUIRE(fs::exists(a / files[k]));
        std::string text = slurp(a / files[k]);
        CHECK(!text.empty());
        CHECK(text == slurp(b / files[k]));
        CHECK(text == slurp(c / files[k]));
    }
}

TEST_CASE("seeds change stochastic output") {
    auto a = workdir("seed_a");
    auto b = workdir("seed_b");
    REQUIRE(run(a, "--seed 1 simulate " + fx("torus.json") + " --T 20") == 0);
    REQUIRE(run(b, "--seed 2 simulate " + fx("torus.json") + " --T 20") == 0);
    CHECK(slurp(a / "trajectory.csv") != slurp(b / "trajectory.csv"));
    CHECK(Json::parse(slurp(a / "trajectory.json")).at("seed") == 1);
}

TEST_CASE("config file supplies global and subcommand options") {
    auto d = workdir("config");
    fs::path cfg = d / "cfg.json";
    std::ofstream(cfg) << R"({"seed": 7, "simulate": {"T": 3, "dt-out": 1}})";
    REQUIRE(run(d, "--config " + quoted(cfg.string()) + " simulate " + fx("torus.json")) == 0);
    Json summary = Json::parse(slurp(d / "trajectory.json"));
    CHECK(summary.at("seed") == 7);
    CHECK(summary.at("t_max") == 3.0);
    std::string csv = slurp(d / "trajectory.csv");
    CHECK(csv.rfind("t,x1,x2,i\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("every subcommand writes its artifacts") {
    auto d = workdir("artifacts");
    struct Case {
        std::string args;
        std::vector<std::string> files;
    };
    const std::vector<Case> cases{
        {"simulate " + fx("lv.json") + " --T 10", {"trajectory.csv", "trajectory.json"}},
        {"bracket-scan " + fx("torus.json") + " --kind strong --depth 1 --res 4,4", {"bracket_scan.csv", "bracket_scan.json"}},
        {"equilibrium " + fx("sis_lemma.json"), {"equilibrium.json"}},
        {"reach " + fx("annulus.json") + " --target 0,1 --from-grid 2,2", {"reach.json"}},
        {"submersion " + fx("torus.json") + " --base 0,0", {"submersion.json"}},
        {"invasion " + fx("lv.json") + " --T 200", {"invasion.json"}},
        {"sis-spectrum " + fx("sis_lemma.json") + " --points 11", {"sis_spectrum.csv", "sis_spectrum.json"}},
        {"lv-classify " + fx("lv.json"), {"lv_classify.json"}},
        {"tv-decay " + fx("torus.json") + " --times 1,2 --replicates 100 --bins 4,4", {"tv_decay.csv", "tv_decay.json"}},
    };
    for (const auto& c : cases) {
        CAPTURE(c.args);
        CHECK(run(d, c.args) == 0);
        for (const auto& f : c.files) {
            CAPTURE(f);
            CHECK(fs::exists(d / f));
            if (f.size() > 5 && f.substr(f.size() - 5) == ".json") CHECK_NOTHROW((void)Json::parse(slurp(d / f)));
        }
    }
    std::string scan = slurp(d / "bracket_scan.csv");
    CHECK(scan.rfind("x1,x2,kind,K,rank,sigma_min_kept\n", 0) == 0);
    std::string sis = slurp(d / "sis_spectrum.csv");
    CHECK(sis.rfind("s,lambda\n", 0) == 0);
    CHECK(std::count(sis.begin(), sis.end(), '\n') == 12);
}

TEST_CASE("submersion with an explicit schedule") {
    auto d = workdir("submersion");
    CHECK(run(d, "submersion " + fx("torus.json") + " --base 0,0 --schedule '[[0,0.3],[1,0.4]]' --terminal 0 --s 1.0") ==
          0);
    Json j = Json::parse(slurp(d / "submersion.json"));
    CHECK(j.contains("rank"));
}
