#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "dko/cli.hpp"

using namespace dko;

namespace {

int run_cli(std::initializer_list<const char*> args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
    std::vector<const char*> argv{"dko"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

std::filesystem::path sandbox() {
    auto dir = std::filesystem::temp_directory_path() / "dko_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
    const auto path = sandbox() / name;
    std::ofstream(path) << body;
    return path.string();
}

const char* kSmallCfg =
    "n_agents = 5\nn_anchors = 2\nsteps = 30\ngraph_radius = 0.8\n"
    "r_as_inverse = true\ngramian_window = 10\ngamma_mode = scalar\ngamma = 0.6\n";

}  // namespace

TEST_CASE("cli: simulate writes trace files and exits 0") {
    const auto cfg = write_config("sim.cfg", kSmallCfg);
    const auto out_dir = (sandbox() / "run1").string();
    std::string out;
    REQUIRE(run_cli({"simulate", "--config", cfg.c_str(), "--out", out_dir.c_str()}, &out) == 0);
    REQUIRE(std::filesystem::exists(out_dir + "/trace.csv"));
    REQUIRE(std::filesystem::exists(out_dir + "/summary.json"));
    REQUIRE(out.find("trace.csv") != std::string::npos);

    // CSV begins with the pinned header
    std::ifstream csv(out_dir + "/trace.csv");
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "k,err_state_norm,err_corr_norm,lyapunov_v,dist_qeq,solver,seed");
}

TEST_CASE("cli: solver and seed overrides") {
    const auto cfg = write_config("sim2.cfg", kSmallCfg);
    const auto out_dir = (sandbox() / "run2").string();
    REQUIRE(run_cli({"simulate", "--config", cfg.c_str(), "--solver", "richardson", "--seed",
                     "77", "--steps", "12", "--out", out_dir.c_str()}) == 0);
    auto j = read_json(out_dir + "/summary.json");
    REQUIRE(j["solver"] == "richardson");
    REQUIRE(j["seed"] == 77);
    REQUIRE(j["steps"] == 12);
}

TEST_CASE("cli: missing config file fails with the path in the message") {
    std::string err;
    const int code = run_cli({"simulate", "--config", "/no/such/file.cfg"}, nullptr, &err);
    REQUIRE(code == 1);
    REQUIRE(err.find("/no/such/file.cfg") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
    std::string err;
    REQUIRE(run_cli({"frobnicate"}, nullptr, &err) == 2);
    REQUIRE(run_cli({"simulate", "--config"}, nullptr, &err) == 2);
    REQUIRE(run_cli({"simulate", "--nonsense", "1"}, nullptr, &err) == 2);
    REQUIRE(run_cli({}, nullptr, &err) == 2);  // subcommand required
}

TEST_CASE("cli: help exits 0") {
    std::string out;
    REQUIRE(run_cli({"--help"}, &out) == 0);
    REQUIRE(out.find("simulate") != std::string::npos);
}

TEST_CASE("cli: analyze consumes a trace directory") {
    const auto cfg = write_config("ana.cfg", kSmallCfg);
    const auto out_dir = (sandbox() / "run3").string();
    REQUIRE(run_cli({"simulate", "--config", cfg.c_str(), "--solver", "centralized", "--out",
                     out_dir.c_str()}) == 0);
    std::string out;
    REQUIRE(run_cli({"analyze", "--trace", out_dir.c_str(), "--max-steps", "30"}, &out) == 0);
    REQUIRE(std::filesystem::exists(out_dir + "/analysis.json"));
    auto j = read_json(out_dir + "/analysis.json");
    REQUIRE(j["schema"] == "dko-analysis-v1");
    // centralized run with scalar gamma: the ratio test passes against gamma
    REQUIRE(j["lyapunov"]["decays"] == true);
    REQUIRE(j["lyapunov"]["worst_ratio"].get<double>() <= 0.6 + 1e-10);
    REQUIRE(out.find("lyapunov") != std::string::npos);
}

TEST_CASE("cli: analyze on a missing trace fails cleanly") {
    std::string err;
    REQUIRE(run_cli({"analyze", "--trace", "/no/such/dir"}, nullptr, &err) == 1);
    REQUIRE(err.find("/no/such/dir") != std::string::npos);
}

TEST_CASE("cli: sweep emits a comparison table") {
    const auto cfg = write_config("sweep.cfg", kSmallCfg);
    const auto out_dir = (sandbox() / "sweep_out").string();
    std::string out;
    REQUIRE(run_cli({"sweep", "--config", cfg.c_str(), "--param", "h_iters", "--values",
                     "1,3", "--out", out_dir.c_str()},
                    &out) == 0);
    REQUIRE(out.find("h_iters=1") != std::string::npos);
    REQUIRE(out.find("h_iters=3") != std::string::npos);
    REQUIRE(std::filesystem::exists(out_dir + "/sweep.csv"));
    std::ifstream csv(out_dir + "/sweep.csv");
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "param,value,final_err_state_norm,mean_err_corr_norm");

    std::string err;
    REQUIRE(run_cli({"sweep", "--config", cfg.c_str(), "--param", "bogus_key", "--values",
                     "1"},
                    nullptr, &err) == 1);
}
