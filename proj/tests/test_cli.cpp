#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnsolve/checkpoint.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/history_io.hpp"

namespace fs = std::filesystem;

namespace {

using namespace nnsolve;

// ctest runs this binary from build/tests; the CLI sits next door.
std::string bin_path() {
    if (const char* p = std::getenv("NNSOLVE_BIN"); p && *p) return p;
    return "../tools/nnsolve";
}

struct CmdResult {
    int code = -1;
    std::string out; // stdout and stderr interleaved
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult r;
    FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int rc = ::pclose(pipe);
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

fs::path fresh_scratch(const std::string& tag) {
    const fs::path p =
        fs::temp_directory_path() / ("nnsolve_cli_" + std::to_string(::getpid()) + "_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(static_cast<bool>(out));
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

const char* kTinyRun = R"([problem]
family = poisson
d = 1
N = 5

[architecture]
L = 2
M = 4

[training]
batch_size = 4
max_iters = 50
eval_every = 25
seed = 3

[evaluation]
n_test = 5
test_seed = 1

[output]
directory = runA
formats = csv, json, checkpoint
)";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("history csv round-trips and rejects malformed input") {
    const fs::path scratch = fresh_scratch("hist");
    std::vector<HistoryRecord> recs;
    recs.push_back({25, 0.125, 1e-3, std::nullopt, std::nullopt, std::nullopt});
    recs.push_back({50, 6.25e-4, 5e-4, 0.75, 0.5, 1.5e-2});
    const fs::path p = scratch / "h.csv";
    write_history_csv(p.string(), recs);

    const auto got = read_history_csv(p.string());
    REQUIRE(got.size() == 2);
    CHECK(got[0].iter == 25);
    CHECK(got[0].loss == 0.125);
    CHECK(got[0].lr == 1e-3);
    CHECK_FALSE(got[0].e_inf.has_value());
    CHECK_FALSE(got[0].res_l2.has_value());
    CHECK(got[1].e_inf == 0.75);
    CHECK(got[1].e_l2 == 0.5);
    CHECK(got[1].res_l2 == 1.5e-2);

    CHECK(history_csv({}) == "iter,loss,lr,e_inf,e_l2,res_l2\n");
    write_file(p, "iter,loss,lr,e_inf,e_l2,res_l2\n");
    CHECK(read_history_csv(p.string()).empty());

    write_file(p, "wrong,header\n");
    CHECK_THROWS_AS((void)read_history_csv(p.string()), IoError);
    write_file(p, "iter,loss,lr,e_inf,e_l2,res_l2\n1,2\n");
    CHECK_THROWS_AS((void)read_history_csv(p.string()), IoError);
    write_file(p, "iter,loss,lr,e_inf,e_l2,res_l2\n1,2,3,4,5,6,7\n");
    CHECK_THROWS_AS((void)read_history_csv(p.string()), IoError);
    write_file(p, "iter,loss,lr,e_inf,e_l2,res_l2\n1,abc,3,,,\n");
    CHECK_THROWS_AS((void)read_history_csv(p.string()), IoError);
    write_file(p, "");
    CHECK_THROWS_AS((void)read_history_csv(p.string()), IoError);
    CHECK_THROWS_AS((void)read_history_csv((scratch / "absent.csv").string()), IoError);
    fs::remove_all(scratch);
}

TEST_CASE("run trains, writes every requested artifact, and reproduces itself") {
    const fs::path scratch = fresh_scratch("run");
    const fs::path cfg = scratch / "tiny.ini";
    write_file(cfg, kTinyRun);

    const std::string env = "NNSOLVE_OUTPUT_ROOT=" + (scratch / "r1").string() + " ";
    const CmdResult r1 = run_cmd(env + bin_path() + " run " + cfg.string());
    CHECK_MESSAGE(r1.code == 0, r1.out);
    CHECK(r1.out.find("iter 25") != std::string::npos);
    CHECK(r1.out.find("done in") != std::string::npos);

    const fs::path out1 = scratch / "r1" / "runA";
    REQUIRE(fs::exists(out1 / "history.csv"));
    REQUIRE(fs::exists(out1 / "report.json"));
    REQUIRE(fs::exists(out1 / "checkpoint.bin"));

    const auto recs = read_history_csv((out1 / "history.csv").string());
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].iter == 25);
    CHECK(recs[1].iter == 50);
    CHECK(recs[0].e_inf.has_value()); // manufactured solution: errors logged
    CHECK(recs[0].res_l2.has_value());
    CHECK(recs[1].lr < recs[0].lr);

    const auto rep = nlohmann::json::parse(slurp(out1 / "report.json"));
    CHECK(rep.at("n_test").get<std::int64_t>() == 5);
    CHECK(rep.at("e_l2").get<double>() >= 0.0);
    CHECK(rep.at("config").at("problem.family").get<std::string>() == "poisson");
    CHECK(rep.at("config").at("training.seed").get<std::string>() == "3");
    CHECK(rep.at("architecture").at("M").get<int>() == 4);

    const Checkpoint ck = load_checkpoint((out1 / "checkpoint.bin").string());
    CHECK(ck.seed == 3);
    CHECK(ck.params.arch.L == 2);
    CHECK(ck.params.arch.M == 4);
    CHECK(ck.params.arch.d == 1);

    // Same config and seed elsewhere: byte-identical artifacts.
    const std::string env2 = "NNSOLVE_OUTPUT_ROOT=" + (scratch / "r2").string() + " ";
    const CmdResult r2 = run_cmd(env2 + bin_path() + " run " + cfg.string());
    CHECK_MESSAGE(r2.code == 0, r2.out);
    const fs::path out2 = scratch / "r2" / "runA";
    CHECK(slurp(out1 / "history.csv") == slurp(out2 / "history.csv"));
    CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
    fs::remove_all(scratch);
}

TEST_CASE("invalid configs exit with the config code and write nothing") {
    const fs::path scratch = fresh_scratch("bad");
    const fs::path cfg = scratch / "bad.ini";
    write_file(cfg, "[problem]\nfamily = riesz\nd = 2\nN = 6\nalpha = 1.5, 2.0\n"
                    "[architecture]\nL = 3\nM = 5\n[output]\ndirectory = badout\n");
    const std::string env = "NNSOLVE_OUTPUT_ROOT=" + scratch.string() + " ";
    const CmdResult r = run_cmd(env + bin_path() + " run " + cfg.string());
    CHECK(r.code == 2);
    CHECK(r.out.find("alpha") != std::string::npos);
    CHECK_FALSE(fs::exists(scratch / "badout"));

    const CmdResult missing = run_cmd(bin_path() + " run /nonexistent/run.ini");
    CHECK(missing.code == 3);

    const CmdResult usage = run_cmd(bin_path() + " explode");
    CHECK(usage.code == 2);
    const CmdResult none = run_cmd(bin_path());
    CHECK(none.code == 2);
    const CmdResult help = run_cmd(bin_path() + " --help");
    CHECK(help.code == 0);
    CHECK(help.out.find("run") != std::string::npos);
    fs::remove_all(scratch);
}

TEST_CASE("verify emits json and exits clean") {
    const CmdResult r = run_cmd(bin_path() + " verify");
    CHECK_MESSAGE(r.code == 0, r.out);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.at("all_pass").get<bool>());
    CHECK(j.at("checks").size() >= 10);
}

TEST_CASE("report summarizes histories and flags malformed ones") {
    const fs::path scratch = fresh_scratch("rep");
    const fs::path p = scratch / "h.csv";
    // monotone fixture: the minimum is the last row
    std::vector<HistoryRecord> recs;
    recs.push_back({1, 3e-1, 1e-3, std::nullopt, std::nullopt, std::nullopt});
    recs.push_back({2, 2e-1, 1e-3, std::nullopt, std::nullopt, std::nullopt});
    recs.push_back({3, 1e-1, 1e-4, std::nullopt, std::nullopt, 5e-3});
    write_history_csv(p.string(), recs);

    const CmdResult r = run_cmd(bin_path() + " report " + p.string());
    CHECK_MESSAGE(r.code == 0, r.out);
    CHECK(r.out.find("3 logged iterations") != std::string::npos);
    CHECK(r.out.find("min 1.000000e-01 at iter 3") != std::string::npos);
    CHECK(r.out.find("last 1.000000e-01") != std::string::npos);
    CHECK(r.out.find("final res_l2 5.000000e-03") != std::string::npos);

    write_file(p, "iter,loss,lr,e_inf,e_l2,res_l2\n");
    const CmdResult empty = run_cmd(bin_path() + " report " + p.string());
    CHECK(empty.code == 0);
    CHECK(empty.out.find("no iterations") != std::string::npos);

    write_file(p, "garbage\n");
    CHECK(run_cmd(bin_path() + " report " + p.string()).code == 3);
    CHECK(run_cmd(bin_path() + " report " + (scratch / "gone.csv").string()).code == 3);
    fs::remove_all(scratch);
}

} // TEST_SUITE
