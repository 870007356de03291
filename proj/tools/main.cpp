#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nnsolve/checkpoint.hpp"
#include "nnsolve/config.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/eval.hpp"
#include "nnsolve/history_io.hpp"
#include "nnsolve/problems.hpp"
#include "nnsolve/solver.hpp"
#include "nnsolve/verification.hpp"

namespace fs = std::filesystem;
using namespace nnsolve;

namespace {

// Exit codes: 0 success, 1 verification failure, 2 invalid configuration or
// usage, 3 I/O failure, 4 numeric failure (divergence, singular systems).
constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kNumericError = 4;

fs::path resolve_output_dir(const std::string& configured) {
    fs::path dir = configured;
    const char* root = std::getenv("NNSOLVE_OUTPUT_ROOT");
    if (root && *root && dir.is_relative()) dir = fs::path(root) / dir;
    return dir;
}

/// section.key = value lines of the effective config, echoed into the report.
std::map<std::string, std::string> flatten_config(const RunConfig& cfg) {
    std::map<std::string, std::string> out;
    std::istringstream in(serialize_config(cfg));
    std::string line, section;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        out[section + "." + line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

bool wants(const RunConfig& cfg, const char* format) {
    for (const auto& f : cfg.output.formats)
        if (f == format) return true;
    return false;
}

int cmd_run(const std::string& config_path, int threads) {
    if (threads > 1)
        std::fprintf(stderr,
                     "note: %d threads requested; this build always uses the single-threaded "
                     "ordered reduction for reproducibility\n",
                     threads);

    const RunConfig cfg = load_config(config_path);
    const ProblemInstance inst = build_instance(cfg.problem);

    const fs::path dir = resolve_output_dir(cfg.output.directory);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

    const TestSet tset =
        TestSet::make(*inst.grid, cfg.evaluation.n_test, cfg.evaluation.test_seed);
    const bool ckpt = wants(cfg, "checkpoint");
    const std::string ckpt_path = (dir / "checkpoint.bin").string();

    const EvalHook hook = [&](const NetworkParams& p, HistoryRecord& rec) {
        if (inst.truth) {
            rec.e_inf = error_inf(p, inst, tset);
            rec.e_l2 = error_l2(p, inst, tset);
        }
        rec.res_l2 = residual_l2(p, inst, tset);
        if (ckpt) save_checkpoint(ckpt_path, p, cfg.training.seed);
        std::printf("iter %lld  loss %.6e  lr %.3e  res_l2 %.6e",
                    static_cast<long long>(rec.iter), rec.loss, rec.lr, *rec.res_l2);
        if (rec.e_l2) std::printf("  e_l2 %.6e", *rec.e_l2);
        std::printf("\n");
        std::fflush(stdout);
    };

    std::printf("training %s  L=%d M=%d  batch=%lld iters=%lld seed=%llu\n", inst.label.c_str(),
                cfg.L, cfg.M, static_cast<long long>(cfg.training.batch_size),
                static_cast<long long>(cfg.training.max_iters),
                static_cast<unsigned long long>(cfg.training.seed));
    const TrainResult result = train(inst, cfg.architecture(), cfg.training, hook);

    if (wants(cfg, "csv")) write_history_csv((dir / "history.csv").string(), result.history.records);
    if (ckpt) save_checkpoint(ckpt_path, result.params, cfg.training.seed);

    EvalReport report = evaluate(result.params, inst, cfg.evaluation.n_test, cfg.evaluation.test_seed);
    report.config_echo = flatten_config(cfg);
    if (wants(cfg, "json")) {
        const fs::path p = dir / "report.json";
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
        out << to_json_string(report);
        if (!out) throw IoError("failed writing '" + p.string() + "'");
    }

    std::printf("done in %.1f s; outputs in %s\n", result.history.duration_seconds,
                dir.string().c_str());
    std::printf("res_l2 %.6e", report.res_l2);
    if (report.e_inf) std::printf("  e_inf %.6e", *report.e_inf);
    if (report.e_l2) std::printf("  e_l2 %.6e", *report.e_l2);
    std::printf("\n");

    if (result.history.diverged) {
        std::fprintf(stderr, "numeric failure: %s\n", result.history.divergence_message.c_str());
        return kNumericError;
    }
    return kOk;
}

int cmd_verify() {
    const VerifyResult result = run_verification();
    std::fputs(to_json_string(result).c_str(), stdout);
    return result.all_pass() ? kOk : kVerifyFailed;
}

int cmd_report(const std::string& csv_path) {
    const std::vector<HistoryRecord> records = read_history_csv(csv_path);
    if (records.empty()) {
        std::printf("%s: no iterations recorded\n", csv_path.c_str());
        return kOk;
    }
    const auto& first = records.front();
    const auto& last = records.back();
    const auto min_it = std::min_element(
        records.begin(), records.end(),
        [](const HistoryRecord& a, const HistoryRecord& b) { return a.loss < b.loss; });
    std::printf("%zu logged iterations (iter %lld .. %lld)\n", records.size(),
                static_cast<long long>(first.iter), static_cast<long long>(last.iter));
    std::printf("loss first %.6e  last %.6e  min %.6e at iter %lld\n", first.loss, last.loss,
                min_it->loss, static_cast<long long>(min_it->iter));
    std::printf("final lr %.3e\n", last.lr);
    if (last.res_l2) std::printf("final res_l2 %.6e\n", *last.res_l2);
    if (last.e_inf) std::printf("final e_inf %.6e\n", *last.e_inf);
    if (last.e_l2) std::printf("final e_l2 %.6e\n", *last.e_l2);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-free neural-network solver for huge structured linear systems"};
    app.require_subcommand(1);

    std::string config_path;
    int threads = 1;
    auto* run = app.add_subcommand("run", "train per a config file and write reports");
    run->add_option("config", config_path, "INI-style experiment description")->required();
    run->add_option("--threads", threads, "worker threads (this build runs one, ordered)")
        ->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "cross-check oracles against dense references");

    std::string csv_path;
    auto* report = app.add_subcommand("report", "summarize a history CSV");
    report->add_option("csv", csv_path, "history.csv from a previous run")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, threads);
        if (verify->parsed()) return cmd_verify();
        if (report->parsed()) return cmd_report(csv_path);
        return kConfigError;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    } catch (const ParamError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const RangeError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIoError;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumericError;
    }
}
