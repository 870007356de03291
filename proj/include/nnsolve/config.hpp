#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nnsolve/problems.hpp"
#include "nnsolve/solver.hpp"

namespace nnsolve {

/// [problem] section: the family name plus its parameters. Vector-valued
/// keys take comma-separated entries; an empty vector selects the family
/// default (documented at the builder).
struct ProblemConfig {
    std::string family; // poisson | riesz | queueing | pbn
    int d = 0;
    std::int64_t N = 0;               // poisson/riesz required, queueing defaults to 100
    std::vector<double> c;            // riesz diffusion coefficients
    std::vector<double> alpha;        // riesz orders, each strictly in (1,2)
    double overflow_alpha = 1.0;      // queueing overflow exponent (key `alpha`)
    std::vector<double> lambda;       // queueing arrival rates
    std::vector<std::int64_t> s;      // queueing server counts
    std::vector<std::int64_t> shifts; // pbn dependency offsets
    std::vector<double> values;       // pbn transition weights
    double epsilon = 1.0;             // penalty weight 1/epsilon (queueing/pbn)

    friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct EvalConfig {
    std::int64_t n_test = 10000;
    std::uint64_t test_seed = 9999;

    friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"}; // subset of csv, json, checkpoint

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

/// One experiment: everything a `run` needs, read from one INI-style file.
/// Sections [problem] and [architecture] are required; [training],
/// [evaluation], and [output] fall back to defaults. Training defaults are
/// per family: poisson batches 10^4 rows for 5x10^4 iterations, the other
/// families 2x10^4 rows for 2x10^4 iterations.
struct RunConfig {
    ProblemConfig problem;
    int L = 0;
    int M = 0;
    TrainConfig training;
    EvalConfig evaluation;
    OutputConfig output;

    Architecture architecture() const { return {L, M, problem.d}; }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and validates the INI text: `[section]` headers, `key = value`
/// lines, full-line `#` comments. Unknown sections or keys, duplicates,
/// malformed values, and out-of-range parameters all throw ParamError with
/// the offending line.
RunConfig parse_config(std::string_view text);

/// Reads the file and parses it; IoError when unreadable.
RunConfig load_config(const std::string& path);

/// Emits the effective configuration; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// Builds the problem instance the [problem] section describes.
ProblemInstance build_instance(const ProblemConfig& pc);

} // namespace nnsolve
