#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "nnsolve/config.hpp"
#include "nnsolve/errors.hpp"

namespace {

using namespace nnsolve;

const char* kFullPoisson = R"(# reproduction recipe
[problem]
family = poisson
d = 3
N = 100

[architecture]
L = 3
M = 100

[training]
batch_size = 10000
max_iters = 50000
lr_start = 1e-3
lr_end = 1e-5
seed = 1
eval_every = 1000
optimizer = plain-sgd
init = inv-sqrt

[evaluation]
n_test = 10000
test_seed = 9999

[output]
directory = out/poisson_d3
formats = csv, json, checkpoint
)";

} // namespace

TEST_SUITE("config") {

TEST_CASE("full config parses into the exact field values") {
    const RunConfig c = parse_config(kFullPoisson);
    CHECK(c.problem.family == "poisson");
    CHECK(c.problem.d == 3);
    CHECK(c.problem.N == 100);
    CHECK(c.L == 3);
    CHECK(c.M == 100);
    CHECK(c.training.batch_size == 10000);
    CHECK(c.training.max_iters == 50000);
    CHECK(c.training.lr_start == 1e-3);
    CHECK(c.training.lr_end == 1e-5);
    CHECK(c.training.seed == 1);
    CHECK(c.training.eval_every == 1000);
    CHECK(c.training.optimizer == Optimizer::Sgd);
    CHECK(c.training.init == InitMode::InverseSqrt);
    CHECK(c.evaluation.n_test == 10000);
    CHECK(c.evaluation.test_seed == 9999);
    CHECK(c.output.directory == "out/poisson_d3");
    CHECK(c.output.formats == std::vector<std::string>{"csv", "json", "checkpoint"});
    CHECK(c.architecture().d == 3);
    CHECK(c.architecture().M == 100);
}

TEST_CASE("per-family training defaults fill the omitted sections") {
    const RunConfig p = parse_config("[problem]\nfamily = poisson\nd = 2\nN = 10\n"
                                     "[architecture]\nL = 3\nM = 20\n");
    CHECK(p.training.batch_size == 10000);
    CHECK(p.training.max_iters == 50000);
    CHECK(p.training.lr_start == 1e-3);
    CHECK(p.training.lr_end == 1e-5);
    CHECK(p.evaluation.n_test == 10000);
    CHECK(p.output.directory == "out");
    CHECK(p.output.formats == std::vector<std::string>{"csv", "json"});

    const RunConfig q = parse_config("[problem]\nfamily = queueing\nd = 5\n"
                                     "[architecture]\nL = 3\nM = 100\n");
    CHECK(q.problem.N == 100); // family default
    CHECK(q.problem.overflow_alpha == 1.0);
    CHECK(q.problem.epsilon == 1.0);
    CHECK(q.training.batch_size == 20000);
    CHECK(q.training.max_iters == 20000);

    const RunConfig b = parse_config("[problem]\nfamily = pbn\nd = 50\n"
                                     "[architecture]\nL = 3\nM = 100\n");
    CHECK(b.training.batch_size == 20000);
    CHECK(b.training.max_iters == 20000);
    CHECK(b.problem.shifts.empty()); // builder supplies the default pattern
}

TEST_CASE("comments, blank lines, and padding are tolerated") {
    const RunConfig c = parse_config("\n# leading comment\n  [problem]  \n"
                                     "  family   =   riesz\n\nd=2\nN = 6\n"
                                     "alpha = 1.5 ,1.8\n# trailing\n"
                                     "[architecture]\nL=3\nM=7\n");
    CHECK(c.problem.family == "riesz");
    CHECK(c.problem.alpha == std::vector<double>{1.5, 1.8});
}

TEST_CASE("serialize then parse is the identity") {
    std::vector<std::string> texts = {
        kFullPoisson,
        "[problem]\nfamily = riesz\nd = 2\nN = 6\nc = 0.5, 2\nalpha = 1.2, 1.9\n"
        "[architecture]\nL = 4\nM = 9\n[training]\noptimizer = adaptive-moment\n",
        "[problem]\nfamily = queueing\nd = 3\nN = 12\nalpha = 0.5\n"
        "lambda = 0.01, 0.02, 0.03\ns = 2, 4, 6\nepsilon = 0.25\n"
        "[architecture]\nL = 3\nM = 11\n[output]\nformats = checkpoint\n",
        "[problem]\nfamily = pbn\nd = 10\nshifts = -3, 1, 5\nvalues = 1, 2, 0.5\n"
        "[architecture]\nL = 2\nM = 30\n[training]\nseed = 77\ninit = sqrt-literal\n",
    };
    for (const auto& text : texts) {
        const RunConfig a = parse_config(text);
        const RunConfig b = parse_config(serialize_config(a));
        CHECK(a == b);
        CHECK(serialize_config(a) == serialize_config(b));
    }
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\nfoo = 1\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError);
    // keys valid for one family are unknown for another
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\nepsilon = 1\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n[plotting]\nstyle = 1\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\nM = 6\n"),
                    ParamError); // duplicate
}

TEST_CASE("malformed lines carry their line number") {
    try {
        (void)parse_config("[problem]\nfamily = poisson\nd = 2\nN 4\n");
        FAIL("expected ParamError");
    } catch (const ParamError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    CHECK_THROWS_AS((void)parse_config("family = poisson\n"), ParamError); // before any section
    CHECK_THROWS_AS((void)parse_config("[problem\nfamily = poisson\n"), ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily =\n"), ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nd = 2x\nfamily = poisson\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError);
}

TEST_CASE("missing required pieces are named") {
    CHECK_THROWS_AS((void)parse_config("[architecture]\nL = 3\nM = 5\n"), ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"), ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // no d
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // no N
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = spectral\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // bad family
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nM = 5\n"),
                    ParamError); // no L
}

TEST_CASE("out-of-range values are rejected before any instance is built") {
    const auto riesz = [](const std::string& alpha) {
        return "[problem]\nfamily = riesz\nd = 2\nN = 6\nalpha = " + alpha +
               "\n[architecture]\nL = 3\nM = 5\n";
    };
    CHECK_THROWS_AS((void)parse_config(riesz("1.5, 2.0")), ParamError); // boundary excluded
    CHECK_THROWS_AS((void)parse_config(riesz("0.9, 1.5")), ParamError);
    CHECK_THROWS_AS((void)parse_config(riesz("1.5")), ParamError); // arity
    CHECK_NOTHROW((void)parse_config(riesz("1.5, 1.99")));

    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = queueing\nd = 3\nN = 2\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // d > N breaks the coupling term
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = queueing\nd = 2\nN = 8\n"
                                       "lambda = 0, 0.01\n[architecture]\nL = 3\nM = 5\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = queueing\nd = 2\nN = 8\n"
                                       "epsilon = 0\n[architecture]\nL = 3\nM = 5\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = pbn\nd = 10\nN = 2\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // pbn takes no N
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = pbn\nd = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // default shifts need d >= 5
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = pbn\nd = 10\nshifts = 1, 2\n"
                                       "[architecture]\nL = 3\nM = 5\n"),
                    ParamError); // values missing
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 1\nM = 5\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"
                                       "[training]\nlr_start = 1e-6\n"),
                    ParamError); // lr_end above lr_start
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"
                                       "[training]\noptimizer = newton\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"
                                       "[evaluation]\nn_test = 0\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"
                                       "[output]\nformats = csv, yaml\n"),
                    ParamError);
    CHECK_THROWS_AS((void)parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                                       "[architecture]\nL = 3\nM = 5\n"
                                       "[output]\nformats = csv, csv\n"),
                    ParamError);
}

TEST_CASE("build_instance dispatches on the family") {
    RunConfig c = parse_config("[problem]\nfamily = queueing\nd = 2\nN = 8\nepsilon = 0.5\n"
                               "[architecture]\nL = 3\nM = 5\n");
    const ProblemInstance q = build_instance(c.problem);
    CHECK(q.loss.kind == LossSpec::Kind::PinComponent);
    CHECK(q.loss.epsilon == 0.5);
    CHECK(q.grid->points_per_dim() == 8);
    CHECK_FALSE(q.truth);

    const ProblemInstance p = build_instance(
        parse_config("[problem]\nfamily = poisson\nd = 2\nN = 4\n"
                     "[architecture]\nL = 3\nM = 5\n")
            .problem);
    CHECK(p.loss.kind == LossSpec::Kind::Plain);
    CHECK(static_cast<bool>(p.truth));

    const ProblemInstance b = build_instance(
        parse_config("[problem]\nfamily = pbn\nd = 8\nshifts = -2, 3\nvalues = 1, 2\n"
                     "[architecture]\nL = 3\nM = 5\n")
            .problem);
    CHECK(b.loss.kind == LossSpec::Kind::MeanPenalty);
    CHECK(b.grid->points_per_dim() == 2);

    ProblemConfig bogus;
    bogus.family = "spectral";
    CHECK_THROWS_AS((void)build_instance(bogus), ParamError);
}

TEST_CASE("load_config reports unreadable paths") {
    CHECK_THROWS_AS((void)load_config("/nonexistent/dir/run.ini"), IoError);
}

TEST_CASE("every shipped experiment recipe parses and builds its instance") {
    namespace fs = std::filesystem;
    fs::path dir = "../../experiments"; // ctest runs from build/tests
    if (const char* p = std::getenv("NNSOLVE_EXPERIMENTS"); p && *p) dir = p;
    REQUIRE_MESSAGE(fs::is_directory(dir), "experiments directory not found at ", dir.string());
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".ini") continue;
        ++n;
        const RunConfig c = load_config(entry.path().string());
        const ProblemInstance inst = build_instance(c.problem);
        CHECK(inst.grid->d == c.problem.d);
        CHECK(c.architecture().L >= 2);
    }
    CHECK(n == 48);
}

} // TEST_SUITE
