#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "nnsolve/batch_engine.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/eval.hpp"
#include "nnsolve/oracle.hpp"
#include "nnsolve/problems.hpp"

namespace {

using namespace nnsolve;

// L=2, M=1 net with zero weights, unit bias: phi(x) == a for every x.
NetworkParams constant_net(double a, int d) {
    NetworkParams p({2, 1, d});
    std::fill(p.data.begin(), p.data.end(), 0.0);
    p.b(1)[0] = 1.0;
    p.a()[0] = a;
    return p;
}

// phi(x) = -sum_k |x_k - peak_k| built from relu pairs; the unique maximum
// over any grid is the point componentwise nearest the peak, value 0 there.
NetworkParams cone_net(const GridSpec& grid, const MultiIndex& peak) {
    const int d = grid.d;
    const std::vector<double> target = grid.point_of(peak);
    NetworkParams p({2, 2 * d, d});
    std::fill(p.data.begin(), p.data.end(), 0.0);
    auto w = p.w(1);
    auto b = p.b(1);
    auto a = p.a();
    for (int k = 0; k < d; ++k) {
        w[static_cast<std::size_t>((2 * k) * d + k)] = 1.0;
        b[static_cast<std::size_t>(2 * k)] = -target[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>((2 * k + 1) * d + k)] = -1.0;
        b[static_cast<std::size_t>(2 * k + 1)] = target[static_cast<std::size_t>(k)];
        a[static_cast<std::size_t>(2 * k)] = -1.0;
        a[static_cast<std::size_t>(2 * k + 1)] = -1.0;
    }
    return p;
}

double forward_at(const NetworkParams& p, const GridSpec& grid,
                  std::span<const std::int32_t> idx) {
    std::vector<double> x(static_cast<std::size_t>(grid.d));
    grid.point_of(idx, x);
    return forward(p, x);
}

// d=1 grid {0,1,2}, identity system with rhs {0,1,2}, truth u(x)=x. Every
// metric on it reduces to a two-term hand formula.
ProblemInstance line_instance() {
    ProblemInstance inst;
    inst.grid = std::make_shared<const GridSpec>(
        make_explicit_grid(1, std::vector<std::vector<double>>{{0.0, 1.0, 2.0}}));
    inst.oracle = std::make_shared<DenseAdapterOracle>(
        std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}, std::vector<double>{0.0, 1.0, 2.0}, 3, 1);
    inst.loss = LossSpec{};
    inst.truth = [](std::span<const double> x) { return x[0]; };
    inst.label = "line";
    return inst;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("test set enumerates tiny grids in full and samples reproducibly") {
    const auto small = build_poisson(2, 3); // 9 points < any realistic n_test
    const TestSet full = TestSet::make(*small.grid, 50, 7);
    CHECK(full.n == 9);
    CHECK(full.d == 2);
    std::set<std::pair<int, int>> seen;
    for (std::int64_t i = 0; i < full.n; ++i) {
        const int a = full.flat[static_cast<std::size_t>(2 * i)];
        const int b = full.flat[static_cast<std::size_t>(2 * i + 1)];
        CHECK(a >= 1);
        CHECK(a <= 3);
        seen.emplace(a, b);
    }
    CHECK(seen.size() == 9); // each grid point exactly once

    const auto big = build_poisson(3, 100);
    const TestSet t1 = TestSet::make(*big.grid, 200, 5);
    const TestSet t2 = TestSet::make(*big.grid, 200, 5);
    const TestSet t3 = TestSet::make(*big.grid, 200, 6);
    CHECK(t1.n == 200);
    CHECK(t1.flat.size() == 600);
    CHECK(t1.flat == t2.flat);
    CHECK(t1.flat != t3.flat);
    CHECK(std::all_of(t1.flat.begin(), t1.flat.end(),
                      [](std::int32_t v) { return v >= 1 && v <= 100; }));
}

TEST_CASE("error and residual metrics reduce to hand formulas on a tiny set") {
    const ProblemInstance inst = line_instance();
    const NetworkParams p = constant_net(0.5, 1);
    TestSet t;
    t.flat = {1, 3}; // points x=0 and x=2
    t.n = 2;
    t.d = 1;
    // truth {0,2} vs phi=0.5: errors {0.5,1.5}.
    CHECK(error_inf(p, inst, t) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(error_l2(p, inst, t) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
    // identity rows: residuals phi - b = {0.5, -1.5}.
    CHECK(residual_l2(p, inst, t) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
}

TEST_CASE("constant offset from a zero truth gives equal sup and rms errors") {
    ProblemInstance inst = line_instance();
    inst.truth = [](std::span<const double>) { return 0.0; };
    const NetworkParams p = constant_net(-0.7, 1);
    const TestSet t = TestSet::make(*inst.grid, 10, 1);
    CHECK(error_inf(p, inst, t) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(error_l2(p, inst, t) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("rms error never exceeds the sup error") {
    const auto inst = build_poisson(2, 6);
    const NetworkParams p = init_params({3, 8, 2}, InitMode::InverseSqrt, 11);
    const TestSet t = TestSet::make(*inst.grid, 1000, 2);
    CHECK(error_l2(p, inst, t) <= error_inf(p, inst, t) * (1.0 + 1e-15));
}

TEST_CASE("error metrics demand a truth function") {
    const auto inst = build_queueing(2, 4);
    const NetworkParams p = constant_net(1.0, 2);
    const TestSet t = TestSet::make(*inst.grid, 5, 3);
    CHECK_THROWS_AS((void)error_inf(p, inst, t), ParamError);
    CHECK_THROWS_AS((void)error_l2(p, inst, t), ParamError);
    CHECK(residual_l2(p, inst, t) >= 0.0); // residual needs no truth
}

TEST_CASE("oracle residuals match the dense matrix residual") {
    const auto inst = build_poisson(2, 4);
    const DenseSystem sys = densify(*inst.oracle);
    REQUIRE(sys.n == 16);
    const NetworkParams p = init_params({3, 6, 2}, InitMode::InverseSqrt, 9);

    // phi over the whole grid, indexed by flat position.
    std::vector<double> phi(16);
    std::vector<std::int32_t> idx(2);
    for (std::int32_t i = 1; i <= 4; ++i)
        for (std::int32_t j = 1; j <= 4; ++j) {
            idx = {i, j};
            phi[static_cast<std::size_t>((i - 1) * 4 + (j - 1))] = forward_at(p, *inst.grid, idx);
        }

    const TestSet t = TestSet::make(*inst.grid, 100, 4); // full enumeration
    REQUIRE(t.n == 16);
    double acc = 0.0;
    for (std::int64_t r = 0; r < t.n; ++r) {
        const auto row = std::span<const std::int32_t>(t.flat).subspan(
            static_cast<std::size_t>(2 * r), 2);
        const auto k = static_cast<std::size_t>((row[0] - 1) * 4 + (row[1] - 1));
        double dot = 0.0;
        for (std::size_t c = 0; c < 16; ++c) dot += sys.mat[k * 16 + c] * phi[c];
        const double res = dot - sys.rhs[k];
        acc += res * res;
    }
    const double want = std::sqrt(acc / static_cast<double>(t.n));
    CHECK(residual_l2(p, inst, t) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("zero parameters solve a homogeneous system exactly") {
    const auto inst = build_queueing(2, 5); // rhs identically zero
    NetworkParams p({3, 6, 2});
    std::fill(p.data.begin(), p.data.end(), 0.0);
    const TestSet t = TestSet::make(*inst.grid, 40, 8);
    CHECK(residual_l2(p, inst, t) == 0.0);
}

TEST_CASE("residual error bound arithmetic") {
    CHECK(residual_error_bound(2.0, 100.0, 1e-6) == doctest::Approx(2e-2).epsilon(1e-15));
    CHECK(residual_error_bound(5.0, 1000.0, 0.0) == 0.0);
    CHECK_THROWS_AS((void)residual_error_bound(-1.0, 10.0, 1.0), ParamError);
    CHECK_THROWS_AS((void)residual_error_bound(1.0, -10.0, 1.0), ParamError);
    CHECK_THROWS_AS((void)residual_error_bound(1.0, 10.0, -1.0), ParamError);
}

TEST_CASE("residual bound dominates the true error on a dense instance") {
    const auto inst = build_poisson(2, 4);
    const DenseSystem sys = densify(*inst.oracle);
    const std::vector<double> u = dense_solve(sys);
    const double inv_norm = dense_inverse_norm2(sys.mat, sys.n);
    const NetworkParams p = init_params({3, 8, 2}, InitMode::InverseSqrt, 3);

    const TestSet t = TestSet::make(*inst.grid, 1000, 1); // all 16 rows, once each
    REQUIRE(t.n == sys.n);
    BatchEngine eng(inst.grid, inst.oracle, inst.loss);
    const double full_loss = eng.loss(p, t.flat);

    double err2 = 0.0;
    for (std::int64_t r = 0; r < t.n; ++r) {
        const auto row = std::span<const std::int32_t>(t.flat).subspan(
            static_cast<std::size_t>(2 * r), 2);
        const double diff = forward_at(p, *inst.grid, row) -
                            u[static_cast<std::size_t>((row[0] - 1) * 4 + (row[1] - 1))];
        err2 += diff * diff;
    }
    const double bound = residual_error_bound(inv_norm, static_cast<double>(sys.n), full_loss);
    CHECK(std::sqrt(err2) <= bound * (1.0 + 1e-12));
}

TEST_CASE("slice keeps fixed coordinates and varies the chosen pair row-major") {
    const auto inst = build_poisson(3, 5);
    const NetworkParams p = init_params({3, 7, 3}, InitMode::InverseSqrt, 21);
    const MultiIndex fixed{2, 3, 4};
    const auto s = slice_2d(p, *inst.grid, fixed, 0, 2);
    REQUIRE(s.size() == 25);
    for (std::int32_t i = 1; i <= 5; ++i)
        for (std::int32_t j = 1; j <= 5; ++j) {
            const MultiIndex idx{i, 3, j}; // dim 1 stays at the fixed value
            CHECK(s[static_cast<std::size_t>((i - 1) * 5 + (j - 1))] ==
                  forward_at(p, *inst.grid, idx));
        }

    const auto flat_net = constant_net(4.25, 3);
    const auto c = slice_2d(flat_net, *inst.grid, fixed, 1, 0);
    CHECK(std::all_of(c.begin(), c.end(), [](double v) { return v == 4.25; }));

    CHECK_THROWS_AS((void)slice_2d(p, *inst.grid, fixed, 1, 1), ParamError);
    CHECK_THROWS_AS((void)slice_2d(p, *inst.grid, fixed, -1, 2), ParamError);
    CHECK_THROWS_AS((void)slice_2d(p, *inst.grid, fixed, 0, 3), ParamError);
    CHECK_THROWS_AS((void)slice_2d(p, *inst.grid, MultiIndex{1, 2}, 0, 1), ParamError);
}

TEST_CASE("argmax strategies agree on a small grid") {
    const auto inst = build_poisson(2, 10);
    const MultiIndex peak{7, 3};
    const NetworkParams p = cone_net(*inst.grid, peak);

    const auto [ei, ev] = argmax_scan(p, *inst.grid, 0, 0, ArgmaxStrategy::Exhaustive);
    CHECK(ei == peak);
    CHECK(ev == 0.0);

    // Coordinate ascent on a separable concave surface reaches the global
    // max from any start, so few samples suffice.
    const auto [si, sv] = argmax_scan(p, *inst.grid, 30, 9, ArgmaxStrategy::Sampled);
    CHECK(si == ei);
    CHECK(sv == ev);

    const auto [ai, av] = argmax_scan(p, *inst.grid, 30, 9); // auto picks exhaustive here
    CHECK(ai == ei);
}

TEST_CASE("argmax on a large grid samples then ascends to the peak") {
    const auto inst = build_poisson(6, 12); // 12^6 points, beyond the full-scan limit
    const MultiIndex peak{5, 3, 9, 2, 11, 7};
    const NetworkParams p = cone_net(*inst.grid, peak);
    const auto [idx, val] = argmax_scan(p, *inst.grid, 50, 11);
    CHECK(idx == peak);
    CHECK(val == 0.0);
    CHECK_THROWS_AS((void)argmax_scan(p, *inst.grid, 10, 1, ArgmaxStrategy::Exhaustive),
                    ParamError);
}

TEST_CASE("argmax on a single-point grid returns that point") {
    const GridSpec g = make_explicit_grid(1, std::vector<std::vector<double>>{{0.3}});
    const NetworkParams p = init_params({3, 4, 1}, InitMode::InverseSqrt, 2);
    const auto [idx, val] = argmax_scan(p, g, 5, 1);
    CHECK(idx == MultiIndex{1});
    CHECK(val == forward(p, std::vector<double>{0.3}));
}

TEST_CASE("evaluate assembles the report and serializes to json") {
    const auto inst = build_poisson(2, 5);
    const NetworkParams p = init_params({3, 6, 2}, InitMode::InverseSqrt, 13);
    EvalReport rep = evaluate(p, inst, 10, 42);
    CHECK(rep.e_inf.has_value());
    CHECK(rep.e_l2.has_value());
    CHECK(rep.res_l2 >= 0.0);
    CHECK(rep.n_test == 10);
    CHECK(rep.label == inst.label);
    CHECK(rep.arch.M == 6);

    rep.config_echo["family"] = "poisson";
    const auto j = nlohmann::json::parse(to_json_string(rep));
    CHECK(j.at("res_l2").get<double>() == rep.res_l2);
    CHECK(j.at("e_inf").get<double>() == *rep.e_inf);
    CHECK(j.at("n_test").get<std::int64_t>() == 10);
    CHECK(j.at("label").get<std::string>() == inst.label);
    CHECK(j.at("architecture").at("L").get<int>() == 3);
    CHECK(j.at("architecture").at("M").get<int>() == 6);
    CHECK(j.at("architecture").at("d").get<int>() == 2);
    CHECK(j.at("config").at("family").get<std::string>() == "poisson");

    const auto blind = build_queueing(2, 5);
    const EvalReport rep2 = evaluate(constant_net(1.0, 2), blind, 8, 1);
    CHECK_FALSE(rep2.e_inf.has_value());
    CHECK_FALSE(rep2.e_l2.has_value());
    const auto j2 = nlohmann::json::parse(to_json_string(rep2));
    CHECK_FALSE(j2.contains("e_inf"));
    CHECK_FALSE(j2.contains("e_l2"));
    CHECK_FALSE(j2.contains("config"));
}

} // TEST_SUITE
