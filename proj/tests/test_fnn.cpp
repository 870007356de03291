#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "nnsolve/checkpoint.hpp"
#include "nnsolve/errors.hpp"
#include "nnsolve/fnn.hpp"

using namespace nnsolve;

TEST_SUITE("fnn") {

TEST_CASE("parameter count follows the closed form") {
    CHECK(param_count({2, 100, 3}) == 500);
    CHECK(param_count({3, 200, 3}) == 41200);
    CHECK(param_count({3, 100, 6}) == 10900);
    CHECK(param_count({3, 100, 3}) == 10600);

    NetworkParams p({4, 7, 5});
    CHECK(p.data.size() == param_count({4, 7, 5}));
    CHECK_THROWS_AS(param_count({1, 5, 2}), ParamError);
    CHECK_THROWS_AS(param_count({3, 0, 2}), ParamError);
}

TEST_CASE("flat layout walks W1,b1,...,a without gaps") {
    NetworkParams p({4, 3, 2});
    CHECK(p.w_offset(1) == 0);
    CHECK(p.b_offset(1) == 6);
    CHECK(p.w_offset(2) == 9);
    CHECK(p.b_offset(2) == 18);
    CHECK(p.w_offset(3) == 21);
    CHECK(p.b_offset(3) == 30);
    CHECK(p.a_offset() == 33);
    CHECK(p.a_offset() + 3 == p.data.size());
}

TEST_CASE("initialization modes bound every entry and reproduce") {
    auto lit = init_params({3, 100, 3}, InitMode::SqrtLiteral, 11);
    for (double v : lit.data) {
        CHECK(v >= -10.0);
        CHECK(v <= 10.0);
    }
    auto inv = init_params({3, 100, 3}, InitMode::InverseSqrt, 11);
    for (double v : inv.data) {
        CHECK(v >= -0.1);
        CHECK(v <= 0.1);
    }
    auto inv2 = init_params({3, 100, 3}, InitMode::InverseSqrt, 11);
    CHECK(inv.data == inv2.data);
    auto inv3 = init_params({3, 100, 3}, InitMode::InverseSqrt, 12);
    CHECK(inv.data != inv3.data);
}

TEST_CASE("forward on hand-checkable networks") {
    NetworkParams zero({3, 4, 2});
    CHECK(forward(zero, std::vector<double>{0.3, -0.7}) == 0.0);

    // L=2, M=1: phi(x) = 2*relu(sum(x) - 0.5)
    NetworkParams tiny({2, 1, 3});
    tiny.w(1)[0] = tiny.w(1)[1] = tiny.w(1)[2] = 1.0;
    tiny.b(1)[0] = -0.5;
    tiny.a()[0] = 2.0;
    CHECK(forward(tiny, std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
    CHECK(forward(tiny, std::vector<double>{0.2, 0.3, 0.5}) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(forward(tiny, std::vector<double>{1.0}), ParamError);
}

TEST_CASE("reverse-mode gradient on the hand example") {
    NetworkParams tiny({2, 1, 1});
    tiny.w(1)[0] = 1.0;
    tiny.b(1)[0] = -0.5;
    tiny.a()[0] = 2.0;
    std::vector<double> g(param_count(tiny.arch));
    const double y = forward_with_grad(tiny, std::vector<double>{1.0}, g);
    CHECK(y == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g[tiny.w_offset(1)] == doctest::Approx(2.0).epsilon(1e-15)); // dphi/dW1
    CHECK(g[tiny.b_offset(1)] == doctest::Approx(2.0).epsilon(1e-15)); // dphi/db1
    CHECK(g[tiny.a_offset()] == doctest::Approx(0.5).epsilon(1e-15)); // dphi/da = relu(0.5)
}

TEST_CASE("all-zero parameters give zero gradient (relu'(0)=0)") {
    NetworkParams zero({3, 5, 2});
    std::vector<double> g(param_count(zero.arch), 1.0);
    const double y = forward_with_grad(zero, std::vector<double>{0.4, 0.6}, g);
    CHECK(y == 0.0);
    // Only d/da could be nonzero and h_{L-1}=relu(0)=0 kills it too.
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("gradient matches central finite differences away from kinks") {
    Rng rng(2024, RngStream::Test);
    for (int trial = 0; trial < 10; ++trial) {
        const Architecture arch{trial % 2 == 0 ? 3 : 4, 8, 3};
        auto p = init_params(arch, InitMode::InverseSqrt, 100 + static_cast<std::uint64_t>(trial));
        auto x = testutil::draw_kink_free_point(p, rng);
        REQUIRE(!x.empty());
        CHECK(testutil::fd_gradient_max_relerr(p, x) < 1e-5);
    }
}

TEST_CASE("forward_with_grad value is bit-identical to forward") {
    auto p = init_params({4, 16, 5}, InitMode::InverseSqrt, 3);
    Rng rng(5, RngStream::Test);
    std::vector<double> g(param_count(p.arch));
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(5);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        CHECK(forward(p, x) == forward_with_grad(p, x, g));
    }
}

TEST_CASE("layer-1 pre-activations are positively homogeneous with zero bias") {
    auto p = init_params({3, 6, 4}, InitMode::InverseSqrt, 9);
    for (auto& v : p.b(1)) v = 0.0;
    std::vector<double> x{0.3, -0.2, 0.8, -0.5};
    std::vector<double> x2 = x;
    for (auto& v : x2) v *= 2.5;
    std::vector<std::vector<double>> pre1, pre2;
    forward_trace(p, x, pre1);
    forward_trace(p, x2, pre2);
    for (std::size_t i = 0; i < pre1[0].size(); ++i)
        CHECK(pre2[0][i] == doctest::Approx(2.5 * pre1[0][i]).epsilon(1e-13));
}

TEST_CASE("batch_forward preserves order and matches forward") {
    auto p = init_params({3, 8, 2}, InitMode::InverseSqrt, 21);
    CHECK(batch_forward(p, {}).empty());
    std::vector<std::vector<double>> pts{{0.1, 0.2}, {-0.4, 0.9}, {0.0, 0.0}};
    auto ys = batch_forward(p, pts);
    REQUIRE(ys.size() == 3);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(ys[i] == forward(p, pts[i]));
    auto swapped = batch_forward(p, {pts[1], pts[0]});
    CHECK(swapped[0] == ys[1]);
    CHECK(swapped[1] == ys[0]);
}

TEST_CASE("checkpoint round-trips parameters and seed") {
    const auto path = std::filesystem::temp_directory_path() / "nnsolve_ckpt_test.bin";
    auto p = init_params({3, 12, 4}, InitMode::InverseSqrt, 77);
    save_checkpoint(path.string(), p, 77);
    auto ck = load_checkpoint(path.string());
    CHECK(ck.seed == 77);
    CHECK(ck.params.arch == p.arch);
    CHECK(ck.params.data == p.data);

    // Truncated file must be rejected.
    std::filesystem::resize_file(path, 32);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
}

} // TEST_SUITE
