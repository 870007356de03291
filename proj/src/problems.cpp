#include "nnsolve/problems.hpp"

#include <cmath>
#include <numbers>

#include "nnsolve/errors.hpp"

namespace nnsolve {

ProblemInstance build_poisson(int d, std::int64_t N) {
    auto grid = std::make_shared<GridSpec>(make_interior_uniform_grid(d, N, -1.0, 1.0));
    std::vector<std::shared_ptr<const DimFactor>> factors(
        static_cast<std::size_t>(d), make_poisson_factor(N, grid->h));
    auto kron = std::make_shared<KronSumOracle>(std::move(factors));
    TruthFn truth = [](std::span<const double> x) {
        double v = 1.0;
        for (double xi : x) v *= std::sin(std::numbers::pi * xi);
        return v;
    };
    auto oracle = std::make_shared<ManufacturedRhsOracle>(std::move(kron), grid, truth);
    return {grid, std::move(oracle), LossSpec{}, std::move(truth),
            "poisson d=" + std::to_string(d) + " N=" + std::to_string(N)};
}

ProblemInstance build_riesz(int d, std::int64_t N, std::vector<double> c,
                            std::vector<double> alpha) {
    if (d < 1) throw ParamError("riesz: dimension must be >= 1");
    if (c.empty()) c.assign(static_cast<std::size_t>(d), 1.0);
    if (alpha.empty()) alpha.assign(static_cast<std::size_t>(d), 1.5);
    if (static_cast<int>(c.size()) != d || static_cast<int>(alpha.size()) != d)
        throw ParamError("riesz: c and alpha must have one entry per dimension");
    auto grid = std::make_shared<GridSpec>(make_interior_uniform_grid(d, N, -1.0, 1.0));
    std::vector<std::shared_ptr<const DimFactor>> factors;
    for (int n = 0; n < d; ++n)
        factors.push_back(make_riesz_factor(N, grid->h, alpha[static_cast<std::size_t>(n)],
                                            c[static_cast<std::size_t>(n)]));
    auto kron = std::make_shared<KronSumOracle>(std::move(factors));
    TruthFn truth = [](std::span<const double> x) {
        double s = 0.0;
        for (double xi : x) s += xi;
        return std::sin(s);
    };
    auto oracle = std::make_shared<ManufacturedRhsOracle>(std::move(kron), grid, truth);
    return {grid, std::move(oracle), LossSpec{}, std::move(truth),
            "riesz d=" + std::to_string(d) + " N=" + std::to_string(N)};
}

ProblemInstance build_queueing(int d, std::int64_t N, double alpha, std::vector<double> lambda,
                               std::vector<std::int64_t> s) {
    if (d < 1) throw ParamError("queueing: dimension must be >= 1");
    if (lambda.empty()) lambda.assign(static_cast<std::size_t>(d), 0.01);
    if (s.empty()) {
        s.resize(static_cast<std::size_t>(d));
        for (int n = 0; n < d; ++n) s[static_cast<std::size_t>(n)] = 8 * (n + 1);
    }
    if (static_cast<int>(lambda.size()) != d || static_cast<int>(s.size()) != d)
        throw ParamError("queueing: lambda and s must have one entry per dimension");
    std::vector<double> mu(static_cast<std::size_t>(d));
    for (int n = 0; n < d; ++n)
        mu[static_cast<std::size_t>(n)] =
            (lambda[static_cast<std::size_t>(n)] +
             std::pow(static_cast<double>(N - 1), -alpha)) /
            static_cast<double>(s[static_cast<std::size_t>(n)]);
    auto grid = std::make_shared<GridSpec>(make_closed_uniform_grid(d, N, 0.0, 1.0));
    auto oracle = std::make_shared<QueueingOracle>(N, std::move(lambda), std::move(s), std::move(mu));
    LossSpec loss;
    loss.kind = LossSpec::Kind::PinComponent;
    loss.epsilon = 1.0;
    loss.pin_index.assign(static_cast<std::size_t>(d), 1);
    return {grid, std::move(oracle), std::move(loss), nullptr,
            "queueing d=" + std::to_string(d) + " N=" + std::to_string(N)};
}

ProblemInstance build_pbn(int d, std::vector<std::int64_t> shifts, std::vector<double> values) {
    if (d < 5)
        throw ParamError("pbn: d must be >= 5 so the default shift range fits, got " + std::to_string(d));
    if (shifts.empty()) shifts = {-13, -5, 2, 6};
    if (values.empty()) values = {1.0, 4.0, 3.0, 2.0};
    auto grid = std::make_shared<GridSpec>(
        make_explicit_grid(d, std::vector<double>{1.0 / 3.0, 2.0 / 3.0}));
    auto oracle = std::make_shared<PbnOracle>(d, std::move(shifts), std::move(values));
    LossSpec loss;
    loss.kind = LossSpec::Kind::MeanPenalty;
    loss.epsilon = 1.0;
    return {grid, std::move(oracle), std::move(loss), nullptr, "pbn d=" + std::to_string(d)};
}

} // namespace nnsolve
