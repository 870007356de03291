#pragma once

#include <string>
#include <vector>

namespace nnsolve {

/// One verification check: the measured discrepancy in the check's own
/// units (0 when the comparison is exact) and whether it clears the
/// tolerance baked into the suite.
struct VerifyCheck {
    std::string name;
    bool pass = false;
    double discrepancy = 0.0;
    std::string detail;
};

struct VerifyOptions {
    /// Test fixture: perturbs one Poisson row so the row-equality check
    /// must report a failure. Never set by the CLI.
    bool inject_row_fault = false;
};

struct VerifyResult {
    std::vector<VerifyCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Cross-checks every row oracle against its independent dense
/// construction, the reverse-mode gradients against finite differences,
/// the matrix-free residual against dense solves, the a posteriori error
/// bound, transition-matrix stochasticity, and the queueing rank-deficiency
/// contract. Small instances only; runs in seconds.
VerifyResult run_verification(const VerifyOptions& opt = {});

std::string to_json_string(const VerifyResult& r);

} // namespace nnsolve
