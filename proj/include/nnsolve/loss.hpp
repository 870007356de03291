#pragma once

#include "nnsolve/grid.hpp"

namespace nnsolve {

/// Loss selection for training. All variants share the batched residual
/// term; the penalty variants add 1/epsilon times a squared constraint.
struct LossSpec {
    enum class Kind {
        Plain,        // mean squared residual only
        NormPenalty,  // + (|Phi|_p - 1)^2 / epsilon over the batch
        PinComponent, // + (phi(x_pin) - 1)^2 / epsilon
        MeanPenalty,  // + (mean(Phi) - 1)^2 / epsilon over the batch
    };

    Kind kind = Kind::Plain;
    double epsilon = 1.0;
    double p = 2.0;       // NormPenalty exponent
    MultiIndex pin_index; // PinComponent target grid index

    friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

} // namespace nnsolve
