#pragma once

#include <vector>

namespace phaseless {

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule; cached per n, thread-safe.
const GaussRule& gauss_legendre(int n);

}  // namespace phaseless
