#include "phaseless/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "phaseless/common.hpp"

namespace phaseless {

namespace {

GaussRule build(int n) {
    GaussRule g;
    g.nodes.resize(static_cast<size_t>(n));
    g.weights.resize(static_cast<size_t>(n));
    const unsigned un = static_cast<unsigned>(n);
    for (int i = 0; i < n; ++i) {
        double x = -std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            const double p = std::legendre(un, x);
            const double pm = std::legendre(un - 1, x);
            dp = n * (x * p - pm) / (x * x - 1.0);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        dp = n * (x * std::legendre(un, x) - std::legendre(un - 1, x)) / (x * x - 1.0);
        g.nodes[static_cast<size_t>(i)] = x;
        g.weights[static_cast<size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw PreconditionError("gauss_legendre: order must be positive");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussRule>(build(n));
    return *slot;
}

}  // namespace phaseless
