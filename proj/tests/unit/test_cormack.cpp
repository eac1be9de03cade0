#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phaseless/cormack.hpp"
#include "phaseless/medium.hpp"

using namespace phaseless;
using cd = std::complex<double>;

namespace {

const Slice kSlice = Slice::make(0.0, 1.0);

// beta_n(r) = r^n (1 - r^2/R^2)^4 (1 + r/2) on r < R.
double manufactured(int n, double r, double R = 0.8) {
    if (r >= R) return 0.0;
    return std::pow(r, n) * std::pow(1.0 - r * r / (R * R), 4) * (1.0 + 0.5 * r);
}

std::vector<double> manufactured_psi(int n, const RadialGrid& g, double R = 0.8) {
    std::vector<double> psi(g.size());
    for (size_t k = 0; k < g.size(); ++k)
        psi[k] = oracle::abel_forward_harmonic([&](double r) { return manufactured(n, r, R); }, n, g.nodes[k], R);
    return psi;
}

double rel_l2(const std::vector<cd>& got, const std::vector<double>& want) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < want.size(); ++i) {
        num += std::norm(got[i] - want[i]);
        den += want[i] * want[i];
    }
    return std::sqrt(num / den);
}

PolarSinogram polar_from_medium(const RefractiveMedium& m, size_t n_rho, size_t n_angle) {
    PolarSinogram p;
    p.slice = kSlice;
    p.grid = RadialGrid::uniform(kSlice.B_a, n_rho);
    for (size_t i = 0; i < n_angle; ++i) p.alphas.push_back(kTwoPi * static_cast<double>(i + 1) / n_angle);
    p.psi.resize(n_rho * n_angle);
    for (size_t k = 0; k < n_rho; ++k)
        for (size_t i = 0; i < n_angle; ++i)
            p.psi[k * n_angle + i] =
                exact_chord_integral(m, boundary_from_chord(kSlice, p.alphas[i], p.grid.nodes[k])).value;
    return p;
}

PhantomComponent gaussian(Vec3 c, double sigma, double amp, double cutoff = 0.0) {
    PhantomComponent g;
    g.shape = Shape::gaussian_bump;
    g.center = c;
    g.scale = sigma;
    g.amplitude = amp;
    g.cutoff = cutoff;
    return g;
}

double masked_rel_l2(const CartesianField& ref, const CartesianField& f) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ref.values.size(); ++i)
        if (ref.mask[i]) {
            num += (f.values[i] - ref.values[i]) * (f.values[i] - ref.values[i]);
            den += ref.values[i] * ref.values[i];
        }
    return std::sqrt(num / den);
}

}  // namespace

TEST(Abel, ConstantHasClosedForm) {
    const auto g = RadialGrid::uniform(1.0, 512);
    const std::vector<double> one(512, 1.0);
    double worst = 0.0;
    for (double w : g.nodes) worst = std::max(worst, std::abs(abel_apply(one, g, w) - std::sqrt(1.0 - w * w) / kPi));
    EXPECT_LT(worst, 1e-10);
}

TEST(Abel, ZeroAndEndpoint) {
    const auto g = RadialGrid::uniform(1.0, 64);
    EXPECT_EQ(abel_apply(std::vector<double>(64, 0.0), g, 0.3), 0.0);
    std::vector<double> h(64);
    for (size_t k = 0; k < 64; ++k) h[k] = std::cos(3.0 * g.nodes[k]);
    EXPECT_LT(std::abs(abel_apply(h, g, 1.0 - 1e-10)), 1e-4);
    EXPECT_LT(std::abs(abel_apply(h, g, 1.0)), 1e-12);
}

TEST(Abel, LinearIsExact) {
    const auto g = RadialGrid::uniform(1.0, 32);
    std::vector<double> h(32);
    for (size_t k = 0; k < 32; ++k) h[k] = 2.0 - 1.5 * g.nodes[k];
    for (double w : {0.0, 0.1, 0.5, 0.9}) {
        const double want =
            oracle::gauss([&](double v) { return (2.0 - 1.5 * std::sqrt(w * w + v * v)) / kPi; }, 0.0,
                          std::sqrt(1.0 - w * w), 40, 16);
        EXPECT_NEAR(abel_apply(h, g, w), want, 1e-12) << w;
    }
}

TEST(Kernels, QOnDiagonalIsOne) {
    for (int n = 0; n <= 8; ++n)
        for (double w : {1e-3, 0.2, 0.7, 1.0}) {
            EXPECT_NEAR(kernel_Q(n, w, w), 1.0, 1e-10) << n;
            EXPECT_NEAR(kernel_Q_closed(n, 1.0), 1.0, 1e-12) << n;
        }
}

TEST(Kernels, ZerothOrder) {
    for (double r : {0.1, 0.5, 1.0})
        for (double q : {0.0, 0.3, 0.99, 1.0}) {
            EXPECT_NEAR(kernel_Q(0, r, q * r), 1.0, 1e-12);
            EXPECT_EQ(kernel_T(0, r, q * r), 0.0);
            EXPECT_EQ(kernel_G(0, q), 0.0);
        }
}

TEST(Kernels, RejectsOmegaAboveR) {
    EXPECT_THROW(kernel_Q(2, 0.5, 0.6), PreconditionError);
    EXPECT_THROW(kernel_T(2, 0.5, 0.6), PreconditionError);
    EXPECT_THROW(kernel_Q(2, 0.0, 0.0), PreconditionError);
}

TEST(Kernels, ClosedFormsMatchQuadrature) {
    for (int n = 0; n <= 12; ++n)
        for (double q : {1e-4, 0.05, 0.3, 0.6, 0.9, 0.999}) {
            const double r = 0.7;
            EXPECT_NEAR(kernel_Q(n, r, q * r), kernel_Q_closed(n, q), 1e-11) << n << ' ' << q;
            const double T = kernel_T(n, r, q * r), G = kernel_G(n, q) / (r * r);
            EXPECT_NEAR(T, G, 1e-8 * std::max(1.0, std::abs(G))) << n << ' ' << q;
        }
    for (int n = 1; n <= 8; ++n) EXPECT_NEAR(kernel_G(n, 1.0), 0.5 * n * n, 1e-9 * n * n);
}

TEST(Kernels, QMatchesDefiningIntegral) {
    for (int n : {1, 4, 7}) {
        const double r = 0.9, w = 0.35;
        const double want = oracle::simpson(
                                [&](double t) {
                                    const double c = std::cos(0.5 * t), s = std::sin(0.5 * t);
                                    return std::cos(n * std::acos(std::sqrt(r * r * c * c + w * w * s * s) / r));
                                },
                                0.0, kPi) /
                            kPi;
        EXPECT_NEAR(kernel_Q(n, r, w), want, 1e-11) << n;
    }
}

TEST(Kernels, DerivativeOfQIsOmegaT) {
    for (int n : {1, 2, 5}) {
        const double r = 0.8, h = 1e-5;
        for (double w : {0.1, 0.4, 0.7}) {
            const double fd = (kernel_Q(n, r, w + h) - kernel_Q(n, r, w - h)) / (2.0 * h);
            EXPECT_NEAR(fd, w * kernel_T(n, r, w), 1e-6 * std::max(1.0, std::abs(fd))) << n << ' ' << w;
        }
    }
}

TEST(Kernels, DifferentiatedEquationIdentity) {
    // -(1/w) d/dw int_w^B r beta Q_n dr = beta(w) - int_w^B r T_n beta dr for a smooth beta.
    const int n = 3;
    auto beta = [](double r) { return manufactured(3, r); };
    auto lhs_integral = [&](double w) {
        const double s = std::sqrt(0.8 - w);
        return oracle::gauss([&](double t) { return 2.0 * t * (w + t * t) * beta(w + t * t) * kernel_Q(n, w + t * t, w); },
                             0.0, s, 20, 12);
    };
    for (double w : {0.2, 0.5}) {
        const double h = 1e-4;
        const double lhs = -(lhs_integral(w + h) - lhs_integral(w - h)) / (2.0 * h) / w;
        const double s = std::sqrt(0.8 - w);
        const double tint = oracle::gauss(
            [&](double t) {
                const double r = w + t * t;
                return 2.0 * t * r * kernel_T(n, r, w) * beta(r);
            },
            0.0, s, 20, 12);
        EXPECT_NEAR(lhs, beta(w) - tint, 1e-5) << w;
    }
}

TEST(Kernels, TTildeBoundedAwayFromOriginAndScales) {
    for (int n : {2, 3}) {
        double prev = 0.0;
        for (int N : {40, 80}) {
            double mx = 0.0;
            for (int i = 0; i <= N; ++i) {
                const double r = 0.25 + 0.75 * i / N;
                for (int j = 0; j <= N; ++j) mx = std::max(mx, std::abs(kernel_T_tilde(n, r, r * j / N)));
            }
            EXPECT_TRUE(std::isfinite(mx));
            if (prev > 0.0) {
                EXPECT_NEAR(mx, prev, 1e-6 * prev) << n;
            }
            prev = mx;
        }
        EXPECT_NEAR(kernel_T_tilde(n, 0.3, 0.12), kernel_T_tilde(n, 0.6, 0.24) * 2.0, 1e-9) << n;
    }
}

TEST(Volterra, ZeroRhsGivesZero) {
    const auto g = RadialGrid::uniform(1.0, 64);
    for (int n : {0, 1, 4}) {
        for (auto method : {VolterraMethod::nystrom, VolterraMethod::picard}) {
            VolterraOptions o;
            o.method = method;
            const auto r = volterra_solve(n, g, std::vector<double>(64, 0.0), o);
            for (const auto& b : r.beta) EXPECT_EQ(std::abs(b), 0.0);
        }
    }
}

TEST(Volterra, DiskAbelPair) {
    const double c = 0.7, R = 0.6;
    const auto g = RadialGrid::uniform(1.0, 512);
    std::vector<double> psi(512);
    for (size_t k = 0; k < 512; ++k) psi[k] = g.nodes[k] < R ? 2.0 * c * std::sqrt(R * R - g.nodes[k] * g.nodes[k]) : 0.0;
    const auto r = volterra_solve(0, g, abel_rhs(psi, g, 0));
    for (size_t k = 0; k < 512; ++k) {
        if (std::abs(g.nodes[k] - R) < 0.05) continue;
        EXPECT_NEAR(r.beta[k].real(), g.nodes[k] < R ? c : 0.0, 0.01 * c) << g.nodes[k];
    }
}

class Manufactured : public ::testing::TestWithParam<int> {};

TEST_P(Manufactured, FullChainRecoversHarmonic) {
    const int n = GetParam();
    const auto g = RadialGrid::uniform(1.0, 512);
    const auto psi = manufactured_psi(n, g);
    std::vector<double> truth(512);
    for (size_t k = 0; k < 512; ++k) truth[k] = manufactured(n, g.nodes[k]);
    const auto rhs = abel_rhs(psi, g, n);
    VolterraOptions o;
    const auto op = VolterraOperator::build(n, g, o);
    const std::vector<cd> crhs(rhs.begin(), rhs.end());
    const auto ny = volterra_solve(op, g, crhs, o);
    EXPECT_LT(rel_l2(ny.beta, truth), 1e-3);

    o.method = VolterraMethod::picard;
    o.divergence_window = 0;
    o.max_iterations = 1000;
    const auto pc = volterra_solve(op, g, crhs, o);
    EXPECT_LT(pc.iterations, o.max_iterations);
    double agree = 0.0;
    for (size_t k = 0; k < 512; ++k) agree = std::max(agree, std::abs(pc.beta[k] - ny.beta[k]));
    EXPECT_LT(agree, 1e-8);
    EXPECT_LT(ny.residual, 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Harmonics, Manufactured, ::testing::Values(0, 1, 3, 8));

TEST(Volterra, PicardGuardAdvisesNystrom) {
    const auto g = RadialGrid::uniform(1.0, 128);
    const auto rhs = abel_rhs(manufactured_psi(3, g), g, 3);
    VolterraOptions o;
    o.method = VolterraMethod::picard;
    try {
        volterra_solve(3, g, rhs, o);
        FAIL() << "expected PicardDivergence";
    } catch (const PicardDivergence& e) {
        EXPECT_NE(std::string(e.what()).find("nystrom"), std::string::npos);
    }
}

TEST(Volterra, ClosureOnlyForHigherHarmonics) {
    const auto g = RadialGrid::uniform(1.0, 256);
    const std::vector<double> rhs(256, 0.0);
    EXPECT_EQ(volterra_solve(0, g, rhs).closure_nodes, 0u);
    EXPECT_EQ(volterra_solve(1, g, rhs).closure_nodes, 0u);
    const auto r8 = volterra_solve(8, g, rhs);
    EXPECT_NEAR(g.nodes[r8.closure_nodes], std::pow(1e-6, 1.0 / 8.0), g.step());
}

TEST(Volterra, RichardsonFallbackForRadial) {
    const auto g = RadialGrid::uniform(1.0, 512);
    std::vector<double> truth(512);
    for (size_t k = 0; k < 512; ++k) truth[k] = manufactured(0, g.nodes[k]);
    const auto rhs = abel_rhs(manufactured_psi(0, g), g, 0, RhsMethod::richardson);
    EXPECT_LT(rel_l2(volterra_solve(0, g, rhs).beta, truth), 1e-3);
}

TEST(Harmonics, RadialDataHasOnlyZerothHarmonic) {
    PolarSinogram p;
    p.slice = kSlice;
    p.grid = RadialGrid::uniform(1.0, 16);
    for (size_t i = 0; i < 64; ++i) p.alphas.push_back(kTwoPi * (i + 1) / 64.0);
    for (size_t k = 0; k < 16; ++k)
        for (size_t i = 0; i < 64; ++i) p.psi.push_back(1.0 - p.grid.nodes[k]);
    const auto h = harmonics(p, 8);
    for (size_t k = 0; k < 16; ++k) {
        EXPECT_NEAR(h.psi_n[0][k].real(), 1.0 - p.grid.nodes[k], 1e-14);
        for (int n = 1; n <= 8; ++n) EXPECT_LT(std::abs(h.psi_n[n][k]), 1e-14);
    }
    EXPECT_FALSE(h.tail_warning);
}

TEST(Harmonics, PureCosine) {
    PolarSinogram p;
    p.slice = kSlice;
    p.grid = RadialGrid::uniform(1.0, 8);
    for (size_t i = 0; i < 32; ++i) p.alphas.push_back(kTwoPi * (i + 1) / 32.0);
    for (size_t k = 0; k < 8; ++k)
        for (double a : p.alphas) p.psi.push_back(p.grid.nodes[k] * std::cos(2.0 * a));
    const auto h = harmonics(p, 6);
    for (size_t k = 0; k < 8; ++k)
        for (int n = 0; n <= 6; ++n) {
            const cd want = n == 2 ? cd(0.5 * p.grid.nodes[k]) : cd(0.0);
            EXPECT_LT(std::abs(h.psi_n[n][k] - want), 1e-12) << n;
        }
}

TEST(Harmonics, TailWarning) {
    PolarSinogram p;
    p.slice = kSlice;
    p.grid = RadialGrid::uniform(1.0, 4);
    for (size_t i = 0; i < 64; ++i) p.alphas.push_back(kTwoPi * (i + 1) / 64.0);
    for (size_t k = 0; k < 4; ++k)
        for (double a : p.alphas) p.psi.push_back(1.0 + std::cos(10.0 * a));
    EXPECT_TRUE(harmonics(p, 4).tail_warning);
    EXPECT_FALSE(harmonics(p, 12).tail_warning);
}

TEST(Harmonics, OffCentreGaussianMatchesQuadrature) {
    const RefractiveMedium m(1.0, {gaussian(Vec3(0.3, -0.1, 0.0), 0.09, 0.05)});
    const auto p = polar_from_medium(m, 6, 256);
    const auto h = harmonics(p, 10);
    for (size_t k : {0u, 2u, 4u}) {
        const double rho = p.grid.nodes[k];
        auto psi = [&](double a) { return exact_chord_integral(m, boundary_from_chord(kSlice, a, rho)).value; };
        for (int n : {0, 1, 3, 7}) {
            const double re = oracle::gauss([&](double a) { return psi(a) * std::cos(n * a); }, 0.0, kTwoPi, 64, 16);
            const double im = oracle::gauss([&](double a) { return -psi(a) * std::sin(n * a); }, 0.0, kTwoPi, 64, 16);
            EXPECT_LT(std::abs(h.psi_n[n][k] - cd(re, im) / kTwoPi), 1e-8) << n << ' ' << rho;
        }
    }
}

TEST(Cormack, RadialPhantomUsesOnlyZerothHarmonic) {
    PhantomComponent d;
    d.shape = Shape::smooth_disk;
    d.scale = 0.6;
    d.amplitude = 0.04;
    const RefractiveMedium m(1.0, {d});
    const auto f = cormack_reconstruct(polar_from_medium(m, 128, 64));
    EXPECT_EQ(f.n_used(), 0);
    double num = 0.0, den = 0.0;
    for (double r = 0.005; r < 0.55; r += 0.01) {
        const double want = m.beta(Vec3(r, 0.0, 0.0));
        num += std::pow(f.value(r, 0.4) - want, 2);
        den += want * want;
    }
    EXPECT_LT(std::sqrt(num / den), 0.02);
}

TEST(Cormack, RotationEquivariance) {
    const double gamma = 0.3;
    auto both = [&](double angle) {
        const double c = std::cos(angle), s = std::sin(angle);
        const Vec3 a(0.35 * c, 0.35 * s, 0.0);
        const Vec3 b(-0.1 * c - 0.05 * s, -0.1 * s + 0.05 * c, 0.0);
        return RefractiveMedium(1.0, {gaussian(a, 0.08, 0.03), gaussian(b, 0.1, 0.02)});
    };
    CormackOptions o;
    const auto f0 = cormack_reconstruct(polar_from_medium(both(0.0), 96, 256), o);
    const auto f1 = cormack_reconstruct(polar_from_medium(both(gamma), 96, 256), o);
    double worst = 0.0;
    for (double r : {0.05, 0.2, 0.35, 0.5, 0.8})
        for (double phi = 0.0; phi < kTwoPi; phi += 0.37) worst = std::max(worst, std::abs(f1.value(r, phi + gamma) - f0.value(r, phi)));
    EXPECT_LT(worst, 1e-6);
}

TEST(Cormack, AgreesWithRadonAndReprojects) {
    const auto m = default_two_bump_phantom();
    const auto grid = ChordGrid::uniform(kSlice, 180, 128);
    Sinogram s(kSlice, grid);
    const auto chords = grid_chords(kSlice, grid);
    for (size_t i = 0; i < chords.size(); ++i) s.psi[i] = exact_chord_integral(m, chords[i]).value;

    const auto truth = sample_medium(m, kSlice, 128);
    const auto fbp = radon_invert(s, {}, 128);
    const auto pf = cormack_reconstruct(to_polar(s));
    const auto cf = to_cartesian(pf, 128);
    EXPECT_LT(masked_rel_l2(fbp, cf), 0.03);
    EXPECT_LT(masked_rel_l2(truth, cf), 0.05);

    const auto re = radon_forward(to_cartesian(pf, 256), grid);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < s.psi.size(); ++i) {
        num += std::pow(re.psi[i] - s.psi[i], 2);
        den += s.psi[i] * s.psi[i];
    }
    EXPECT_LT(std::sqrt(num / den), 0.02);
}

TEST(Cormack, ToPolarKeepsSamplesOnDefaultGrid) {
    const auto m = default_two_bump_phantom();
    const auto grid = ChordGrid::uniform(kSlice, 36, 32);
    Sinogram s(kSlice, grid);
    const auto chords = grid_chords(kSlice, grid);
    for (size_t i = 0; i < chords.size(); ++i) s.psi[i] = exact_chord_integral(m, chords[i]).value;
    const auto p = to_polar(s);
    ASSERT_EQ(p.grid.size(), 16u);
    ASSERT_EQ(p.alphas.size(), 72u);
    for (size_t k = 0; k < p.grid.size(); k += 5)
        for (size_t i = 0; i < p.alphas.size(); i += 7) {
            const double want = exact_chord_integral(m, boundary_from_chord(kSlice, p.alphas[i], p.grid.nodes[k])).value;
            EXPECT_NEAR(p.at(k, i), want, 1e-12);
        }
}

TEST(Cormack, SynthesizedFieldIsReal) {
    const auto f = cormack_reconstruct(polar_from_medium(default_two_bump_phantom(), 32, 64));
    for (int n = 1; n <= f.n_used(); ++n) EXPECT_EQ(f.harmonic(-n, 0.3), std::conj(f.harmonic(n, 0.3)));
    EXPECT_EQ(f.harmonic(0, 0.3).imag(), 0.0);
}
