#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phaseless/medium.hpp"

using namespace phaseless;

namespace {

PhantomComponent gaussian(Vec3 c, double sigma, double amp, double cutoff = 0.0) {
    PhantomComponent p;
    p.shape = Shape::gaussian_bump;
    p.center = c;
    p.scale = sigma;
    p.amplitude = amp;
    p.cutoff = cutoff;
    return p;
}

PhantomComponent disk(Vec3 c, double R, double amp) {
    PhantomComponent p;
    p.shape = Shape::smooth_disk;
    p.center = c;
    p.scale = R;
    p.amplitude = amp;
    return p;
}

// ln n = |x|^2; not a valid phantom, only a curvature-check input.
class QuadraticLogIndex : public IndexModel {
public:
    double n(const Vec3& x) const override { return std::exp(x.squaredNorm()); }
    Vec3 grad_log_n(const Vec3& x) const override { return 2.0 * x; }
    Mat3 hessian_log_n(const Vec3&) const override { return 2.0 * Mat3::Identity(); }
};

double line_integral_oracle(const RefractiveMedium& m, const Vec3& p, const Vec3& q) {
    const double len = (q - p).norm();
    return len * oracle::gauss([&](double t) { return m.beta(p + t * (q - p)); }, 0.0, 1.0, 400, 12);
}

}  // namespace

TEST(Medium, EmptyIsHomogeneous) {
    const RefractiveMedium m(1.0, {});
    const Vec3 x(0.3, -0.2, 0.1);
    EXPECT_EQ(m.beta(x), 0.0);
    EXPECT_EQ(m.n(x), 1.0);
    EXPECT_EQ(m.grad_log_n(x), Vec3::Zero());
    EXPECT_TRUE(m.trivial());
}

TEST(Medium, GaussianPeakValue) {
    const Vec3 c(0.1, 0.2, -0.1);
    const RefractiveMedium m(1.0, {gaussian(c, 0.1, 0.03, 0.5)});
    EXPECT_DOUBLE_EQ(m.beta(c), 0.03);
    EXPECT_DOUBLE_EQ(m.n(c), 1.03);
}

TEST(Medium, GradientAndHessianMatchFiniteDifferences) {
    const RefractiveMedium m(1.0, {gaussian(Vec3(0.2, 0.1, 0.0), 0.15, 0.04, 0.6),
                                   gaussian(Vec3(-0.3, -0.2, 0.1), 0.08, 0.02),
                                   disk(Vec3(0.0, 0.4, -0.2), 0.3, 0.03)});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    const double h = 1e-5;
    int checked = 0;
    while (checked < 100) {
        const Vec3 x(u(rng), u(rng), u(rng));
        if (x.norm() > 0.95) continue;
        const Vec3 g = m.grad_log_n(x);
        const Mat3 H = m.hessian_log_n(x);
        Vec3 gfd;
        Mat3 hfd;
        for (int i = 0; i < 3; ++i) {
            Vec3 e = Vec3::Zero();
            e(i) = h;
            gfd(i) = (std::log(m.n(x + e)) - std::log(m.n(x - e))) / (2.0 * h);
            hfd.col(i) = (m.grad_log_n(x + e) - m.grad_log_n(x - e)) / (2.0 * h);
        }
        const double scale = std::max(g.norm(), 1e-3);
        EXPECT_LT((g - gfd).norm() / scale, 1e-6);
        EXPECT_LT((H - hfd).norm() / std::max(H.norm(), 1e-2), 1e-6);
        ++checked;
    }
}

TEST(Medium, TaperedGaussianIsSmoothAcrossTheTaper) {
    const PhantomComponent c = gaussian(Vec3::Zero(), 0.1, 0.05, 0.3);
    const RefractiveMedium m(1.0, {c});
    const double h = 1e-5;
    for (double r = 0.19; r < 0.305; r += 0.0137) {
        const Vec3 x(r, 0.0, 0.0), e(h, 0.0, 0.0);
        const double fd = (m.grad_log_n(x + e).x() - m.grad_log_n(x - e).x()) / (2.0 * h);
        EXPECT_NEAR(m.hessian_log_n(x)(0, 0), fd, 1e-5);
    }
    EXPECT_EQ(m.beta(Vec3(0.3, 0.0, 0.0)), 0.0);
    EXPECT_LT(m.beta(Vec3(0.2999, 0.0, 0.0)), 1e-12);
}

TEST(Medium, ChordMissingDiskSupportIsZero) {
    const RefractiveMedium m(1.0, {disk(Vec3(0.2, 0.0, 0.0), 0.3, 0.05)});
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = boundary_from_chord(s, 0.0, 0.2 + 0.3);
    EXPECT_EQ(exact_chord_integral(m, c).value, 0.0);
}

TEST(Medium, UncutGaussianChordIntegral) {
    const double c = 0.02, sigma = 0.08;
    const RefractiveMedium m(1.0, {gaussian(Vec3(0.05, -0.1, 0.0), sigma, c)});
    const Slice s = Slice::make(0.0, 1.0);
    for (double alpha : {0.3, 1.7, 4.0}) {
        for (double d : {-0.3, -0.1, 0.0, 0.12}) {
            const ChordGeometry ch = boundary_from_chord(s, alpha, d);
            const Vec2 mm = normal_vector(alpha);
            const double dperp = d - (0.05 * mm.x() - 0.1 * mm.y());
            const double infinite_line = c * sigma * std::sqrt(2.0 * kPi) * std::exp(-dperp * dperp / (2 * sigma * sigma));
            const ChordIntegral v = exact_chord_integral(m, ch);
            EXPECT_FALSE(v.used_quadrature);
            EXPECT_NEAR(v.value, infinite_line, 1e-12);
            EXPECT_NEAR(v.value, line_integral_oracle(m, ch.y, ch.x), 1e-8 * std::max(v.value, 1e-6));
        }
    }
}

TEST(Medium, GaussianClosedFormOnAShortSegment) {
    const RefractiveMedium m(1.0, {gaussian(Vec3::Zero(), 0.1, 0.03)});
    const Vec3 p(-0.05, 0.02, 0.0), q(0.12, 0.05, 0.01);
    EXPECT_NEAR(segment_integral(m, p, q).value, line_integral_oracle(m, p, q), 1e-13);
}

TEST(Medium, SmoothDiskChordIntegral) {
    const RefractiveMedium m(1.0, {disk(Vec3(0.1, 0.2, 0.0), 0.4, 0.03)});
    const Slice s = Slice::make(0.0, 1.0);
    for (double d : {-0.25, 0.0, 0.33, 0.55}) {
        const ChordGeometry ch = boundary_from_chord(s, 2.2, d);
        const ChordIntegral v = exact_chord_integral(m, ch);
        EXPECT_FALSE(v.used_quadrature);
        EXPECT_NEAR(v.value, line_integral_oracle(m, ch.y, ch.x), 1e-13);
    }
    // Full chord through the centre: 2 c R (128/315).
    const Vec3 p(-0.3, 0.2, 0.0), q(0.5, 0.2, 0.0);
    EXPECT_NEAR(segment_integral(m, p, q).value, 2.0 * 0.03 * 0.4 * 128.0 / 315.0, 1e-15);
}

TEST(Medium, CutGaussianFallsBackToQuadrature) {
    const RefractiveMedium m(1.0, {gaussian(Vec3(0.1, 0.0, 0.0), 0.12, 0.04, 0.4)});
    const Slice s = Slice::make(0.0, 1.0);
    for (double d : {-0.35, -0.1, 0.0, 0.2, 0.45}) {
        const ChordGeometry ch = boundary_from_chord(s, 0.9, d);
        const ChordIntegral v = exact_chord_integral(m, ch);
        EXPECT_TRUE(v.used_quadrature);
        const double ref = line_integral_oracle(m, ch.y, ch.x);
        EXPECT_NEAR(v.value, ref, 1e-10 * std::max(ref, 1e-3));
    }
}

TEST(Medium, ChordIntegralIsAdditiveAndLinear) {
    const PhantomComponent a = gaussian(Vec3(0.2, 0.1, 0.0), 0.1, 0.02, 0.4);
    const PhantomComponent b = disk(Vec3(-0.2, -0.1, 0.0), 0.3, 0.03);
    const RefractiveMedium ma(1.0, {a}), mb(1.0, {b}), mab(1.0, {a, b});
    const Slice s = Slice::make(0.0, 1.0);
    for (double d : {-0.2, 0.05, 0.15}) {
        const ChordGeometry ch = boundary_from_chord(s, 0.4, d);
        const double sum = exact_chord_integral(ma, ch).value + exact_chord_integral(mb, ch).value;
        EXPECT_NEAR(exact_chord_integral(mab, ch).value, sum, 1e-15);
        const double v = exact_chord_integral(mab, ch).value;
        EXPECT_NEAR(exact_chord_integral(mab.scaled(2.5), ch).value, 2.5 * v, 1e-12 * std::max(v, 1.0));
    }
}

TEST(Medium, SupportVanishesOutsideTheBall) {
    const RefractiveMedium m(1.0, {disk(Vec3(0.5, 0.0, 0.0), 0.5, 0.05), gaussian(Vec3(-0.4, 0.0, 0.0), 0.15, 0.04, 0.6)});
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int i = 0; i < 2000; ++i) {
        Vec3 x(g(rng), g(rng), g(rng));
        x = x.normalized() * (1.0 + 0.5 * std::abs(g(rng)));
        EXPECT_EQ(m.beta(x), 0.0);
    }
}

TEST(Medium, RejectsInvalidComponents) {
    EXPECT_THROW(RefractiveMedium(1.0, {gaussian(Vec3::Zero(), 0.1, -0.01, 0.3)}), PreconditionError);
    EXPECT_THROW(RefractiveMedium(1.0, {disk(Vec3(0.8, 0.0, 0.0), 0.3, 0.01)}), PreconditionError);
    EXPECT_THROW(RefractiveMedium(1.0, {gaussian(Vec3(0.5, 0.0, 0.0), 0.2, 0.01)}), PreconditionError);
    EXPECT_NO_THROW(RefractiveMedium(1.0, {gaussian(Vec3::Zero(), 0.1, 0.01)}));
}

TEST(Curvature, HomogeneousMediumIsFlat) {
    const RefractiveMedium m(1.0, {});
    const CurvatureReport r = curvature_check(m, {});
    EXPECT_TRUE(r.satisfied);
    EXPECT_EQ(r.worst_eigenvalue, 0.0);
}

TEST(Curvature, QuadraticLogIndex) {
    const CurvatureReport r = curvature_check(QuadraticLogIndex(), {});
    EXPECT_TRUE(r.satisfied);
    EXPECT_NEAR(r.worst_eigenvalue, 2.0, 1e-12);
}

TEST(Curvature, StrongGaussianViolatesCondition) {
    const RefractiveMedium m(1.0, {gaussian(Vec3(0.1, -0.05, 0.0), 0.2, 0.5, 0.8)});
    CurvatureGrid grid;
    grid.points_per_axis = 21;
    const CurvatureReport r = curvature_check(m, grid);
    EXPECT_FALSE(r.satisfied);

    // Brute-force scan on a fine grid around the worst region.
    double brute = 1e300;
    const int k = 201;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const Vec3 x(0.1 - 0.02 + 0.04 * i / (k - 1), -0.05 - 0.02 + 0.04 * j / (k - 1), 0.0);
            Eigen::SelfAdjointEigenSolver<Mat3> es(m.hessian_log_n(x), Eigen::EigenvaluesOnly);
            brute = std::min(brute, es.eigenvalues()(0));
        }
    EXPECT_NEAR(r.worst_eigenvalue, brute, 1e-6);
    EXPECT_NEAR(r.worst_eigenvalue, -0.5 / (0.04 * 1.5), 1e-9);
}

TEST(Smallness, BudgetCheck) {
    const RefractiveMedium weak = default_two_bump_phantom();
    EXPECT_TRUE(check_smallness(weak).within_budget);
    EXPECT_NEAR(check_smallness(weak).max_beta, 0.03, 2e-3);
    const RefractiveMedium strong = weak.scaled(4.0);
    EXPECT_FALSE(check_smallness(strong).within_budget);
}

TEST(PhantomFile, RoundTrip) {
    const RefractiveMedium m = default_two_bump_phantom();
    const RefractiveMedium back = phantom_from_json_text(phantom_to_json_text(m));
    ASSERT_EQ(back.components().size(), m.components().size());
    for (size_t i = 0; i < m.components().size(); ++i) {
        EXPECT_EQ(back.components()[i].center, m.components()[i].center);
        EXPECT_EQ(back.components()[i].amplitude, m.components()[i].amplitude);
        EXPECT_EQ(back.components()[i].cutoff, m.components()[i].cutoff);
    }
}

TEST(PhantomFile, MalformedInputIsAConfigError) {
    EXPECT_THROW(phantom_from_json_text("{"), ConfigError);
    EXPECT_THROW(phantom_from_json_text(R"({"radius":1,"components":[{"shape":"cube"}]})"), ConfigError);
    EXPECT_THROW(
        phantom_from_json_text(
            R"({"radius":1,"components":[{"shape":"smooth_disk","center":[0.9,0,0],"scale":0.5,"amplitude":0.1}]})"),
        ConfigError);
    EXPECT_THROW(load_phantom("/nonexistent/phantom.json"), ConfigError);
}
