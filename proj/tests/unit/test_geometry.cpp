#include <cmath>

#include <gtest/gtest.h>

#include "phaseless/geometry.hpp"

using namespace phaseless;

TEST(Slice, DiskRadius) {
    const Slice s = Slice::make(0.6, 1.0);
    EXPECT_DOUBLE_EQ(s.B_a, std::sqrt(1.0 - 0.36));
    EXPECT_THROW(Slice::make(1.0, 1.0), PreconditionError);
    EXPECT_THROW(Slice::make(0.0, -1.0), PreconditionError);
}

TEST(Direction, Normalizes) {
    const Direction d(Vec3(3.0, 4.0, 0.0));
    EXPECT_NEAR(d.vec().norm(), 1.0, 1e-15);
    EXPECT_THROW(Direction(Vec3::Zero()), PreconditionError);
}

TEST(ExitPoint, Diameter) {
    const Vec3 y = exit_point(Vec3(1, 0, 0), Direction(Vec3(1, 0, 0)));
    EXPECT_NEAR((y - Vec3(-1, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(ExitPoint, TangentRejected) {
    EXPECT_THROW(exit_point(Vec3(1, 0, 0), Direction(Vec3(0, 1, 0))), PreconditionError);
}

TEST(ExitPoint, OffAxisChord) {
    const Vec3 x(std::cos(0.3), std::sin(0.3), 0.0);
    const Vec3 y = exit_point(x, Direction(Vec3(1, 0, 0)));
    EXPECT_NEAR(y.x(), -std::cos(0.3), 1e-15);
    EXPECT_NEAR(y.y(), std::sin(0.3), 1e-15);
    EXPECT_NEAR(y.norm(), 1.0, 1e-15);
}

TEST(ChordFromBoundary, CentralChord) {
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = chord_from_boundary(s, Vec3(1, 0, 0), Direction(Vec3(1, 0, 0)));
    EXPECT_NEAR(c.d, 0.0, 1e-15);
    EXPECT_NEAR(c.rho, 0.0, 1e-15);
}

TEST(ChordFromBoundary, MidpointOnPositiveAxis) {
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = chord_from_boundary(s, Vec3(std::sqrt(0.75), 0.5, 0.0), Direction(Vec3(1, 0, 0)));
    EXPECT_NEAR(c.alpha, kPi / 2, 1e-14);
    EXPECT_NEAR(c.d, 0.5, 1e-14);
    EXPECT_NEAR(c.rho, 0.5, 1e-14);
    EXPECT_NEAR((c.midpoint() - Vec3(0, 0.5, 0)).norm(), 0.0, 1e-14);
    EXPECT_NEAR(c.midpoint_angle, kPi / 2, 1e-14);
}

TEST(ChordFromBoundary, RejectsPointsOffTheSlice) {
    const Slice s = Slice::make(0.2, 1.0);
    EXPECT_THROW(chord_from_boundary(s, Vec3(1, 0, 0), Direction(Vec3(1, 0, 0))), PreconditionError);
    EXPECT_THROW(chord_from_boundary(s, Vec3(0.5, 0, 0.2), Direction(Vec3(1, 0, 0))), PreconditionError);
}

TEST(BoundaryFromChord, ZeroAngleDiameter) {
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = boundary_from_chord(s, kTwoPi, 0.0);
    EXPECT_NEAR(std::abs(c.nu.vec().y()), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(c.x.x()), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(c.x.y()), 1.0, 1e-15);
}

TEST(BoundaryFromChord, HorizontalLine) {
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = boundary_from_chord(s, kPi / 2, 0.5);
    EXPECT_NEAR(c.x.y(), 0.5, 1e-15);
    EXPECT_NEAR(c.y.y(), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(c.x.x()), std::sqrt(0.75), 1e-15);
    EXPECT_NEAR(c.x.x(), -c.y.x(), 1e-15);
    EXPECT_GT(c.x.dot(c.nu.vec()), 0.0);
}

TEST(BoundaryFromChord, TangentRejected) {
    const Slice s = Slice::make(0.0, 1.0);
    EXPECT_THROW(boundary_from_chord(s, 1.0, 1.0), PreconditionError);
    EXPECT_THROW(boundary_from_chord(s, 1.0, -1.0), PreconditionError);
}

TEST(GeometryProperties, BijectionOnDenseGrid) {
    const Slice s = Slice::make(0.35, 1.3);
    double worst = 0.0;
    for (int i = 1; i <= 64; ++i) {
        const double alpha = kTwoPi * i / 64.0;
        for (int j = 0; j < 41; ++j) {
            const double d = s.B_a * (-0.99 + 1.98 * j / 40.0);
            const ChordGeometry c = boundary_from_chord(s, alpha, d);
            EXPECT_GT(c.x.dot(c.nu.vec()), 0.0);
            EXPECT_NEAR(c.x.norm(), s.B, 1e-12);
            EXPECT_NEAR(c.y.norm(), s.B, 1e-12);
            EXPECT_NEAR((c.y - exit_point(c.x, c.nu)).norm(), 0.0, 1e-12);

            const ChordGeometry back = chord_from_boundary(s, c.x, c.nu);
            worst = std::max(worst, std::abs(wrap_angle(back.alpha - alpha + kPi) - kPi));
            worst = std::max(worst, std::abs(back.d - d));
            const ChordGeometry again = boundary_from_chord(s, back.alpha, back.d);
            worst = std::max(worst, (again.x - c.x).norm());
            worst = std::max(worst, (again.y - c.y).norm());

            EXPECT_NEAR(c.length(), 2.0 * std::sqrt(s.B_a * s.B_a - d * d), 1e-12);
            EXPECT_DOUBLE_EQ(c.rho, std::abs(c.d));
            EXPECT_NEAR(Vec2(c.midpoint().x(), c.midpoint().y()).norm(), c.rho, 1e-12);
            const Vec2 m = normal_vector(c.alpha);
            for (double t : {0.0, 0.3, 0.7, 1.0}) {
                const Vec3 z = c.y + t * (c.x - c.y);
                EXPECT_NEAR(z.x() * m.x() + z.y() * m.y(), c.d, 1e-12);
            }
        }
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(GeometryProperties, SwappedEndpointsLabelTheSameLine) {
    const Slice s = Slice::make(0.0, 1.0);
    const ChordGeometry c = boundary_from_chord(s, 0.7, 0.4);
    const ChordGeometry r = chord_from_boundary(s, c.y, Direction(-c.nu.vec()));
    EXPECT_NEAR(wrap_angle(r.alpha - c.alpha), kPi, 1e-12);
    EXPECT_NEAR(r.d, -c.d, 1e-12);
    EXPECT_NEAR(r.midpoint_angle, c.midpoint_angle, 1e-12);
    const auto [a1, d1] = canonical_nonnegative(r.alpha, r.d);
    const auto [a2, d2] = canonical_nonnegative(c.alpha, c.d);
    EXPECT_NEAR(a1, a2, 1e-12);
    EXPECT_NEAR(d1, d2, 1e-12);
}

TEST(GeometryProperties, CanonicalHalfRange) {
    const auto [a, d] = canonical_half_range(1.5 * kPi, 0.3);
    EXPECT_NEAR(a, 0.5 * kPi, 1e-15);
    EXPECT_NEAR(d, -0.3, 1e-15);
    EXPECT_DOUBLE_EQ(wrap_angle(0.0), kTwoPi);
    EXPECT_DOUBLE_EQ(wrap_angle(kTwoPi), kTwoPi);
}
