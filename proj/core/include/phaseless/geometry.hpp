#pragma once

#include <utility>
#include <vector>

#include "phaseless/common.hpp"

namespace phaseless {

// Horizontal cross-section x3 = a of the ball |x| <= B.
struct Slice {
    double a = 0.0;
    double B = 1.0;
    double B_a = 1.0;

    static Slice make(double a, double B);
};

// Unit direction. In-slice directions have v.z() == 0.
class Direction {
public:
    Direction() : v_(1.0, 0.0, 0.0) {}
    explicit Direction(const Vec3& v);

    // nu = (sin alpha, -cos alpha, 0), so that m(alpha) = rot(nu, +pi/2).
    static Direction from_normal_angle(double alpha);
    static Direction in_slice(double angle);  // (cos angle, sin angle, 0)

    const Vec3& vec() const noexcept { return v_; }
    bool in_slice_plane() const noexcept;

private:
    Vec3 v_;
};

// m(alpha) = (cos alpha, sin alpha).
Vec2 normal_vector(double alpha);

// Wraps an angle into (0, 2pi].
double wrap_angle(double alpha);

struct ChordGeometry {
    Slice slice;
    Vec3 x;          // measurement point, x.nu > 0
    Vec3 y;          // second intersection, y = x - 2 (x.nu) nu
    Direction nu;
    double alpha = 0.0;  // in (0, 2pi], m(alpha) = rot(nu, +pi/2)
    double d = 0.0;      // signed offset z.m(alpha) for z on the chord
    double rho = 0.0;    // |d|
    double midpoint_angle = 0.0;  // polar angle of the midpoint, in (0, 2pi]

    double length() const { return (x - y).norm(); }
    Vec3 midpoint() const { return 0.5 * (x + y); }
};

// y = x - 2 (x.nu) nu. Throws PreconditionError if x.nu <= 0.
Vec3 exit_point(const Vec3& x, const Direction& nu);

ChordGeometry chord_from_boundary(const Slice& slice, const Vec3& x, const Direction& nu);

// Inverse map: x = d m + sqrt(B_a^2 - d^2) nu, y = d m - sqrt(B_a^2 - d^2) nu.
ChordGeometry boundary_from_chord(const Slice& slice, double alpha, double d);

// (alpha, d) and (alpha + pi, -d) label the same line. Returns the label with d >= 0.
std::pair<double, double> canonical_nonnegative(double alpha, double d);

// Returns the label with alpha in (0, pi].
std::pair<double, double> canonical_half_range(double alpha, double d);

// Uniform (alpha, d) grid: alpha_i = (i + 1) span / n_alpha, d_j = -B_a + (j + 1/2) 2 B_a / n_offset.
struct ChordGrid {
    std::vector<double> alphas;
    std::vector<double> offsets;

    static ChordGrid uniform(const Slice& slice, int n_alpha, int n_offset, double span = kPi);
    size_t size() const { return alphas.size() * offsets.size(); }
    size_t index(size_t i_alpha, size_t j_offset) const { return i_alpha * offsets.size() + j_offset; }
};

// All chords of the grid, alpha-major.
std::vector<ChordGeometry> grid_chords(const Slice& slice, const ChordGrid& grid);

}  // namespace phaseless
