#include "phaseless/geometry.hpp"

#include <cmath>

namespace phaseless {

namespace {

constexpr double kOnSphereTol = 1e-9;

}  // namespace

Slice Slice::make(double a, double B) {
    if (!(B > 0.0)) throw PreconditionError("Slice: B must be positive");
    if (!(std::abs(a) < B)) throw PreconditionError("Slice: |a| must be smaller than B");
    return Slice{a, B, std::sqrt(B * B - a * a)};
}

Direction::Direction(const Vec3& v) : v_(v) {
    const double len = v.norm();
    if (!(len > 0.0) || !std::isfinite(len)) throw PreconditionError("Direction: zero or non-finite vector");
    if (std::abs(len - 1.0) > 1e-12) v_ /= len;
}

Direction Direction::from_normal_angle(double alpha) {
    return Direction(Vec3(std::sin(alpha), -std::cos(alpha), 0.0));
}

Direction Direction::in_slice(double angle) {
    return Direction(Vec3(std::cos(angle), std::sin(angle), 0.0));
}

bool Direction::in_slice_plane() const noexcept { return std::abs(v_.z()) <= 1e-12; }

Vec2 normal_vector(double alpha) { return Vec2(std::cos(alpha), std::sin(alpha)); }

double wrap_angle(double alpha) {
    double r = std::fmod(alpha, kTwoPi);
    if (r <= 0.0) r += kTwoPi;
    return r;
}

Vec3 exit_point(const Vec3& x, const Direction& nu) {
    const double s = x.dot(nu.vec());
    if (!(s > 0.0)) throw PreconditionError("exit_point: x.nu must be positive");
    return x - 2.0 * s * nu.vec();
}

ChordGeometry chord_from_boundary(const Slice& slice, const Vec3& x, const Direction& nu) {
    if (!nu.in_slice_plane()) throw PreconditionError("chord_from_boundary: direction leaves the slice plane");
    if (std::abs(x.z() - slice.a) > kOnSphereTol * slice.B)
        throw PreconditionError("chord_from_boundary: x is not in the slice plane");
    if (std::abs(x.norm() - slice.B) > kOnSphereTol * slice.B)
        throw PreconditionError("chord_from_boundary: x is not on the sphere");

    ChordGeometry c;
    c.slice = slice;
    c.x = x;
    c.nu = nu;
    c.y = exit_point(x, nu);

    const Vec2 m(-nu.vec().y(), nu.vec().x());
    c.alpha = wrap_angle(std::atan2(m.y(), m.x()));
    c.d = x.x() * m.x() + x.y() * m.y();
    c.rho = std::abs(c.d);
    c.midpoint_angle = c.d >= 0.0 ? c.alpha : wrap_angle(c.alpha + kPi);
    return c;
}

ChordGeometry boundary_from_chord(const Slice& slice, double alpha, double d) {
    if (!(std::abs(d) < slice.B_a)) throw PreconditionError("boundary_from_chord: |d| must be smaller than B_a");
    const Direction nu = Direction::from_normal_angle(alpha);
    const Vec2 m = normal_vector(alpha);
    const double half = std::sqrt(slice.B_a * slice.B_a - d * d);

    ChordGeometry c;
    c.slice = slice;
    c.nu = nu;
    c.x = Vec3(d * m.x() + half * nu.vec().x(), d * m.y() + half * nu.vec().y(), slice.a);
    c.y = Vec3(d * m.x() - half * nu.vec().x(), d * m.y() - half * nu.vec().y(), slice.a);
    c.alpha = wrap_angle(alpha);
    c.d = d;
    c.rho = std::abs(d);
    c.midpoint_angle = d >= 0.0 ? c.alpha : wrap_angle(c.alpha + kPi);
    return c;
}

std::pair<double, double> canonical_nonnegative(double alpha, double d) {
    if (d >= 0.0) return {wrap_angle(alpha), d};
    return {wrap_angle(alpha + kPi), -d};
}

std::pair<double, double> canonical_half_range(double alpha, double d) {
    const double w = wrap_angle(alpha);
    if (w <= kPi) return {w, d};
    return {w - kPi, -d};
}

ChordGrid ChordGrid::uniform(const Slice& slice, int n_alpha, int n_offset, double span) {
    if (n_alpha < 1 || n_offset < 1) throw PreconditionError("ChordGrid: grid sizes must be positive");
    ChordGrid g;
    g.alphas.resize(n_alpha);
    g.offsets.resize(n_offset);
    for (int i = 0; i < n_alpha; ++i) g.alphas[i] = span * (i + 1) / n_alpha;
    const double h = 2.0 * slice.B_a / n_offset;
    for (int j = 0; j < n_offset; ++j) g.offsets[j] = -slice.B_a + (j + 0.5) * h;
    return g;
}

std::vector<ChordGeometry> grid_chords(const Slice& slice, const ChordGrid& grid) {
    std::vector<ChordGeometry> out;
    out.reserve(grid.size());
    for (double a : grid.alphas)
        for (double d : grid.offsets) out.push_back(boundary_from_chord(slice, a, d));
    return out;
}

}  // namespace phaseless
