#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "phaseless/radon.hpp"

using namespace phaseless;

namespace {

const Slice kSlice = Slice::make(0.0, 1.0);

RefractiveMedium smooth_disk(Vec3 centre, double radius = 0.6, double amp = 1.0) {
    PhantomComponent c;
    c.shape = Shape::smooth_disk;
    c.center = centre;
    c.scale = radius;
    c.amplitude = amp;
    return RefractiveMedium(1.0, {c});
}

Sinogram exact_sinogram(const RefractiveMedium& m, const ChordGrid& g) {
    Sinogram s(kSlice, g);
    const auto chords = grid_chords(kSlice, g);
    for (size_t i = 0; i < chords.size(); ++i) s.psi[i] = exact_chord_integral(m, chords[i]).value;
    return s;
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

TEST(Field, MaskAndGrid) {
    const auto f = CartesianField::make(kSlice, 64);
    EXPECT_NEAR(f.pixel, 2.0 / 64, 1e-15);
    EXPECT_EQ(f.mask[0], 0);
    EXPECT_EQ(f.mask[32 * 64 + 32], 1);
    const auto g = sample_field(kSlice, 64, [](double, double) { return 1.0; });
    for (size_t i = 0; i < g.values.size(); ++i) EXPECT_EQ(g.values[i], g.mask[i] ? 1.0 : 0.0);
}

TEST(RadonForward, ZeroFieldGivesZeroSinogram) {
    const auto f = CartesianField::make(kSlice, 32);
    const auto s = radon_forward(f, ChordGrid::uniform(kSlice, 8, 16));
    for (double v : s.psi) EXPECT_EQ(v, 0.0);
}

TEST(RadonForward, CentredDiskChordLengths) {
    const double R = 0.5, c = 1.7;
    const auto f = sample_field(kSlice, 256, [&](double x, double y) { return x * x + y * y < R * R ? c : 0.0; });
    const ChordGrid g = ChordGrid::uniform(kSlice, 12, 200);
    const auto s = radon_forward(f, g);
    for (size_t i = 0; i < g.alphas.size(); ++i)
        for (size_t j = 0; j < g.offsets.size(); ++j) {
            const double d = g.offsets[j];
            // Pixelization smears the rim; chords within two pixels of tangency are excluded.
            if (std::abs(std::abs(d) - R) < 2.0 * f.pixel) continue;
            const double exact = std::abs(d) < R ? 2.0 * c * std::sqrt(R * R - d * d) : 0.0;
            EXPECT_LT(std::abs(s.at(i, j) - exact), 2.0 * f.pixel * c) << "alpha " << g.alphas[i] << " d " << d;
        }
}

TEST(RadonForward, ShiftProperty) {
    const Vec3 x0(0.15, -0.1, 0.0);
    const auto centred = smooth_disk(Vec3::Zero(), 0.5);
    const auto f = sample_medium(smooth_disk(x0, 0.5), kSlice, 256);
    const ChordGrid g = ChordGrid::uniform(kSlice, 10, 64);
    const auto s = radon_forward(f, g);
    double peak = 0.0, worst = 0.0;
    for (size_t i = 0; i < g.alphas.size(); ++i)
        for (size_t j = 0; j < g.offsets.size(); ++j) {
            const double shift = x0.x() * std::cos(g.alphas[i]) + x0.y() * std::sin(g.alphas[i]);
            const double dc = g.offsets[j] - shift;
            const double ref =
                std::abs(dc) < kSlice.B_a ? exact_chord_integral(centred, boundary_from_chord(kSlice, 0.0, dc)).value : 0.0;
            peak = std::max(peak, std::abs(ref));
            worst = std::max(worst, std::abs(s.at(i, j) - ref));
        }
    EXPECT_LT(worst, 1e-3 * peak);
}

TEST(RadonForward, Linearity) {
    const auto a = sample_medium(smooth_disk(Vec3(0.1, 0, 0), 0.4), kSlice, 64);
    const auto b = sample_field(kSlice, 64, [](double x, double y) { return std::sin(3 * x) * y; });
    auto ab = a;
    for (size_t i = 0; i < ab.values.size(); ++i) ab.values[i] = 2.0 * a.values[i] - 0.5 * b.values[i];
    const ChordGrid g = ChordGrid::uniform(kSlice, 9, 33);
    const auto sa = radon_forward(a, g), sb = radon_forward(b, g), sab = radon_forward(ab, g);
    for (size_t i = 0; i < sab.psi.size(); ++i) EXPECT_NEAR(sab.psi[i], 2.0 * sa.psi[i] - 0.5 * sb.psi[i], 1e-12);
}

TEST(RadonInvert, ZeroSinogramGivesZeroField) {
    const Sinogram s(kSlice, ChordGrid::uniform(kSlice, 16, 32));
    const auto f = radon_invert(s);
    for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(RadonInvert, Linearity) {
    const ChordGrid g = ChordGrid::uniform(kSlice, 60, 64);
    const auto s1 = exact_sinogram(smooth_disk(Vec3(0.1, 0.2, 0), 0.4), g);
    auto s2 = s1;
    for (size_t i = 0; i < s2.psi.size(); ++i) s2.psi[i] = std::cos(0.37 * static_cast<double>(i));
    auto s12 = s1;
    for (size_t i = 0; i < s12.psi.size(); ++i) s12.psi[i] = s1.psi[i] + s2.psi[i];
    const auto f1 = radon_invert(s1), f2 = radon_invert(s2), f12 = radon_invert(s12);
    for (size_t i = 0; i < f12.values.size(); ++i) EXPECT_NEAR(f12.values[i], f1.values[i] + f2.values[i], 1e-10);
}

TEST(RadonInvert, RejectsBadCoverage) {
    Sinogram s(kSlice, ChordGrid::uniform(kSlice, 16, 32, 0.8 * kPi));
    EXPECT_THROW(radon_invert(s), PreconditionError);
    Sinogram t(kSlice, ChordGrid::uniform(kSlice, 16, 32));
    t.alphas[3] += 0.01;
    EXPECT_THROW(radon_invert(t), PreconditionError);
}

TEST(RadonInvert, SmoothDiskRoundTripConverges) {
    const auto m = smooth_disk(Vec3(0.1, -0.05, 0.0));
    double prev = 1.0;
    for (int n : {64, 128, 256}) {
        const auto truth = sample_medium(m, kSlice, static_cast<size_t>(n));
        const ChordGrid g = ChordGrid::uniform(kSlice, n * 360 / 256, n);
        const double err = masked_rel_l2(truth, radon_invert(radon_forward(truth, g)));
        EXPECT_LT(err, prev) << n;
        prev = err;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(RadonInvert, FullRangeMatchesHalfRange) {
    const auto m = smooth_disk(Vec3(-0.2, 0.1, 0.0), 0.5);
    const auto half = radon_invert(exact_sinogram(m, ChordGrid::uniform(kSlice, 90, 128)));
    const auto full = radon_invert(exact_sinogram(m, ChordGrid::uniform(kSlice, 180, 128, kTwoPi)));
    EXPECT_LT(masked_rel_l2(half, full), 1e-2);
}

TEST(RadonInvert, DcFidelity) {
    const auto m = smooth_disk(Vec3(0.2, 0.1, 0.0), 0.5, 0.3);
    const ChordGrid g = ChordGrid::uniform(kSlice, 180, 128);
    const Sinogram s = exact_sinogram(m, g);
    const auto f = radon_invert(s);
    double mean = 0.0, count = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i)
        if (f.mask[i]) {
            mean += f.values[i];
            count += 1.0;
        }
    mean /= count;
    double mass = 0.0;
    for (double v : s.psi) mass += v;
    mass *= s.alpha_step() * s.offset_step() / kPi;
    const double area = count * f.pixel * f.pixel;
    EXPECT_NEAR(mean, mass / area, 0.02 * mass / area);
}

TEST(Backproject, AdjointOfForward) {
    const size_t n = 128;
    const auto q = sample_field(kSlice, n, [](double x, double y) { return std::exp(-4 * (x * x + y * y)) * (1 + x); });
    const ChordGrid g = ChordGrid::uniform(kSlice, 90, n);
    Sinogram s(kSlice, g);
    for (size_t i = 0; i < g.alphas.size(); ++i)
        for (size_t j = 0; j < g.offsets.size(); ++j)
            s.at(i, j) = std::cos(g.offsets[j]) * (1.0 + 0.3 * std::sin(g.alphas[i]));
    const auto Rq = radon_forward(q, g);
    double lhs = 0.0;
    for (size_t i = 0; i < s.psi.size(); ++i) lhs += Rq.psi[i] * s.psi[i];
    lhs *= s.alpha_step() * s.offset_step();
    const auto Rs = backproject(s, n);
    double rhs = 0.0;
    for (size_t i = 0; i < q.values.size(); ++i) rhs += q.values[i] * Rs.values[i];
    rhs *= q.pixel * q.pixel;
    EXPECT_NEAR(lhs, rhs, 1e-2 * std::abs(lhs));
}

TEST(FieldIo, CsvRoundTripAndPgm) {
    const auto f = sample_field(kSlice, 16, [](double x, double y) { return x - 2 * y; });
    const auto dir = std::filesystem::temp_directory_path() / "phaseless_field_test";
    write_field_csv((dir / "f.csv").string(), f);
    const auto g = read_field_csv((dir / "f.csv").string(), kSlice);
    EXPECT_EQ(g.values, f.values);
    write_pgm((dir / "f.pgm").string(), f);
    EXPECT_EQ(std::filesystem::file_size(dir / "f.pgm"), std::string("P5\n16 16\n65535\n").size() + 16 * 16 * 2);
    std::filesystem::remove_all(dir);
}
