#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phaseless/medium.hpp"
#include "phaseless/sinogram.hpp"

namespace phaseless {

// Square pixel grid over [-B_a, B_a]^2 in slice-plane coordinates, row-major in y.
// Pixels whose centre lies outside the disk of radius B_a are masked and hold 0.
struct CartesianField {
    Slice slice;
    size_t nx = 0;
    size_t ny = 0;
    double pixel = 0.0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;  // 1 inside the disk

    static CartesianField make(const Slice& slice, size_t n);

    double x(size_t ix) const { return -slice.B_a + (static_cast<double>(ix) + 0.5) * pixel; }
    double y(size_t iy) const { return -slice.B_a + (static_cast<double>(iy) + 0.5) * pixel; }
    double& at(size_t ix, size_t iy) { return values[iy * nx + ix]; }
    double at(size_t ix, size_t iy) const { return values[iy * nx + ix]; }
    // Bilinear interpolation between pixel centres; zero beyond the grid.
    double interpolate(double px, double py) const;
    bool same_grid(const CartesianField& other) const;
};

CartesianField sample_field(const Slice& slice, size_t n, const std::function<double(double, double)>& fn);

// beta on the slice plane z = a.
CartesianField sample_medium(const RefractiveMedium& medium, const Slice& slice, size_t n);

// Line integrals of the bilinear interpolant along every chord of the grid.
Sinogram radon_forward(const CartesianField& field, const ChordGrid& grid);

// Unfiltered backprojection R* s(z) = sum_i s(alpha_i, z . m(alpha_i)) dalpha.
CartesianField backproject(const Sinogram& sinogram, size_t n, int threads = 1);

enum class Apodization { none, cosine, hann };

Apodization apodization_from_string(const std::string& s);
const char* to_string(Apodization a);

struct FilterSpec {
    Apodization window = Apodization::hann;
    double cutoff = 0.9;  // fraction of the Nyquist frequency
};

// Filtered backprojection. Angular coverage must be pi or 2 pi on a uniform grid.
// n = 0 uses one pixel per offset sample.
CartesianField radon_invert(const Sinogram& sinogram, const FilterSpec& filter = {}, size_t n = 0, int threads = 1);

// CSV with header x,y,value,mask.
void write_field_csv(const std::string& path, const CartesianField& field);
CartesianField read_field_csv(const std::string& path, const Slice& slice);

// 16-bit binary PGM, linear in [min, max] over the disk; top row is the largest y.
void write_pgm(const std::string& path, const CartesianField& field);

}  // namespace phaseless
