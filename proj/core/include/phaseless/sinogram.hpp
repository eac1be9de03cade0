#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseless/geometry.hpp"

namespace phaseless {

enum class RayStatus : std::uint8_t { unscattered, recovered, failed };

const char* to_string(RayStatus s);
RayStatus ray_status_from_string(const std::string& s);

// Travel-time perturbations on a uniform (alpha, d) grid, alpha-major.
struct Sinogram {
    Slice slice;
    std::vector<double> alphas;
    std::vector<double> offsets;
    std::vector<double> psi;
    std::vector<std::uint8_t> fill_mask;  // 1 where psi was interpolated
    std::vector<RayStatus> status;

    Sinogram() = default;
    Sinogram(const Slice& s, const ChordGrid& grid);

    size_t n_alpha() const { return alphas.size(); }
    size_t n_offset() const { return offsets.size(); }
    double& at(size_t i, size_t j) { return psi[i * offsets.size() + j]; }
    double at(size_t i, size_t j) const { return psi[i * offsets.size() + j]; }
    ChordGrid grid() const { return {alphas, offsets}; }
    double alpha_step() const;
    double offset_step() const;
};

// CSV with header slice_a,alpha,d,psi,status.
void write_sinogram(const std::string& path, const Sinogram& s);
Sinogram read_sinogram(const std::string& path, double B);

}  // namespace phaseless
