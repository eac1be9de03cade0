#pragma once

#include <string>
#include <vector>

#include "phaseless/forward.hpp"
#include "phaseless/sinogram.hpp"

namespace phaseless {

enum class PhaseMode { first_two, refine };

PhaseMode phase_mode_from_string(const std::string& s);
const char* to_string(PhaseMode m);

struct PeakControl {
    double peak_rel_tol = 1e-3;
    double flatness_tol = 1e-9;
    PhaseMode mode = PhaseMode::first_two;
    double k1 = 0.0;         // samples below k1 are ignored
    int fit_half_width = 0;  // > 0 forces a least-squares fit over 2w+1 samples
    double noise_band = 10.0; // qualification band in units of the estimated noise level
};

struct RetrievedRay {
    ChordGeometry chord;
    RayStatus status = RayStatus::failed;
    double A_hat = 1.0;
    double phi1_hat = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    double residual = 0.0;
    double peak_value = 0.0;
    std::vector<double> peaks;
    bool amplitude_ambiguous = false;
    std::string failure;
};

// max - min < flatness_tol (1 + max).
bool detect_unscattered(const std::vector<double>& f, double flatness_tol);

// Relative noise level from the median absolute sixth difference.
double estimate_relative_noise(const std::vector<double>& f);

RetrievedRay recover(const IntensitySeries& series, const PeakControl& control = {});

// detect_unscattered followed by recover.
RetrievedRay retrieve(const IntensitySeries& series, const PeakControl& control = {});

struct SinogramOptions {
    double max_failed_fraction = 0.1;
};

// rays must follow the alpha-major order of grid.
Sinogram build_sinogram(const std::vector<RetrievedRay>& rays, const Slice& slice, const ChordGrid& grid,
                        const SinogramOptions& options = {});

}  // namespace phaseless
