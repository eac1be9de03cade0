#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseless/geometry.hpp"
#include "phaseless/medium.hpp"
#include "phaseless/raytrace.hpp"

namespace phaseless {

// Uniform wavenumber grid k_i = k0 + i dk.
struct KGrid {
    double k0 = 0.0;
    double dk = 0.0;
    size_t count = 0;

    std::vector<double> values() const;
    double window() const { return dk * static_cast<double>(count - 1); }
};

struct KGridSpec {
    double k0 = 0.0;                  // 0: 50 * 2 pi / (2 B)
    double phi_min = 0.01;            // smallest travel-time perturbation to resolve, relative to B
    double phi_max = 0.5;             // largest expected perturbation, relative to B
    double samples_per_period = 256;  // at phi_max
    double periods = 2.5;             // oscillation periods of phi_min inside the window
};

KGrid make_k_grid(double B, const KGridSpec& spec = {});

struct SynthOptions {
    double contamination = 0.0;  // c in c k^-1 cos(k phi1 + chi)
    double noise = 0.0;          // relative i.i.d. Gaussian noise level
    std::uint64_t seed = 0;
};

struct SeriesTruth {
    double A = 1.0;
    double phi1 = 0.0;
};

struct IntensitySeries {
    ChordGeometry chord;
    std::vector<double> k;
    std::vector<double> f;
    std::optional<SeriesTruth> truth;
    size_t clamped = 0;
};

// f_i = A^2 + 1 - 2 A cos(k_i phi1), plus optional contamination and noise.
// `stream` selects an independent random stream (typically the chord index).
IntensitySeries synth_series(double A, double phi1, const ChordGeometry& chord, const std::vector<double>& k,
                             const SynthOptions& options = {}, std::uint64_t stream = 0);

enum class Fidelity { linearized, ray };
enum class AmplitudeModel { ray_traced, unit };

Fidelity fidelity_from_string(const std::string& s);
AmplitudeModel amplitude_model_from_string(const std::string& s);
const char* to_string(Fidelity f);
const char* to_string(AmplitudeModel m);

struct SimulationOptions {
    Fidelity fidelity = Fidelity::linearized;
    AmplitudeModel amplitude = AmplitudeModel::ray_traced;
    SynthOptions synth;
    ShootingControl shooting;
    int threads = 1;
};

// True amplitude and travel-time perturbation for one chord.
SeriesTruth chord_truth(const RefractiveMedium& medium, const ChordGeometry& chord, const SimulationOptions& options);

std::vector<IntensitySeries> simulate_slice(const RefractiveMedium& medium, const std::vector<ChordGeometry>& chords,
                                            const std::vector<double>& k, const SimulationOptions& options);

// Measurement CSV with header slice_a,alpha,d,k,f.
void write_measurements(const std::string& path, const std::vector<IntensitySeries>& series);
std::vector<IntensitySeries> read_measurements(const std::string& path, double B);

}  // namespace phaseless
