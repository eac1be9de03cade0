#pragma once

#include <complex>
#include <string>
#include <vector>

#include "phaseless/cormack_kernels.hpp"
#include "phaseless/radon.hpp"
#include "phaseless/sinogram.hpp"

namespace phaseless {

// Cell-centred radial grid omega_k = (k + 1/2) h, h = B_a / m.
struct RadialGrid {
    double B_a = 0.0;
    std::vector<double> nodes;

    static RadialGrid uniform(double B_a, size_t m);
    size_t size() const { return nodes.size(); }
    double step() const { return B_a / static_cast<double>(nodes.size()); }
};

// A(h)(omega) = (1/pi) int_omega^{B_a} h(rho) rho drho / sqrt(rho^2 - omega^2) for the piecewise-linear
// interpolant of h (linear extension over [0, omega_0] and [omega_{m-1}, B_a]); weights are exact.
double abel_apply(const std::vector<double>& h, const RadialGrid& grid, double omega);

enum class RhsMethod { analytic, richardson };

RhsMethod rhs_method_from_string(const std::string& s);
const char* to_string(RhsMethod m);

// -(1/omega) d/domega A(psi_n)(omega) at the grid nodes.
// analytic: psi_n' from local degree-7 interpolation (parity extension psi_n(-rho) = (-1)^n psi_n(rho),
// psi_n(B_a) = 0), then int psi_n'(rho) / sqrt(rho^2 - omega^2) drho with rho = sqrt(omega^2 + v^2).
// richardson: centred differences of abel_apply with one Richardson step.
template <class T>
std::vector<T> abel_rhs(const std::vector<T>& psi_n, const RadialGrid& grid, int n,
                        RhsMethod method = RhsMethod::analytic);

enum class VolterraMethod { picard, nystrom };

VolterraMethod volterra_method_from_string(const std::string& s);
const char* to_string(VolterraMethod m);

struct VolterraOptions {
    VolterraMethod method = VolterraMethod::nystrom;
    double tolerance = 1e-10;   // picard: sup-norm update relative to sup |beta|
    int max_iterations = 200;
    int order = 5;              // local interpolation degree of the Nystrom rule
    int gauss_points = 8;       // per cell
    double regularity = 1e-6;   // power-law closure below B_a * regularity^(1/|n|); 0 disables
    int divergence_window = 5;  // picard: consecutive growing updates that abort; 0 disables
};

struct VolterraResult {
    std::vector<std::complex<double>> beta;
    std::vector<double> trace;  // picard sup-norm updates
    int iterations = 0;
    double residual = 0.0;      // sup-norm of the discrete equation residual
    size_t closure_nodes = 0;
};

// Discretized operator (K beta)(omega_i) = int_{omega_i}^{B_a} r T_n(r, omega_i) beta(r) dr, upper triangular.
struct VolterraOperator {
    int n = 0;
    size_t m = 0;
    std::vector<double> W;  // row-major m x m

    static VolterraOperator build(int n, const RadialGrid& grid, const VolterraOptions& options = {});
};

// beta_n(omega) - int_omega^{B_a} r T_n(r, omega) beta_n(r) dr = rhs(omega).
VolterraResult volterra_solve(const VolterraOperator& op, const RadialGrid& grid,
                              const std::vector<std::complex<double>>& rhs, const VolterraOptions& options = {});
VolterraResult volterra_solve(int n, const RadialGrid& grid, const std::vector<double>& rhs,
                              const VolterraOptions& options = {});

// psi on a (rho, alpha) grid, alpha the polar angle of the chord midpoint; rho-major.
struct PolarSinogram {
    Slice slice;
    RadialGrid grid;
    std::vector<double> alphas;  // uniform over (0, 2 pi]
    std::vector<double> psi;

    double at(size_t k, size_t i) const { return psi[k * alphas.size() + i]; }
};

// Resamples an (alpha, d) sinogram. Defaults keep the offset spacing (n_rho = n_offset / 2) and use
// 2 n_alpha (half range) or n_alpha (full range) angles; on those defaults no interpolation is needed.
PolarSinogram to_polar(const Sinogram& sinogram, size_t n_rho = 0, size_t n_angle = 0);

struct Harmonics {
    RadialGrid grid;
    std::vector<std::vector<std::complex<double>>> psi_n;  // n = 0..n_max
    double tail_fraction = 0.0;                            // energy beyond n_max / total
    bool tail_warning = false;                             // tail above 5 %
    double noise_floor = 0.0;                              // rms |psi_n| over the upper half of the resolvable band

    int n_max() const { return static_cast<int>(psi_n.size()) - 1; }
};

Harmonics harmonics(const PolarSinogram& polar, int n_max);

struct CormackOptions {
    int n_max = 32;
    double tail_tolerance = 1e-6;  // harmonics beyond the point where the remaining energy drops below this are dropped
    RhsMethod rhs = RhsMethod::analytic;
    VolterraOptions volterra;  // volterra.regularity is the floor of the per-harmonic closure level
    // Per-harmonic closure level noise_floor / (closure_target max |psi_n|): bounds the inward error
    // amplification so the data error reaches at most closure_target of the harmonic. 0 disables.
    double closure_target = 0.2;
    int threads = 1;
};

struct PolarField {
    Slice slice;
    RadialGrid grid;
    std::vector<std::vector<std::complex<double>>> beta_n;  // n = 0..n_used
    std::vector<int> iterations;
    std::vector<double> closure_radius;  // per harmonic; below it beta_n follows the regular power law
    double noise_floor = 0.0;
    double tail_fraction = 0.0;
    bool tail_warning = false;

    int n_used() const { return static_cast<int>(beta_n.size()) - 1; }
    std::complex<double> harmonic(int n, double r) const;
    double value(double r, double phi) const;
};

PolarField cormack_reconstruct(const PolarSinogram& polar, const CormackOptions& options = {});

CartesianField to_cartesian(const PolarField& field, size_t n);

// CSV with header n,r,re,im.
void write_polar_field(const std::string& path, const PolarField& field);

}  // namespace phaseless
