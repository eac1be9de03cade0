#pragma once

#include <array>
#include <limits>
#include <vector>

#include "phaseless/common.hpp"
#include "phaseless/geometry.hpp"
#include "phaseless/medium.hpp"

namespace phaseless {

struct RayState {
    Vec3 position = Vec3::Zero();
    Vec3 slowness = Vec3::Zero();
    double tau = 0.0;
};

// Derivatives of position and slowness with respect to the launch offsets (eta1, eta2).
struct ParaxialState {
    std::array<Vec3, 2> dxi;
    std::array<Vec3, 2> dp;
};

struct StepControl {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    double initial_step = 1e-3;
    double min_step = 1e-12;
    double max_step = 0.05;        // relative to B
    double tau_cap = 10.0;         // relative to B
    double sample_spacing = 0.0;   // > 0: record samples at uniform tau spacing (relative to B)
};

struct Frame {
    Vec3 e1;
    Vec3 e2;
};

// Orthonormal (e1, e2) completing nu to a right-handed basis; Gram-Schmidt against the
// coordinate axis least aligned with nu.
Frame transverse_frame(const Direction& nu);

struct RayPath {
    std::vector<RayState> samples;
    std::vector<ParaxialState> paraxial;
    // Transverse spreading determinant t.(dxi_1 x dxi_2) per sample, t = p/|p|.
    std::vector<double> jacobian_trace;
    Vec3 launch = Vec3::Zero();
    Direction nu;
    Frame frame;
    double eta1 = 0.0;
    double eta2 = 0.0;
    double B = 1.0;
    double n_launch = 1.0;
    double n_end = 1.0;
    bool caustic = false;
    bool hit_tau_cap = false;
    size_t steps = 0;

    const RayState& end() const { return samples.back(); }
};

// Traces from xi0 = -B nu + eta1 e1 + eta2 e2 until xi.nu reaches stop_depth
// (default +B) or tau exceeds the cap.
RayPath trace_ray(const IndexModel& medium, double B, const Direction& nu, double eta1, double eta2,
                  const StepControl& control = {},
                  double stop_depth = std::numeric_limits<double>::quiet_NaN());
RayPath trace_ray(const RefractiveMedium& medium, const Direction& nu, double eta1, double eta2,
                  const StepControl& control = {});

struct ShootingControl {
    StepControl step;
    double tolerance = 1e-11;      // position residual, relative to B
    double accept_residual = 1e-8; // residual accepted after the iteration budget, relative to B
    int max_iterations = 30;
    bool check_uniqueness = false;
    double uniqueness_spread = 0.2;  // seed offsets for the uniqueness probe, relative to B
};

struct TravelTime {
    double tau = 0.0;
    RayPath ray;
    int iterations = 0;
    double residual = 0.0;
};

// tau(x, nu): travel time from the plane xi.nu = -B to x along the ray through x.
TravelTime travel_time_to_point(const IndexModel& medium, double B, const Direction& nu, const Vec3& x,
                                const ShootingControl& control = {});
TravelTime travel_time_to_point(const RefractiveMedium& medium, const Direction& nu, const Vec3& x,
                                const ShootingControl& control = {});

// A = sqrt(n0 J0 / (n J)) from the spreading determinant at the last sample.
double amplitude_at(const RayPath& ray);

// A = exp(-1/2 int n^-2 Laplacian(phi) dtau) with the Laplacian assembled from the paraxial variables.
double amplitude_by_quadrature(const IndexModel& medium, const RayPath& ray);

}  // namespace phaseless
