#pragma once

#include <limits>
#include <string>
#include <vector>

#include "phaseless/common.hpp"
#include "phaseless/geometry.hpp"

namespace phaseless {

// Anything that provides a refractive index with two derivatives of ln n.
class IndexModel {
public:
    virtual ~IndexModel() = default;
    virtual double n(const Vec3& x) const = 0;
    virtual Vec3 grad_log_n(const Vec3& x) const = 0;
    virtual Mat3 hessian_log_n(const Vec3& x) const = 0;
    // n, grad ln n and Hessian of ln n in one call.
    virtual void evaluate(const Vec3& x, double& n_out, Vec3& grad_out, Mat3& hess_out) const;
};

enum class Shape { gaussian_bump, smooth_disk };

const char* to_string(Shape s);
Shape shape_from_string(const std::string& s);

struct PhantomComponent {
    Shape shape = Shape::gaussian_bump;
    Vec3 center = Vec3::Zero();
    double scale = 0.1;      // sigma for gaussian_bump, radius R for smooth_disk
    double amplitude = 0.0;
    double cutoff = 0.0;     // gaussian_bump only: effective support radius, 0 = uncut

    // Radius beyond which the component vanishes identically (infinity for an uncut Gaussian).
    double support_radius() const;
    // Width of the C-infinity taper ending at the cutoff radius.
    double taper_width() const;
};

class RefractiveMedium : public IndexModel {
public:
    RefractiveMedium() = default;
    RefractiveMedium(double B, std::vector<PhantomComponent> components);

    double B() const noexcept { return B_; }
    const std::vector<PhantomComponent>& components() const noexcept { return components_; }
    bool trivial() const noexcept { return components_.empty(); }

    double beta(const Vec3& x) const;
    Vec3 grad_beta(const Vec3& x) const;
    Mat3 hessian_beta(const Vec3& x) const;

    double n(const Vec3& x) const override { return 1.0 + beta(x); }
    Vec3 grad_log_n(const Vec3& x) const override;
    Mat3 hessian_log_n(const Vec3& x) const override;
    void evaluate(const Vec3& x, double& n_out, Vec3& grad_out, Mat3& hess_out) const override;

    // Radius of the smallest origin-centred ball containing every component support.
    double support_radius() const;

    RefractiveMedium scaled(double factor) const;

private:
    double B_ = 1.0;
    std::vector<PhantomComponent> components_;
};

struct ChordIntegral {
    double value = 0.0;
    bool used_quadrature = false;
};

// Integral of beta along the segment [p, q].
ChordIntegral segment_integral(const RefractiveMedium& medium, const Vec3& p, const Vec3& q);
ChordIntegral exact_chord_integral(const RefractiveMedium& medium, const ChordGeometry& chord);

struct CurvatureGrid {
    int points_per_axis = 41;
    double radius = 1.0;
    double tolerance = 1e-12;
    bool refine = true;
};

struct CurvatureReport {
    bool satisfied = true;
    Vec3 worst_point = Vec3::Zero();
    double worst_eigenvalue = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
};

// Minimum eigenvalue of the Hessian of ln n over the ball of the given radius.
CurvatureReport curvature_check(const IndexModel& model, const CurvatureGrid& grid);

struct SmallnessReport {
    double max_beta = 0.0;
    double budget = 0.05;
    bool within_budget = true;
};

SmallnessReport check_smallness(const RefractiveMedium& medium, double budget = 0.05);

// The built-in two-bump phantom in the unit ball.
RefractiveMedium default_two_bump_phantom();

RefractiveMedium load_phantom(const std::string& path);
RefractiveMedium phantom_from_json_text(const std::string& text);
std::string phantom_to_json_text(const RefractiveMedium& medium);

}  // namespace phaseless
