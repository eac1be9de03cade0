#include "phaseless/medium.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace phaseless {

namespace {

// Value and first two derivatives of a radial profile f(r); df_over_r is f'(r)/r.
struct Radial {
    double f = 0.0;
    double df = 0.0;
    double d2f = 0.0;
    double df_over_r = 0.0;
};

// C-infinity step: 0 for t <= 0, 1 for t >= 1, with derivatives in t.
struct Step {
    double s = 0.0;
    double ds = 0.0;
    double d2s = 0.0;
};

Step smooth_step(double t) {
    if (t <= 0.0) return {0.0, 0.0, 0.0};
    if (t >= 1.0) return {1.0, 0.0, 0.0};
    const double h = 1.0 / (1.0 - t) - 1.0 / t;
    const double dh = 1.0 / ((1.0 - t) * (1.0 - t)) + 1.0 / (t * t);
    const double d2h = 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t)) - 2.0 / (t * t * t);
    const double e = std::exp(-std::abs(h));
    const double s = h >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    const double q = e / ((1.0 + e) * (1.0 + e));  // s (1 - s)
    return {s, q * dh, q * (1.0 - 2.0 * s) * dh * dh + q * d2h};
}

Radial gaussian_profile(const PhantomComponent& c, double r) {
    const double sig2 = c.scale * c.scale;
    const double e = c.amplitude * std::exp(-0.5 * r * r / sig2);
    double w = 1.0, dw = 0.0, d2w = 0.0, dw_over_r = 0.0;
    if (c.cutoff > 0.0) {
        if (r >= c.cutoff) return {};
        const double tw = c.taper_width();
        const Step st = smooth_step((c.cutoff - r) / tw);
        w = st.s;
        dw = -st.ds / tw;
        d2w = st.d2s / (tw * tw);
        dw_over_r = r > 0.0 ? dw / r : 0.0;
    }
    const double de = -r / sig2 * e;
    const double d2e = (r * r / (sig2 * sig2) - 1.0 / sig2) * e;
    Radial out;
    out.f = e * w;
    out.df = de * w + e * dw;
    out.d2f = d2e * w + 2.0 * de * dw + e * d2w;
    out.df_over_r = -e * w / sig2 + e * dw_over_r;
    return out;
}

Radial disk_profile(const PhantomComponent& c, double r) {
    const double R2 = c.scale * c.scale;
    const double s = r * r / R2;
    if (s >= 1.0) return {};
    const double u = 1.0 - s;
    const double u2 = u * u;
    Radial out;
    out.f = c.amplitude * u2 * u2;
    out.df_over_r = -8.0 * c.amplitude * u2 * u / R2;
    out.df = out.df_over_r * r;
    out.d2f = out.df_over_r + 48.0 * c.amplitude * r * r * u2 / (R2 * R2);
    return out;
}

Radial profile(const PhantomComponent& c, double r) {
    return c.shape == Shape::gaussian_bump ? gaussian_profile(c, r) : disk_profile(c, r);
}

void accumulate(const PhantomComponent& c, const Vec3& x, double& b, Vec3& g, Mat3& h) {
    const Vec3 dx = x - c.center;
    const double r = dx.norm();
    if (r >= c.support_radius()) return;
    const Radial p = profile(c, r);
    b += p.f;
    h.diagonal().array() += p.df_over_r;
    if (r > 0.0) {
        const Vec3 u = dx / r;
        g += p.df * u;
        h += (p.d2f - p.df_over_r) * (u * u.transpose());
    }
}

// Integral of (L^2 - s^2)^4 over [s1, s2] inside [-L, L].
double quartic_bump_integral(double L, double s1, double s2) {
    s1 = std::max(s1, -L);
    s2 = std::min(s2, L);
    if (s2 <= s1) return 0.0;
    const double L2 = L * L, L4 = L2 * L2, L6 = L4 * L2, L8 = L4 * L4;
    auto F = [&](double s) {
        const double s2_ = s * s, s3 = s2_ * s, s5 = s3 * s2_, s7 = s5 * s2_, s9 = s7 * s2_;
        return L8 * s - 4.0 * L6 * s3 / 3.0 + 6.0 * L4 * s5 / 5.0 - 4.0 * L2 * s7 / 7.0 + s9 / 9.0;
    };
    return F(s2) - F(s1);
}

ChordIntegral component_segment_integral(const PhantomComponent& c, const Vec3& p, const Vec3& q) {
    const Vec3 seg = q - p;
    const double len = seg.norm();
    if (len == 0.0 || c.amplitude == 0.0) return {};
    const Vec3 u = seg / len;
    const double tc = (c.center - p).dot(u);
    const double D2 = ((c.center - p) - tc * u).squaredNorm();
    // Segment parameter relative to the foot of the perpendicular from the centre.
    const double s1 = -tc, s2 = len - tc;

    if (c.shape == Shape::smooth_disk) {
        const double R2 = c.scale * c.scale;
        if (D2 >= R2) return {};
        const double L = std::sqrt(R2 - D2);
        const double R8 = R2 * R2 * R2 * R2;
        return {c.amplitude * quartic_bump_integral(L, s1, s2) / R8, false};
    }

    const double sig = c.scale;
    if (c.cutoff <= 0.0) {
        const double k = sig * std::sqrt(2.0);
        const double v = c.amplitude * std::exp(-0.5 * D2 / (sig * sig)) * sig * std::sqrt(kPi / 2.0) *
                         (std::erf(s2 / k) - std::erf(s1 / k));
        return {v, false};
    }

    const double Rc2 = c.cutoff * c.cutoff;
    if (D2 >= Rc2) return {0.0, true};
    const double L = std::sqrt(Rc2 - D2);
    const double a = std::max(s1, -L), b = std::min(s2, L);
    if (b <= a) return {0.0, true};
    auto f = [&](double s) { return gaussian_profile(c, std::sqrt(D2 + s * s)).f; };
    // Break points: the foot of the perpendicular and the inner edge of the taper.
    std::vector<double> cuts{a, b, 0.0};
    const double inner = c.cutoff - c.taper_width();
    if (D2 < inner * inner) {
        const double li = std::sqrt(inner * inner - D2);
        cuts.push_back(-li);
        cuts.push_back(li);
    }
    std::sort(cuts.begin(), cuts.end());
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double v = 0.0;
    for (size_t i = 1; i < cuts.size(); ++i) {
        const double lo = std::max(a, cuts[i - 1]), hi = std::min(b, cuts[i]);
        if (hi > lo) v += GK::integrate(f, lo, hi, 12, 1e-11);
    }
    return {v, true};
}

}  // namespace

void IndexModel::evaluate(const Vec3& x, double& n_out, Vec3& grad_out, Mat3& hess_out) const {
    n_out = n(x);
    grad_out = grad_log_n(x);
    hess_out = hessian_log_n(x);
}

const char* to_string(Shape s) { return s == Shape::gaussian_bump ? "gaussian_bump" : "smooth_disk"; }

Shape shape_from_string(const std::string& s) {
    if (s == "gaussian_bump") return Shape::gaussian_bump;
    if (s == "smooth_disk") return Shape::smooth_disk;
    throw ConfigError("unknown phantom shape '" + s + "'");
}

double PhantomComponent::support_radius() const {
    if (shape == Shape::smooth_disk) return scale;
    return cutoff > 0.0 ? cutoff : std::numeric_limits<double>::infinity();
}

double PhantomComponent::taper_width() const { return std::min(scale, 0.5 * cutoff); }

RefractiveMedium::RefractiveMedium(double B, std::vector<PhantomComponent> components)
    : B_(B), components_(std::move(components)) {
    if (!(B_ > 0.0)) throw PreconditionError("RefractiveMedium: B must be positive");
    for (const auto& c : components_) {
        if (!(c.amplitude >= 0.0)) throw PreconditionError("RefractiveMedium: amplitudes must be non-negative");
        if (!(c.scale > 0.0)) throw PreconditionError("RefractiveMedium: scale must be positive");
        if (c.cutoff < 0.0) throw PreconditionError("RefractiveMedium: cutoff must be non-negative");
        const double reach = c.center.norm();
        if (c.shape == Shape::gaussian_bump && c.cutoff == 0.0) {
            const double gap = B_ - reach;
            if (gap <= 0.0 || std::exp(-0.5 * gap * gap / (c.scale * c.scale)) > 1e-12)
                throw PreconditionError(
                    "RefractiveMedium: uncut Gaussian exceeds 1e-12 at the ball boundary; declare a cutoff");
        } else if (reach + c.support_radius() > B_ * (1.0 + 1e-12)) {
            throw PreconditionError("RefractiveMedium: component support leaves the ball of radius B");
        }
    }
}

double RefractiveMedium::beta(const Vec3& x) const {
    double b = 0.0;
    for (const auto& c : components_) {
        const double r = (x - c.center).norm();
        if (r < c.support_radius()) b += profile(c, r).f;
    }
    return b;
}

Vec3 RefractiveMedium::grad_beta(const Vec3& x) const {
    double b = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    for (const auto& c : components_) accumulate(c, x, b, g, h);
    return g;
}

Mat3 RefractiveMedium::hessian_beta(const Vec3& x) const {
    double b = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    for (const auto& c : components_) accumulate(c, x, b, g, h);
    return h;
}

Vec3 RefractiveMedium::grad_log_n(const Vec3& x) const {
    double b = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    for (const auto& c : components_) accumulate(c, x, b, g, h);
    return g / (1.0 + b);
}

Mat3 RefractiveMedium::hessian_log_n(const Vec3& x) const {
    double n_ = 0.0;
    Vec3 g;
    Mat3 h;
    evaluate(x, n_, g, h);
    return h;
}

void RefractiveMedium::evaluate(const Vec3& x, double& n_out, Vec3& grad_out, Mat3& hess_out) const {
    double b = 0.0;
    Vec3 g = Vec3::Zero();
    Mat3 h = Mat3::Zero();
    for (const auto& c : components_) accumulate(c, x, b, g, h);
    const double n_ = 1.0 + b;
    n_out = n_;
    grad_out = g / n_;
    hess_out = h / n_ - grad_out * grad_out.transpose();
}

double RefractiveMedium::support_radius() const {
    double r = 0.0;
    for (const auto& c : components_) r = std::max(r, c.center.norm() + c.support_radius());
    return r;
}

RefractiveMedium RefractiveMedium::scaled(double factor) const {
    auto comps = components_;
    for (auto& c : comps) c.amplitude *= factor;
    return RefractiveMedium(B_, std::move(comps));
}

ChordIntegral segment_integral(const RefractiveMedium& medium, const Vec3& p, const Vec3& q) {
    ChordIntegral total;
    for (const auto& c : medium.components()) {
        const ChordIntegral part = component_segment_integral(c, p, q);
        total.value += part.value;
        total.used_quadrature = total.used_quadrature || part.used_quadrature;
    }
    return total;
}

ChordIntegral exact_chord_integral(const RefractiveMedium& medium, const ChordGeometry& chord) {
    return segment_integral(medium, chord.y, chord.x);
}

CurvatureReport curvature_check(const IndexModel& model, const CurvatureGrid& grid) {
    if (grid.points_per_axis < 2) throw PreconditionError("curvature_check: need at least 2 points per axis");
    auto lambda_min = [&](const Vec3& x) {
        Eigen::SelfAdjointEigenSolver<Mat3> es(model.hessian_log_n(x), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    };

    const int m = grid.points_per_axis;
    const double h = 2.0 * grid.radius / (m - 1);
    struct Node {
        double value;
        Vec3 x;
    };
    std::vector<Node> nodes;
    nodes.reserve(static_cast<size_t>(m) * m * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const Vec3 x(-grid.radius + i * h, -grid.radius + j * h, -grid.radius + k * h);
                if (x.norm() > grid.radius * (1.0 + 1e-12)) continue;
                nodes.push_back({lambda_min(x), x});
            }

    std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.value < b.value; });
    Node best = nodes.front();

    if (grid.refine) {
        const size_t seeds = std::min<size_t>(8, nodes.size());
        for (size_t s = 0; s < seeds; ++s) {
            Node cur = nodes[s];
            double step = 0.5 * h;
            while (step > 1e-9 * grid.radius) {
                bool moved = false;
                for (int axis = 0; axis < 3; ++axis)
                    for (double sign : {-1.0, 1.0}) {
                        Vec3 trial = cur.x;
                        trial(axis) += sign * step;
                        if (trial.norm() > grid.radius) continue;
                        const double v = lambda_min(trial);
                        if (v < cur.value) {
                            cur = {v, trial};
                            moved = true;
                        }
                    }
                if (!moved) step *= 0.5;
            }
            if (cur.value < best.value) best = cur;
        }
    }

    CurvatureReport rep;
    rep.worst_point = best.x;
    rep.worst_eigenvalue = best.value;
    rep.tolerance = grid.tolerance;
    rep.satisfied = best.value >= -grid.tolerance;
    return rep;
}

SmallnessReport check_smallness(const RefractiveMedium& medium, double budget) {
    double mx = 0.0;
    for (const auto& c : medium.components()) mx = std::max(mx, medium.beta(c.center));
    const int m = 33;
    const double R = medium.B();
    const double h = 2.0 * R / (m - 1);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const Vec3 x(-R + i * h, -R + j * h, -R + k * h);
                if (x.norm() <= R) mx = std::max(mx, medium.beta(x));
            }
    return {mx, budget, mx <= budget};
}

RefractiveMedium default_two_bump_phantom() {
    PhantomComponent a;
    a.shape = Shape::gaussian_bump;
    a.center = Vec3(0.25, 0.15, 0.0);
    a.scale = 0.15;
    a.amplitude = 0.03;
    a.cutoff = 0.5;
    PhantomComponent b;
    b.shape = Shape::gaussian_bump;
    b.center = Vec3(-0.3, -0.2, 0.05);
    b.scale = 0.12;
    b.amplitude = 0.02;
    b.cutoff = 0.4;
    return RefractiveMedium(1.0, {a, b});
}

}  // namespace phaseless
