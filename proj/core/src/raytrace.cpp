#include "phaseless/raytrace.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace phaseless {

namespace {

namespace odeint = boost::numeric::odeint;

using State = std::array<double, 19>;

enum Slot { kXi = 0, kP = 3, kTau = 6, kDxi1 = 7, kDp1 = 10, kDxi2 = 13, kDp2 = 16 };

Vec3 get3(const State& y, int at) { return Vec3(y[at], y[at + 1], y[at + 2]); }

void put3(State& y, int at, const Vec3& v) {
    y[at] = v.x();
    y[at + 1] = v.y();
    y[at + 2] = v.z();
}

struct RaySystem {
    const IndexModel* medium;

    void operator()(const State& y, State& dy, double /*s*/) const {
        const Vec3 xi = get3(y, kXi);
        const Vec3 p = get3(y, kP);
        double n = 1.0;
        Vec3 g;
        Mat3 H;
        medium->evaluate(xi, n, g, H);
        const double inv_n2 = 1.0 / (n * n);
        put3(dy, kXi, p * inv_n2);
        put3(dy, kP, g);
        dy[kTau] = 1.0;
        for (int a = 0; a < 2; ++a) {
            const int ox = a == 0 ? kDxi1 : kDxi2;
            const int op = a == 0 ? kDp1 : kDp2;
            const Vec3 dxi = get3(y, ox);
            const Vec3 dp = get3(y, op);
            put3(dy, ox, dp * inv_n2 - 2.0 * inv_n2 * g.dot(dxi) * p);
            put3(dy, op, H * dxi);
        }
    }
};

RayState to_ray_state(const State& y) { return {get3(y, kXi), get3(y, kP), y[kTau]}; }

ParaxialState to_paraxial(const State& y) {
    ParaxialState ps;
    ps.dxi = {get3(y, kDxi1), get3(y, kDxi2)};
    ps.dp = {get3(y, kDp1), get3(y, kDp2)};
    return ps;
}

double spreading(const State& y) {
    const Vec3 p = get3(y, kP);
    const double pn = p.norm();
    if (pn == 0.0) return 0.0;
    return (p / pn).dot(get3(y, kDxi1).cross(get3(y, kDxi2)));
}

// d/ds of the spreading determinant along the ray.
double spreading_rate(const IndexModel& medium, const State& y) {
    State dy{};
    RaySystem{&medium}(y, dy, 0.0);
    const Vec3 p = get3(y, kP);
    const double pn = p.norm();
    const Vec3 t = p / pn;
    const Vec3 dt = (get3(dy, kP) - t * t.dot(get3(dy, kP))) / pn;
    const Vec3 a = get3(y, kDxi1), b = get3(y, kDxi2);
    return dt.dot(a.cross(b)) + t.dot(get3(dy, kDxi1).cross(b) + a.cross(get3(dy, kDxi2)));
}

void record(RayPath& path, std::vector<double>& rates, const IndexModel& medium, const State& y) {
    path.samples.push_back(to_ray_state(y));
    path.paraxial.push_back(to_paraxial(y));
    path.jacobian_trace.push_back(spreading(y));
    rates.push_back(spreading_rate(medium, y));
}

// Minimum of the cubic Hermite interpolant of (J, J') on [t0, t1].
double hermite_minimum(double t0, double t1, double j0, double j1, double r0, double r1) {
    const double h = t1 - t0;
    if (!(h > 0.0)) return std::min(j0, j1);
    // J(u) = c0 + c1 u + c2 u^2 + c3 u^3 on u in [0, 1].
    const double m0 = r0 * h, m1 = r1 * h;
    const double c0 = j0, c1 = m0;
    const double c2 = 3.0 * (j1 - j0) - 2.0 * m0 - m1;
    const double c3 = 2.0 * (j0 - j1) + m0 + m1;
    auto J = [&](double u) { return ((c3 * u + c2) * u + c1) * u + c0; };
    double best = std::min(j0, j1);
    // Stationary points: c1 + 2 c2 u + 3 c3 u^2 = 0.
    const double A = 3.0 * c3, B = 2.0 * c2, C = c1;
    if (std::abs(A) < 1e-300) {
        if (std::abs(B) > 1e-300) {
            const double u = -C / B;
            if (u > 0.0 && u < 1.0) best = std::min(best, J(u));
        }
    } else {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double u : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
                if (u > 0.0 && u < 1.0) best = std::min(best, J(u));
        }
    }
    return best;
}

}  // namespace

Frame transverse_frame(const Direction& nu) {
    const Vec3& v = nu.vec();
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(v(i)) < std::abs(v(axis))) axis = i;
    Vec3 a = Vec3::Zero();
    a(axis) = 1.0;
    const Vec3 e1 = (a - a.dot(v) * v).normalized();
    return {e1, v.cross(e1)};
}

RayPath trace_ray(const IndexModel& medium, double B, const Direction& nu, double eta1, double eta2,
                  const StepControl& control, double stop_depth) {
    if (!(B > 0.0)) throw PreconditionError("trace_ray: B must be positive");
    if (std::isnan(stop_depth)) stop_depth = B;

    RayPath path;
    path.nu = nu;
    path.frame = transverse_frame(nu);
    path.eta1 = eta1;
    path.eta2 = eta2;
    path.B = B;
    path.launch = -B * nu.vec() + eta1 * path.frame.e1 + eta2 * path.frame.e2;

    double n0 = 1.0;
    Vec3 g0;
    Mat3 H0;
    medium.evaluate(path.launch, n0, g0, H0);
    path.n_launch = n0;

    State y{};
    put3(y, kXi, path.launch);
    put3(y, kP, n0 * nu.vec());
    y[kTau] = 0.0;
    put3(y, kDxi1, path.frame.e1);
    put3(y, kDxi2, path.frame.e2);
    put3(y, kDp1, n0 * g0.dot(path.frame.e1) * nu.vec());
    put3(y, kDp2, n0 * g0.dot(path.frame.e2) * nu.vec());
    std::vector<double> rates;
    record(path, rates, medium, y);

    const Vec3& v = nu.vec();
    auto depth_gap = [&](const State& s) { return get3(s, kXi).dot(v) - stop_depth; };
    if (depth_gap(y) >= 0.0) {
        path.n_end = n0;
        return path;
    }

    RaySystem sys{&medium};
    auto stepper = odeint::make_dense_output(control.abs_tol, control.rel_tol, control.max_step * B,
                                             odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y, 0.0, control.initial_step * B);

    const double tau_cap = control.tau_cap * B;
    const double spacing = control.sample_spacing * B;
    double next_sample = spacing;
    State tmp{};
    bool finished = false;

    while (!finished) {
        std::pair<double, double> span;
        try {
            span = stepper.do_step(sys);
        } catch (const odeint::step_adjustment_error& e) {
            throw StepCollapse(std::string("trace_ray: ") + e.what());
        }
        ++path.steps;
        if (stepper.current_time_step() < control.min_step * B)
            throw StepCollapse("trace_ray: step size collapsed");

        const State& cur = stepper.current_state();
        double t_end = span.second;
        if (depth_gap(cur) >= 0.0) {
            auto f = [&](double t) {
                stepper.calc_state(t, tmp);
                return depth_gap(tmp);
            };
            double lo = span.first, hi = span.second;
            const double flo = depth_gap(stepper.previous_state());
            if (flo >= 0.0) {
                t_end = lo;
            } else {
                boost::uintmax_t iters = 100;
                auto root = boost::math::tools::toms748_solve(f, lo, hi, flo, depth_gap(cur),
                                                              boost::math::tools::eps_tolerance<double>(52), iters);
                t_end = 0.5 * (root.first + root.second);
            }
            finished = true;
        } else if (span.second >= tau_cap) {
            t_end = tau_cap;
            path.hit_tau_cap = true;
            finished = true;
        }

        if (spacing > 0.0) {
            while (next_sample < t_end) {
                stepper.calc_state(next_sample, tmp);
                record(path, rates, medium, tmp);
                next_sample += spacing;
            }
        }
        if (finished) {
            stepper.calc_state(t_end, tmp);
            if (!path.hit_tau_cap) {
                // Pin the final position to the stopping plane.
                const double gap = depth_gap(tmp);
                put3(tmp, kXi, get3(tmp, kXi) - gap * v);
            }
            tmp[kTau] = t_end;
            record(path, rates, medium, tmp);
        } else if (spacing <= 0.0) {
            record(path, rates, medium, cur);
        }
    }

    // Two foci can fall between consecutive samples, so the test runs on the interpolant.
    const std::vector<double>& J = path.jacobian_trace;
    const double j0 = J.front();
    const double sign = j0 > 0.0 ? 1.0 : -1.0;
    for (size_t i = 1; i < J.size() && !path.caustic; ++i) {
        const double lo = hermite_minimum(path.samples[i - 1].tau, path.samples[i].tau, sign * J[i - 1], sign * J[i],
                                          sign * rates[i - 1], sign * rates[i]);
        if (lo < 1e-9 * std::abs(j0)) path.caustic = true;
    }
    path.n_end = medium.n(path.end().position);
    return path;
}

RayPath trace_ray(const RefractiveMedium& medium, const Direction& nu, double eta1, double eta2,
                  const StepControl& control) {
    return trace_ray(medium, medium.B(), nu, eta1, eta2, control);
}

namespace {

struct ShotResult {
    RayPath ray;
    Eigen::Vector2d eta;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

ShotResult shoot(const IndexModel& medium, double B, const Direction& nu, const Vec3& x, Eigen::Vector2d eta,
                 const ShootingControl& control) {
    const Frame fr = transverse_frame(nu);
    const double depth = x.dot(nu.vec());
    auto residual_of = [&](const RayPath& ray) {
        const Vec3 diff = ray.end().position - x;
        return Eigen::Vector2d(diff.dot(fr.e1), diff.dot(fr.e2));
    };

    ShotResult res;
    res.ray = trace_ray(medium, B, nu, eta(0), eta(1), control.step, depth);
    Eigen::Vector2d r = residual_of(res.ray);
    const double tol = control.tolerance * B;

    for (int it = 0; it < control.max_iterations; ++it) {
        res.iterations = it;
        if (r.norm() < tol) break;
        const RayState& end = res.ray.end();
        const ParaxialState& ps = res.ray.paraxial.back();
        const double n_end = medium.n(end.position);
        const Vec3 vel = end.slowness / (n_end * n_end);
        const double vnu = vel.dot(nu.vec());
        if (!(vnu > 0.0)) throw NoConvergence("travel_time_to_point: ray does not cross the target plane");
        Eigen::Matrix2d M;
        for (int b = 0; b < 2; ++b) {
            const Vec3 dend = ps.dxi[b] - vel * (nu.vec().dot(ps.dxi[b]) / vnu);
            M(0, b) = fr.e1.dot(dend);
            M(1, b) = fr.e2.dot(dend);
        }
        const Eigen::Vector2d step = M.fullPivLu().solve(-r);
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 30; ++k) {
            const Eigen::Vector2d trial = eta + lambda * step;
            RayPath ray = trace_ray(medium, B, nu, trial(0), trial(1), control.step, depth);
            const Eigen::Vector2d rt = residual_of(ray);
            if (rt.norm() < r.norm() * (1.0 - 1e-4 * lambda) || rt.norm() < tol) {
                eta = trial;
                r = rt;
                res.ray = std::move(ray);
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        res.iterations = it + 1;
        if (!improved) break;
    }
    res.eta = eta;
    res.residual = r.norm();
    res.converged = res.residual < control.accept_residual * B;
    return res;
}

}  // namespace

TravelTime travel_time_to_point(const IndexModel& medium, double B, const Direction& nu, const Vec3& x,
                                const ShootingControl& control) {
    if (x.norm() > B * (1.0 + 1e-9)) throw PreconditionError("travel_time_to_point: x outside the ball");
    const double depth = x.dot(nu.vec());
    const Frame fr = transverse_frame(nu);
    const Eigen::Vector2d seed(x.dot(fr.e1), x.dot(fr.e2));

    TravelTime out;
    if (depth <= -B) {
        out.ray = trace_ray(medium, B, nu, seed(0), seed(1), control.step, depth);
        out.tau = depth + B;
        return out;
    }

    ShotResult best = shoot(medium, B, nu, x, seed, control);
    if (!best.converged)
        throw NoConvergence("travel_time_to_point: shooting stagnated with residual " + std::to_string(best.residual));

    if (control.check_uniqueness) {
        const double h = control.uniqueness_spread * B;
        const Eigen::Vector2d offsets[4] = {{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}};
        for (const auto& off : offsets) {
            ShotResult alt;
            try {
                alt = shoot(medium, B, nu, x, best.eta + off, control);
            } catch (const NoConvergence&) {
                continue;
            }
            if (alt.converged && (alt.eta - best.eta).norm() > 1e-6 * B)
                throw AssumptionViolated("travel_time_to_point: two distinct rays reach the same point");
        }
    }

    out.tau = best.ray.end().tau;
    out.iterations = best.iterations;
    out.residual = best.residual;
    out.ray = std::move(best.ray);
    return out;
}

TravelTime travel_time_to_point(const RefractiveMedium& medium, const Direction& nu, const Vec3& x,
                                const ShootingControl& control) {
    return travel_time_to_point(medium, medium.B(), nu, x, control);
}

double amplitude_at(const RayPath& ray) {
    if (ray.caustic) throw CausticDetected("amplitude_at: caustic on ray");
    if (ray.samples.size() < 2) return 1.0;
    const double j0 = ray.jacobian_trace.front();
    const double j = ray.jacobian_trace.back();
    return std::sqrt(ray.n_launch * j0 / (ray.n_end * j));
}

double amplitude_by_quadrature(const IndexModel& medium, const RayPath& ray) {
    if (ray.caustic) throw CausticDetected("amplitude_by_quadrature: caustic on ray");
    const size_t m = ray.samples.size();
    if (m < 2) return 1.0;
    std::vector<double> q(m);
    for (size_t i = 0; i < m; ++i) {
        const RayState& s = ray.samples[i];
        const ParaxialState& ps = ray.paraxial[i];
        double n = 1.0;
        Vec3 g;
        Mat3 H;
        medium.evaluate(s.position, n, g, H);
        Mat3 X, P;
        X.col(0) = s.slowness / (n * n);
        X.col(1) = ps.dxi[0];
        X.col(2) = ps.dxi[1];
        P.col(0) = g;
        P.col(1) = ps.dp[0];
        P.col(2) = ps.dp[1];
        const double lap = (P * X.inverse()).trace();
        q[i] = lap / (n * n);
    }
    double integral = 0.0;
    for (size_t i = 1; i < m; ++i)
        integral += 0.5 * (q[i] + q[i - 1]) * (ray.samples[i].tau - ray.samples[i - 1].tau);
    return std::exp(-0.5 * integral);
}

}  // namespace phaseless
