#include "phaseless/cormack_kernels.hpp"

#include <cmath>
#include <cstdlib>

#include "phaseless/common.hpp"
#include "phaseless/quadrature.hpp"

namespace phaseless {

namespace {

void check_args(double r, double omega) {
    if (!(r > 0.0) || !(omega >= 0.0)) throw PreconditionError("cormack kernel: need r > 0 and omega >= 0");
    if (omega > r * (1.0 + 1e-14)) throw PreconditionError("cormack kernel: omega > r");
}

// Chebyshev T_n(u) and U_{n-1}(u) by the three-term recurrence.
void chebyshev(int n, double u, double& t, double& u_prev) {
    double t0 = 1.0, t1 = u, u0 = 0.0, u1 = 1.0;  // U_{-1} = 0, U_0 = 1
    if (n == 0) {
        t = 1.0;
        u_prev = 0.0;
        return;
    }
    for (int k = 1; k < n; ++k) {
        const double t2 = 2.0 * u * t1 - t0;
        const double u2 = 2.0 * u * u1 - u0;
        t0 = t1;
        t1 = t2;
        u0 = u1;
        u1 = u2;
    }
    t = t1;
    u_prev = u1;
}

template <class F>
double adaptive_theta(F&& f) {
    double prev = 0.0;
    for (int order = 16; order <= 4096; order *= 2) {
        const GaussRule& g = gauss_legendre(order);
        double s = 0.0;
        for (size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(0.5 * kPi * (g.nodes[i] + 1.0));
        s *= 0.5 * kPi;
        if (order > 16 && std::abs(s - prev) <= 1e-11 * std::max(1.0, std::abs(s))) return s;
        prev = s;
    }
    return prev;
}

// Start values P_{nu0-1}, P_{nu0} and derivatives for nu0 = 1/2.
void half_start(double z, double& p_m, double& p, double& dp_m, double& dp) {
    const double x = 0.5 * (1.0 - z);  // = k^2
    if (x <= 0.5) {
        // 2F1(-nu, nu + 1; 1; x) for nu = -1/2 and 1/2.
        auto series = [&](double nu, double& f, double& df) {
            double term = 1.0, sum = 1.0, dsum = 0.0, xk = 1.0;
            for (int k = 0; k < 200; ++k) {
                term *= (k - nu) * (k + nu + 1.0) / ((k + 1.0) * (k + 1.0));
                const double tk = term * xk * x;
                sum += tk;
                dsum += (k + 1.0) * term * xk;
                xk *= x;
                if (std::abs(tk) < 1e-18 * std::abs(sum)) break;
            }
            f = sum;
            df = -0.5 * dsum;  // dx/dz = -1/2
        };
        series(-0.5, p_m, dp_m);
        series(0.5, p, dp);
        return;
    }
    const double k = std::sqrt(x);
    const double K = std::comp_ellint_1(k), E = std::comp_ellint_2(k);
    const double kp2 = 1.0 - x;
    const double dK = E / (k * kp2) - K / k;
    const double dE = (E - K) / k;
    const double dkdz = -1.0 / (4.0 * k);
    p_m = 2.0 / kPi * K;
    p = 2.0 / kPi * (2.0 * E - K);
    dp_m = 2.0 / kPi * dK * dkdz;
    dp = 2.0 / kPi * (2.0 * dE - dK) * dkdz;
}

}  // namespace

void legendre_half(int m, double z, double& p, double& dp) {
    if (m < -1) throw PreconditionError("legendre_half: degree below -1/2");
    if (m == -1 || m == 0) {
        if (m == 0) {
            p = 1.0;
            dp = 0.0;
            return;
        }
        double pm, pp, dpm, dpp;
        half_start(z, pm, pp, dpm, dpp);
        p = pm;
        dp = dpm;
        return;
    }
    double nu, p0, p1, d0, d1;
    if (m % 2 == 0) {
        nu = 1.0;
        p0 = 1.0;
        p1 = z;
        d0 = 0.0;
        d1 = 1.0;
    } else {
        nu = 0.5;
        half_start(z, p0, p1, d0, d1);
    }
    const double target = 0.5 * m;
    while (nu < target - 0.25) {
        const double p2 = ((2.0 * nu + 1.0) * z * p1 - nu * p0) / (nu + 1.0);
        const double d2 = d0 + (2.0 * nu + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        nu += 1.0;
    }
    p = p1;
    dp = d1;
}

double kernel_Q_closed(int n, double q) {
    n = std::abs(n);
    if (n == 0) return 1.0;
    const double z = 2.0 * q * q - 1.0;
    double pa, da, pb, db;
    legendre_half(n, z, pa, da);
    legendre_half(n - 2, z, pb, db);
    return 0.5 * (pa + pb);
}

double kernel_G(int n, double q) {
    n = std::abs(n);
    if (n == 0) return 0.0;
    const double z = 2.0 * q * q - 1.0;
    double pa, da, pb, db;
    legendre_half(n, z, pa, da);
    legendre_half(n - 2, z, pb, db);
    return 2.0 * (da + db);
}

double kernel_Q(int n, double r, double omega) {
    check_args(r, omega);
    n = std::abs(n);
    if (n == 0) return 1.0;
    const double q = std::min(omega / r, 1.0);
    return adaptive_theta([&](double th) {
               const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
               double t, up;
               chebyshev(n, std::sqrt(c * c + q * q * s * s), t, up);
               return t;
           }) /
           kPi;
}

double kernel_T_tilde(int n, double r, double omega) {
    check_args(r, omega);
    const int an = std::abs(n);
    if (an == 0) return 0.0;
    const double q = std::min(omega / r, 1.0);
    const double w = std::sqrt(std::max(0.0, 1.0 - q * q));
    // sin(n arccos u) = sqrt(1 - u^2) U_{n-1}(u), sqrt(1 - u^2) = w sin(theta/2).
    const double I = adaptive_theta([&](double th) {
        const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
        const double u = std::sqrt(c * c + q * q * s * s);
        double t, up;
        chebyshev(an, u, t, up);
        return w * s * up * s / (r * u);
    });
    return an / kPi * I;
}

double kernel_T(int n, double r, double omega) {
    check_args(r, omega);
    const int an = std::abs(n);
    if (an == 0) return 0.0;
    const double q = std::min(omega / r, 1.0);
    const double w2 = 1.0 - q * q;
    if (w2 > 1e-8) return kernel_T_tilde(n, r, omega) / (r * std::sqrt(w2));
    // Near the diagonal the sqrt(1 - q^2) factors cancel analytically.
    const double I = adaptive_theta([&](double th) {
        const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
        const double u = std::sqrt(c * c + q * q * s * s);
        double t, up;
        chebyshev(an, u, t, up);
        return s * s * up / u;
    });
    return an / (kPi * r * r) * I;
}

}  // namespace phaseless
