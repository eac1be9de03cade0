#pragma once

namespace phaseless {

// Q_n(r, omega) = (1/pi) int_0^pi cos(n arccos(s / r)) dtheta,
// s = sqrt(r^2 cos^2(theta/2) + omega^2 sin^2(theta/2)).
// Gauss-Legendre in theta, order doubled until two orders agree to 1e-11.
double kernel_Q(int n, double r, double omega);

// T_n(r, omega) = d/domega Q_n(r, omega) / omega, evaluated as
// n / (pi sqrt(r^2 - omega^2)) int_0^pi sin(n arccos(s / r)) sin(theta/2) / s dtheta.
double kernel_T(int n, double r, double omega);

// T_n(r, omega) sqrt(r^2 - omega^2).
double kernel_T_tilde(int n, double r, double omega);

// Closed forms in q = omega / r, z = 2 q^2 - 1:
//   Q_n = (P_{n/2}(z) + P_{n/2-1}(z)) / 2,
//   G_n = r^2 T_n = 2 (P'_{n/2}(z) + P'_{n/2-1}(z)).
double kernel_Q_closed(int n, double q);
double kernel_G(int n, double q);

// Legendre function of the first kind P_nu(z) and dP/dz for nu = m/2, m >= -1, -1 < z <= 1.
void legendre_half(int m, double z, double& p, double& dp);

}  // namespace phaseless
