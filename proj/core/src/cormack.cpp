#include "phaseless/cormack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fftw3.h>

#include "phaseless/csv.hpp"
#include "phaseless/parallel.hpp"
#include "phaseless/quadrature.hpp"

namespace phaseless {

using cd = std::complex<double>;

namespace {

// Monomial coefficients (in t) of the polynomial through (t_j, y_j).
template <class T>
std::vector<T> interpolating_monomials(const std::vector<double>& t, std::vector<T> a) {
    const size_t p = t.size() - 1;
    for (size_t j = 1; j <= p; ++j)
        for (size_t i = p; i >= j; --i) a[i] = (a[i] - a[i - 1]) / (t[i] - t[i - j]);
    std::vector<T> c(p + 1, T{});
    c[0] = a[p];
    size_t deg = 0;
    for (size_t j = p; j-- > 0;) {
        // c <- c (t - t_j) + a_j
        for (size_t k = deg + 1; k > 0; --k) c[k] = c[k - 1] - t[j] * c[k];
        c[0] = -t[j] * c[0] + a[j];
        ++deg;
    }
    return c;
}

}  // namespace

RadialGrid RadialGrid::uniform(double B_a, size_t m) {
    if (!(B_a > 0.0) || m < 2) throw PreconditionError("RadialGrid: need B_a > 0 and at least 2 nodes");
    RadialGrid g;
    g.B_a = B_a;
    g.nodes.resize(m);
    const double h = B_a / static_cast<double>(m);
    for (size_t k = 0; k < m; ++k) g.nodes[k] = (static_cast<double>(k) + 0.5) * h;
    return g;
}

double abel_apply(const std::vector<double>& h, const RadialGrid& grid, double omega) {
    const size_t m = grid.size();
    if (h.size() != m) throw PreconditionError("abel_apply: sample count does not match the grid");
    if (!(omega >= 0.0) || omega >= grid.B_a) {
        if (omega >= grid.B_a && omega <= grid.B_a * (1 + 1e-15)) return 0.0;
        throw PreconditionError("abel_apply: omega outside [0, B_a)");
    }
    const auto& x = grid.nodes;
    // Breakpoints 0, x_0, ..., x_{m-1}, B_a; piece j covers [b_j, b_{j+1}].
    auto line = [&](size_t piece, double& c0, double& c1) {
        const size_t i = std::clamp<size_t>(piece, 1, m - 1);  // segment between x_{i-1} and x_i
        c1 = (h[i] - h[i - 1]) / (x[i] - x[i - 1]);
        c0 = h[i - 1] - c1 * x[i - 1];
    };
    const double w2 = omega * omega;
    auto S = [&](double r) { return std::sqrt(std::max(0.0, r * r - w2)); };
    double total = 0.0;
    for (size_t piece = 0; piece <= m; ++piece) {
        const double lo = piece == 0 ? 0.0 : x[piece - 1];
        const double hi = piece == m ? grid.B_a : x[piece];
        if (hi <= omega) continue;
        const double a = std::max(lo, omega);
        double c0, c1;
        line(piece, c0, c1);
        const double Sa = S(a), Sb = S(hi);
        const double I0 = Sb - Sa;
        const double I1 = 0.5 * (hi * Sb - a * Sa + (w2 > 0.0 ? w2 * std::log((hi + Sb) / (a + Sa)) : 0.0));
        total += c0 * I0 + c1 * I1;
    }
    return total / kPi;
}

RhsMethod rhs_method_from_string(const std::string& s) {
    if (s == "analytic") return RhsMethod::analytic;
    if (s == "richardson") return RhsMethod::richardson;
    throw ConfigError("unknown rhs method '" + s + "'");
}

const char* to_string(RhsMethod m) { return m == RhsMethod::richardson ? "richardson" : "analytic"; }

template <class T>
std::vector<T> abel_rhs(const std::vector<T>& psi, const RadialGrid& grid, int n, RhsMethod method) {
    const size_t m = grid.size();
    if (psi.size() != m) throw PreconditionError("abel_rhs: sample count does not match the grid");
    const double h = grid.step();
    std::vector<T> out(m);

    if (method == RhsMethod::richardson) {
        std::vector<double> re(m), im(m);
        for (size_t k = 0; k < m; ++k) {
            re[k] = std::real(psi[k]);
            im[k] = std::imag(psi[k]);
        }
        auto deriv = [&](const std::vector<double>& f, double w, double d) {
            return (abel_apply(f, grid, w + d) - abel_apply(f, grid, w - d)) / (2.0 * d);
        };
        for (size_t i = 0; i < m; ++i) {
            const double w = grid.nodes[i];
            const double d = std::min({0.5 * h, 0.5 * w, 0.5 * (grid.B_a - w)});
            auto rich = [&](const std::vector<double>& f) { return (4.0 * deriv(f, w, 0.5 * d) - deriv(f, w, d)) / 3.0; };
            if constexpr (std::is_same_v<T, double>)
                out[i] = -rich(re) / w;
            else
                out[i] = T(-rich(re) / w, -rich(im) / w);
        }
        return out;
    }

    constexpr int order = 7;
    const size_t mirror = order + 1;
    std::vector<double> X;
    std::vector<T> Y;
    const double parity = (std::abs(n) % 2) ? -1.0 : 1.0;
    for (size_t k = mirror; k-- > 0;) {
        X.push_back(-grid.nodes[std::min(k, m - 1)]);
        Y.push_back(parity * psi[std::min(k, m - 1)]);
    }
    for (size_t k = 0; k < m; ++k) {
        X.push_back(grid.nodes[k]);
        Y.push_back(psi[k]);
    }
    X.push_back(grid.B_a);
    Y.push_back(T{});
    const size_t nx = X.size();

    // Derivative polynomial of each cell [X_c, X_{c+1}] for c >= mirror, in t = (rho - X_c) / h.
    std::vector<std::vector<T>> dpoly(nx - 1);
    for (size_t c = mirror; c + 1 < nx; ++c) {
        const size_t start = std::min<size_t>(c - order / 2, nx - (order + 1));
        std::vector<double> t(order + 1);
        std::vector<T> y(order + 1);
        for (int j = 0; j <= order; ++j) {
            t[j] = (X[start + j] - X[c]) / h;
            y[j] = Y[start + j];
        }
        const auto coef = interpolating_monomials(t, y);
        std::vector<T> d(order);
        for (int k = 1; k <= order; ++k) d[k - 1] = static_cast<double>(k) * coef[k] / h;
        dpoly[c] = std::move(d);
    }
    auto dpsi = [&](size_t c, double rho) {
        const double t = (rho - X[c]) / h;
        const auto& d = dpoly[c];
        T acc = d.back();
        for (size_t k = d.size() - 1; k-- > 0;) acc = acc * t + d[k];
        return acc;
    };

    const GaussRule& g = gauss_legendre(8);
    for (size_t i = 0; i < m; ++i) {
        const double w = grid.nodes[i], w2 = w * w;
        T acc{};
        for (size_t c = mirror + i; c + 1 < nx; ++c) {
            const double va = std::sqrt(std::max(0.0, X[c] * X[c] - w2));
            const double vb = std::sqrt(std::max(0.0, X[c + 1] * X[c + 1] - w2));
            const int pieces = c - (mirror + i) < 2 ? 4 : 1;
            for (int s = 0; s < pieces; ++s) {
                const double a = va + (vb - va) * s / pieces, b = va + (vb - va) * (s + 1) / pieces;
                const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
                for (size_t q = 0; q < g.nodes.size(); ++q) {
                    const double v = mid + half * g.nodes[q];
                    const double rho = std::sqrt(w2 + v * v);
                    acc += (g.weights[q] * half / rho) * dpsi(c, rho);
                }
            }
        }
        out[i] = -acc / kPi;
    }
    return out;
}

template std::vector<double> abel_rhs(const std::vector<double>&, const RadialGrid&, int, RhsMethod);
template std::vector<cd> abel_rhs(const std::vector<cd>&, const RadialGrid&, int, RhsMethod);

VolterraMethod volterra_method_from_string(const std::string& s) {
    if (s == "picard") return VolterraMethod::picard;
    if (s == "nystrom") return VolterraMethod::nystrom;
    throw ConfigError("unknown volterra method '" + s + "'");
}

const char* to_string(VolterraMethod m) { return m == VolterraMethod::picard ? "picard" : "nystrom"; }

VolterraOperator VolterraOperator::build(int n, const RadialGrid& grid, const VolterraOptions& opt) {
    VolterraOperator op;
    op.n = std::abs(n);
    op.m = grid.size();
    const size_t m = op.m;
    op.W.assign(m * m, 0.0);
    if (op.n == 0) return op;
    if (opt.order < 1 || opt.gauss_points < 1) throw ConfigError("volterra: order and gauss_points must be positive");
    const double h = grid.step();
    const GaussRule& g = gauss_legendre(opt.gauss_points);
    const size_t P = static_cast<size_t>(opt.order);
    std::vector<double> basis(P + 1);
    for (size_t i = 0; i < m; ++i) {
        const double w = grid.nodes[i];
        double* row = op.W.data() + i * m;
        const size_t p = std::min(P, m - 1 - i);
        for (size_t k = i; k < m; ++k) {
            const double a = grid.nodes[k];
            const double b = k + 1 < m ? grid.nodes[k + 1] : grid.B_a;
            const size_t start = p == 0 ? i : std::clamp<size_t>(k >= p / 2 ? k - p / 2 : 0, i, m - 1 - p);
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            for (size_t q = 0; q < g.nodes.size(); ++q) {
                const double r = mid + half * g.nodes[q];
                const double kern = g.weights[q] * half * kernel_G(op.n, w / r) / r;
                const double t = (r - grid.nodes[start]) / h;
                for (size_t j = 0; j <= p; ++j) {
                    double L = 1.0;
                    for (size_t l = 0; l <= p; ++l)
                        if (l != j) L *= (t - static_cast<double>(l)) / (static_cast<double>(j) - static_cast<double>(l));
                    basis[j] = L;
                }
                for (size_t j = 0; j <= p; ++j) row[start + j] += kern * basis[j];
            }
        }
    }
    return op;
}

VolterraResult volterra_solve(const VolterraOperator& op, const RadialGrid& grid, const std::vector<cd>& rhs,
                              const VolterraOptions& opt) {
    const size_t m = op.m;
    if (rhs.size() != m || grid.size() != m) throw PreconditionError("volterra_solve: size mismatch");
    VolterraResult res;
    // Below omega_cut the r^-|n| mode amplifies errors by more than 1 / regularity; those nodes are closed
    // with the regular power law instead of being solved for.
    size_t ic = 0;
    if (op.n > 0 && opt.regularity > 0.0) {
        const double cut = grid.B_a * std::pow(opt.regularity, 1.0 / op.n);
        while (ic + 1 < m && grid.nodes[ic] < cut) ++ic;
    }
    auto apply = [&](const std::vector<cd>& b, std::vector<cd>& out) {
        for (size_t i = ic; i < m; ++i) {
            const double* row = op.W.data() + i * m;
            cd acc{};
            for (size_t k = i; k < m; ++k) acc += row[k] * b[k];
            out[i] = acc;
        }
    };
    auto sup = [&](const std::vector<cd>& v) {
        double s = 0.0;
        for (size_t i = ic; i < m; ++i) s = std::max(s, std::abs(v[i]));
        return s;
    };

    res.beta.assign(m, cd{});
    if (opt.method == VolterraMethod::nystrom) {
        for (size_t i = m; i-- > ic;) {
            const double* row = op.W.data() + i * m;
            cd acc = rhs[i];
            for (size_t k = i + 1; k < m; ++k) acc += row[k] * res.beta[k];
            res.beta[i] = acc / (1.0 - row[i]);
        }
    } else {
        for (size_t i = ic; i < m; ++i) res.beta[i] = rhs[i];
        std::vector<cd> next(m, cd{});
        int growth = 0;
        for (int it = 1; it <= opt.max_iterations; ++it) {
            apply(res.beta, next);
            double upd = 0.0;
            for (size_t i = ic; i < m; ++i) {
                next[i] += rhs[i];
                upd = std::max(upd, std::abs(next[i] - res.beta[i]));
            }
            res.beta.swap(next);
            res.iterations = it;
            growth = !res.trace.empty() && upd > res.trace.back() ? growth + 1 : 0;
            res.trace.push_back(upd);
            if (upd <= opt.tolerance * std::max(sup(res.beta), 1e-300)) break;
            if (opt.divergence_window > 0 && growth >= opt.divergence_window)
                throw PicardDivergence("picard iteration for harmonic n=" + std::to_string(op.n) + " grew for " +
                                       std::to_string(growth) + " consecutive iterations; use the nystrom method");
        }
    }

    std::vector<cd> Kb(m, cd{});
    apply(res.beta, Kb);
    for (size_t i = ic; i < m; ++i) res.residual = std::max(res.residual, std::abs(res.beta[i] - Kb[i] - rhs[i]));

    for (size_t i = 0; i < ic; ++i) res.beta[i] = res.beta[ic] * std::pow(grid.nodes[i] / grid.nodes[ic], op.n);
    res.closure_nodes = ic;
    return res;
}

VolterraResult volterra_solve(int n, const RadialGrid& grid, const std::vector<double>& rhs,
                              const VolterraOptions& opt) {
    const auto op = VolterraOperator::build(n, grid, opt);
    return volterra_solve(op, grid, std::vector<cd>(rhs.begin(), rhs.end()), opt);
}

namespace {

struct SinogramSampler {
    const Sinogram& s;
    bool half;
    double a0, da, d0, dd;

    double row(long i, double d) const {
        const long K = static_cast<long>(s.n_alpha());
        long wraps = i >= 0 ? i / K : -((-i + K - 1) / K);
        const long ii = i - wraps * K;
        if (half && (wraps % 2 != 0)) d = -d;
        const double u = (d - d0) / dd;
        const long nd = static_cast<long>(s.n_offset());
        // Linear in d, with psi = 0 at d = +-B_a.
        if (u < 0.0) {
            const double t = (d + s.slice.B_a) / (s.offsets.front() + s.slice.B_a);
            return std::max(0.0, t) * s.at(static_cast<size_t>(ii), 0);
        }
        if (u > static_cast<double>(nd - 1)) {
            const double t = (s.slice.B_a - d) / (s.slice.B_a - s.offsets.back());
            return std::max(0.0, t) * s.at(static_cast<size_t>(ii), static_cast<size_t>(nd - 1));
        }
        const long j = std::min(static_cast<long>(u), nd - 2);
        const double t = u - static_cast<double>(j);
        return (1 - t) * s.at(static_cast<size_t>(ii), static_cast<size_t>(j)) +
               t * s.at(static_cast<size_t>(ii), static_cast<size_t>(j + 1));
    }

    double operator()(double alpha, double d) const {
        const double u = (alpha - a0) / da;
        const double fu = std::floor(u);
        const double t = u - fu;
        const long i = static_cast<long>(fu);
        if (t < 1e-12) return row(i, d);
        if (t > 1.0 - 1e-12) return row(i + 1, d);
        return (1 - t) * row(i, d) + t * row(i + 1, d);
    }
};

}  // namespace

PolarSinogram to_polar(const Sinogram& s, size_t n_rho, size_t n_angle) {
    if (s.n_alpha() < 2 || s.n_offset() < 2) throw PreconditionError("to_polar: sinogram too small");
    const double da = s.alpha_step();
    const double coverage = da * static_cast<double>(s.n_alpha());
    const bool half = std::abs(coverage - kPi) < 1e-9;
    const bool full = std::abs(coverage - kTwoPi) < 1e-9;
    if (!half && !full) throw PreconditionError("to_polar: angular coverage must be pi or 2 pi");
    if (n_rho == 0) n_rho = s.n_offset() / 2;
    if (n_angle == 0) n_angle = half ? 2 * s.n_alpha() : s.n_alpha();
    PolarSinogram p;
    p.slice = s.slice;
    p.grid = RadialGrid::uniform(s.slice.B_a, n_rho);
    p.alphas.resize(n_angle);
    for (size_t i = 0; i < n_angle; ++i) p.alphas[i] = kTwoPi * static_cast<double>(i + 1) / static_cast<double>(n_angle);
    p.psi.resize(n_rho * n_angle);
    const SinogramSampler sample{s, half, s.alphas.front(), da, s.offsets.front(), s.offset_step()};
    for (size_t k = 0; k < n_rho; ++k)
        for (size_t i = 0; i < n_angle; ++i) p.psi[k * n_angle + i] = sample(p.alphas[i], p.grid.nodes[k]);
    return p;
}

Harmonics harmonics(const PolarSinogram& polar, int n_max) {
    const size_t N = polar.alphas.size(), m = polar.grid.size();
    if (N < 4) throw PreconditionError("harmonics: need at least 4 angles");
    if (n_max < 0) throw ConfigError("harmonics: n_max must be nonnegative");
    const int limit = static_cast<int>(N / 2) - 1;
    const int nm = std::min(n_max, limit);
    const double step = kTwoPi / static_cast<double>(N);
    if (std::abs(polar.alphas[0] - step) > 1e-9) throw PreconditionError("harmonics: angles must be (i + 1) 2 pi / N");

    Harmonics h;
    h.grid = polar.grid;
    h.psi_n.assign(static_cast<size_t>(nm) + 1, std::vector<cd>(m));
    std::vector<double> in(N);
    std::vector<cd> out(N / 2 + 1);
    fftw_plan plan =
        fftw_plan_dft_r2c_1d(static_cast<int>(N), in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    double kept = 0.0, total = 0.0, floor_sum = 0.0;
    size_t floor_count = 0;
    const size_t floor_from = std::max<size_t>(N / 4, static_cast<size_t>(nm) + 1);
    for (size_t k = 0; k < m; ++k) {
        std::copy_n(polar.psi.begin() + static_cast<std::ptrdiff_t>(k * N), N, in.begin());
        fftw_execute(plan);
        for (size_t n = 0; n < out.size(); ++n) {
            const cd c = out[n] * std::polar(1.0 / static_cast<double>(N), -static_cast<double>(n) * step);
            const double mult = (n == 0 || 2 * n == N) ? 1.0 : 2.0;
            total += mult * std::norm(c);
            if (static_cast<int>(n) <= nm) {
                kept += mult * std::norm(c);
                h.psi_n[n][k] = c;
            }
            if (n >= floor_from && 2 * n < N) {
                floor_sum += std::norm(c);
                ++floor_count;
            }
        }
    }
    fftw_destroy_plan(plan);
    h.tail_fraction = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;
    h.tail_warning = h.tail_fraction > 0.05;
    h.noise_floor = floor_count ? std::sqrt(floor_sum / static_cast<double>(floor_count)) : 0.0;
    return h;
}

std::complex<double> PolarField::harmonic(int n, double r) const {
    const int an = std::abs(n);
    if (an > n_used() || r >= grid.B_a) return {};
    const auto& b = beta_n[static_cast<size_t>(an)];
    const size_t m = grid.size();
    const double h = grid.step();
    const double parity = an % 2 ? -1.0 : 1.0;
    // Cubic Lagrange on nodes with index in [-2, m + 1]; negative indices mirror, beyond the end extrapolate.
    auto node = [&](long j, double& x, cd& y) {
        if (j < 0) {
            x = -grid.nodes[static_cast<size_t>(-j - 1)];
            y = parity * b[static_cast<size_t>(-j - 1)];
        } else {
            x = grid.nodes[static_cast<size_t>(j)];
            y = b[static_cast<size_t>(j)];
        }
    };
    const double u = r / h - 0.5;
    long j0 = static_cast<long>(std::floor(u)) - 1;
    j0 = std::clamp<long>(j0, -2, static_cast<long>(m) - 4);
    cd acc{};
    double xs[4];
    cd ys[4];
    for (int a = 0; a < 4; ++a) node(j0 + a, xs[a], ys[a]);
    for (int a = 0; a < 4; ++a) {
        double L = 1.0;
        for (int c = 0; c < 4; ++c)
            if (c != a) L *= (r - xs[c]) / (xs[a] - xs[c]);
        acc += L * ys[a];
    }
    cd v = acc;
    if (n < 0) v = std::conj(v);
    return v;
}

double PolarField::value(double r, double phi) const {
    if (beta_n.empty()) return 0.0;
    double v = harmonic(0, r).real();
    for (int n = 1; n <= n_used(); ++n) v += 2.0 * (harmonic(n, r) * std::polar(1.0, n * phi)).real();
    return v;
}

PolarField cormack_reconstruct(const PolarSinogram& polar, const CormackOptions& opt) {
    if (opt.n_max < 0) throw ConfigError("cormack: n_max must be nonnegative");
    const Harmonics h = harmonics(polar, opt.n_max);
    const size_t m = h.grid.size();
    // Adaptive cut: drop trailing harmonics whose energy is below tail_tolerance of the total.
    std::vector<double> energy(h.psi_n.size(), 0.0);
    double total = 0.0;
    for (size_t n = 0; n < h.psi_n.size(); ++n) {
        for (const auto& c : h.psi_n[n]) energy[n] += (n == 0 ? 1.0 : 2.0) * std::norm(c);
        total += energy[n];
    }
    size_t used = 0;
    if (total > 0.0) {
        double tail = h.tail_fraction * total / std::max(1.0 - h.tail_fraction, 1e-300);
        used = h.psi_n.size() - 1;
        while (used > 0 && (tail + energy[used]) < opt.tail_tolerance * total) {
            tail += energy[used];
            --used;
        }
    }

    PolarField f;
    f.slice = polar.slice;
    f.grid = h.grid;
    f.tail_fraction = h.tail_fraction;
    f.tail_warning = h.tail_warning;
    f.noise_floor = h.noise_floor;
    f.beta_n.assign(used + 1, std::vector<cd>(m));
    f.iterations.assign(used + 1, 0);
    f.closure_radius.assign(used + 1, 0.0);
    parallel_for(used + 1, opt.threads, [&](size_t n) {
        VolterraOptions vo = opt.volterra;
        if (n > 0 && opt.closure_target > 0.0) {
            double peak = 0.0;
            for (const auto& c : h.psi_n[n]) peak = std::max(peak, std::abs(c));
            const double level = peak > 0.0 ? h.noise_floor / (opt.closure_target * peak) : 1.0;
            if (level >= 1.0) {
                // Indistinguishable from the noise floor.
                f.closure_radius[n] = h.grid.B_a;
                return;
            }
            vo.regularity = std::max(vo.regularity, level);
        }
        if (n > 0 && vo.regularity > 0.0) f.closure_radius[n] = h.grid.B_a * std::pow(vo.regularity, 1.0 / static_cast<double>(n));
        const auto rhs = abel_rhs(h.psi_n[n], h.grid, static_cast<int>(n), opt.rhs);
        const auto op = VolterraOperator::build(static_cast<int>(n), h.grid, vo);
        try {
            const VolterraResult r = volterra_solve(op, h.grid, rhs, vo);
            f.beta_n[n] = r.beta;
            f.iterations[n] = r.iterations;
        } catch (const Error& e) {
            throw StageError("cormack", "harmonic n=" + std::to_string(n) + ": " + e.what());
        }
    });
    return f;
}

CartesianField to_cartesian(const PolarField& pf, size_t n) {
    CartesianField f = CartesianField::make(pf.slice, n);
    for (size_t iy = 0; iy < n; ++iy)
        for (size_t ix = 0; ix < n; ++ix) {
            if (!f.mask[iy * n + ix]) continue;
            const double x = f.x(ix), y = f.y(iy);
            f.at(ix, iy) = pf.value(std::hypot(x, y), std::atan2(y, x));
        }
    return f;
}

void write_polar_field(const std::string& path, const PolarField& pf) {
    ensure_parent_directory(path);
    std::ofstream out(path);
    if (!out) throw Error("write_polar_field: cannot open '" + path + "'");
    out << "n,r,re,im\n";
    for (size_t n = 0; n < pf.beta_n.size(); ++n)
        for (size_t k = 0; k < pf.grid.size(); ++k)
            out << n << ',' << format_double(pf.grid.nodes[k]) << ',' << format_double(pf.beta_n[n][k].real()) << ','
                << format_double(pf.beta_n[n][k].imag()) << '\n';
}

}  // namespace phaseless
