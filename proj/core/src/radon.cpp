#include "phaseless/radon.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>

#include <fftw3.h>

#include "phaseless/csv.hpp"
#include "phaseless/parallel.hpp"

namespace phaseless {

CartesianField CartesianField::make(const Slice& slice, size_t n) {
    if (n < 2) throw PreconditionError("CartesianField: need at least 2 pixels per axis");
    CartesianField f;
    f.slice = slice;
    f.nx = f.ny = n;
    f.pixel = 2.0 * slice.B_a / static_cast<double>(n);
    f.values.assign(n * n, 0.0);
    f.mask.assign(n * n, 0);
    for (size_t iy = 0; iy < n; ++iy)
        for (size_t ix = 0; ix < n; ++ix) {
            const double px = f.x(ix), py = f.y(iy);
            f.mask[iy * n + ix] = px * px + py * py < slice.B_a * slice.B_a ? 1 : 0;
        }
    return f;
}

double CartesianField::interpolate(double px, double py) const {
    const double u = (px + slice.B_a) / pixel - 0.5;
    const double v = (py + slice.B_a) / pixel - 0.5;
    if (!(u > -1.0) || !(v > -1.0) || !(u < static_cast<double>(nx)) || !(v < static_cast<double>(ny))) return 0.0;
    const double fu = std::floor(u), fv = std::floor(v);
    const long i0 = static_cast<long>(fu), j0 = static_cast<long>(fv);
    const double tu = u - fu, tv = v - fv;
    auto val = [&](long i, long j) {
        if (i < 0 || j < 0 || i >= static_cast<long>(nx) || j >= static_cast<long>(ny)) return 0.0;
        return values[static_cast<size_t>(j) * nx + static_cast<size_t>(i)];
    };
    return (1 - tu) * (1 - tv) * val(i0, j0) + tu * (1 - tv) * val(i0 + 1, j0) + (1 - tu) * tv * val(i0, j0 + 1) +
           tu * tv * val(i0 + 1, j0 + 1);
}

bool CartesianField::same_grid(const CartesianField& o) const {
    return nx == o.nx && ny == o.ny && std::abs(pixel - o.pixel) <= 1e-12 * pixel &&
           std::abs(slice.a - o.slice.a) <= 1e-12 * slice.B && std::abs(slice.B_a - o.slice.B_a) <= 1e-12 * slice.B;
}

CartesianField sample_field(const Slice& slice, size_t n, const std::function<double(double, double)>& fn) {
    CartesianField f = CartesianField::make(slice, n);
    for (size_t iy = 0; iy < n; ++iy)
        for (size_t ix = 0; ix < n; ++ix)
            if (f.mask[iy * n + ix]) f.at(ix, iy) = fn(f.x(ix), f.y(iy));
    return f;
}

CartesianField sample_medium(const RefractiveMedium& medium, const Slice& slice, size_t n) {
    return sample_field(slice, n, [&](double x, double y) { return medium.beta(Vec3(x, y, slice.a)); });
}

Sinogram radon_forward(const CartesianField& field, const ChordGrid& grid) {
    Sinogram s(field.slice, grid);
    const double B_a = field.slice.B_a;
    const double h_max = 0.5 * field.pixel;
    // Zero border of one pixel so the interpolation needs no bounds checks.
    const size_t W = field.nx + 2, Hh = field.ny + 2;
    std::vector<double> padded(W * Hh, 0.0);
    for (size_t iy = 0; iy < field.ny; ++iy)
        std::copy_n(field.values.begin() + static_cast<std::ptrdiff_t>(iy * field.nx), field.nx,
                    padded.begin() + static_cast<std::ptrdiff_t>((iy + 1) * W + 1));
    const double inv = 1.0 / field.pixel;
    const double umax = static_cast<double>(field.nx) + 0.999999, vmax = static_cast<double>(field.ny) + 0.999999;
    for (size_t i = 0; i < grid.alphas.size(); ++i) {
        const double ca = std::cos(grid.alphas[i]), sa = std::sin(grid.alphas[i]);
        for (size_t j = 0; j < grid.offsets.size(); ++j) {
            const double d = grid.offsets[j];
            double v = 0.0;
            if (std::abs(d) < B_a) {
                const double L = std::sqrt(B_a * B_a - d * d);
                const size_t steps = static_cast<size_t>(std::ceil(2.0 * L / h_max));
                const double h = 2.0 * L / static_cast<double>(steps);
                // z = d m + t nu with m = (cos, sin), nu = (sin, -cos); u, v are padded pixel coordinates
                const double t0 = -L + 0.5 * h;
                const double u0 = (d * ca + t0 * sa + B_a) * inv + 0.5, du = h * sa * inv;
                const double v0 = (d * sa - t0 * ca + B_a) * inv + 0.5, dv = -h * ca * inv;
                for (size_t k = 0; k < steps; ++k) {
                    const double u = std::clamp(u0 + static_cast<double>(k) * du, 0.0, umax);
                    const double w = std::clamp(v0 + static_cast<double>(k) * dv, 0.0, vmax);
                    const size_t iu = std::min(static_cast<size_t>(u), W - 2);
                    const size_t iv = std::min(static_cast<size_t>(w), Hh - 2);
                    const double tu = u - static_cast<double>(iu), tv = w - static_cast<double>(iv);
                    const double* p = padded.data() + iv * W + iu;
                    v += (1 - tv) * ((1 - tu) * p[0] + tu * p[1]) + tv * ((1 - tu) * p[W] + tu * p[W + 1]);
                }
                v *= h;
            }
            s.at(i, j) = v;
        }
    }
    return s;
}

namespace {

void require_uniform(const std::vector<double>& v, const char* what) {
    if (v.size() < 2) throw PreconditionError(std::string("radon: need at least two ") + what);
    const double h = v[1] - v[0];
    if (!(h > 0.0)) throw PreconditionError(std::string("radon: ") + what + " must increase");
    for (size_t i = 2; i < v.size(); ++i)
        if (std::abs((v[i] - v[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
            throw PreconditionError(std::string("radon: ") + what + " grid is not uniform");
}

// Sums sum_i w * q_i(z . m_i) over angles with linear interpolation in d.
CartesianField accumulate(const Sinogram& s, const std::vector<double>& rows, size_t n, double weight, int threads) {
    CartesianField f = CartesianField::make(s.slice, n);
    const size_t na = s.n_alpha(), nd = s.n_offset();
    const double d0 = s.offsets.front(), dd = s.offset_step();
    std::vector<double> ca(na), sa(na);
    for (size_t i = 0; i < na; ++i) {
        ca[i] = std::cos(s.alphas[i]);
        sa[i] = std::sin(s.alphas[i]);
    }
    const double last = static_cast<double>(nd - 1);
    parallel_for(n, threads, [&](size_t iy) {
        const double py = f.y(iy);
        for (size_t ix = 0; ix < n; ++ix) {
            if (!f.mask[iy * n + ix]) continue;
            const double px = f.x(ix);
            double acc = 0.0;
            for (size_t i = 0; i < na; ++i) {
                const double u = std::clamp((px * ca[i] + py * sa[i] - d0) / dd, 0.0, last);
                const size_t j = std::min(static_cast<size_t>(u), nd - 2);
                const double t = u - static_cast<double>(j);
                const double* row = rows.data() + i * nd;
                acc += (1.0 - t) * row[j] + t * row[j + 1];
            }
            f.at(ix, iy) = weight * acc;
        }
    });
    return f;
}

double angular_coverage(const Sinogram& s) {
    require_uniform(s.alphas, "angles");
    require_uniform(s.offsets, "offsets");
    return s.alpha_step() * static_cast<double>(s.n_alpha());
}

double window_gain(const FilterSpec& spec, double fn) {
    switch (spec.window) {
        case Apodization::none: return 1.0;
        case Apodization::cosine: return fn <= spec.cutoff ? std::cos(0.5 * kPi * fn / spec.cutoff) : 0.0;
        case Apodization::hann: return fn <= spec.cutoff ? 0.5 * (1.0 + std::cos(kPi * fn / spec.cutoff)) : 0.0;
    }
    return 1.0;
}

}  // namespace

CartesianField backproject(const Sinogram& s, size_t n, int threads) {
    angular_coverage(s);
    return accumulate(s, s.psi, n, s.alpha_step(), threads);
}

Apodization apodization_from_string(const std::string& s) {
    if (s == "none") return Apodization::none;
    if (s == "cosine") return Apodization::cosine;
    if (s == "hann") return Apodization::hann;
    throw ConfigError("unknown apodization '" + s + "'");
}

const char* to_string(Apodization a) {
    switch (a) {
        case Apodization::none: return "none";
        case Apodization::cosine: return "cosine";
        case Apodization::hann: return "hann";
    }
    return "none";
}

CartesianField radon_invert(const Sinogram& s, const FilterSpec& spec, size_t n, int threads) {
    const double coverage = angular_coverage(s);
    const bool half = std::abs(coverage - kPi) < 1e-9;
    const bool full = std::abs(coverage - kTwoPi) < 1e-9;
    if (coverage < kPi - 1e-9) throw PreconditionError("radon_invert: angular coverage below pi");
    if (!half && !full) throw PreconditionError("radon_invert: angular coverage must be pi or 2 pi");
    if (!(spec.cutoff > 0.0) || spec.cutoff > 1.0) throw ConfigError("radon_invert: cutoff must lie in (0, 1]");
    if (n == 0) n = s.n_offset();

    const size_t nd = s.n_offset(), na = s.n_alpha();
    const double tau = s.offset_step();
    size_t P = 64;
    while (P < 2 * nd) P *= 2;
    const size_t nf = P / 2 + 1;

    std::vector<double> buf(P);
    std::vector<std::complex<double>> spec_buf(nf);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(static_cast<int>(P), buf.data(),
                                         reinterpret_cast<fftw_complex*>(spec_buf.data()), FFTW_ESTIMATE);
    fftw_plan inv = fftw_plan_dft_c2r_1d(static_cast<int>(P), reinterpret_cast<fftw_complex*>(spec_buf.data()),
                                         buf.data(), FFTW_ESTIMATE);

    // Band-limited ramp kernel sampled at spacing tau, then its transform.
    std::fill(buf.begin(), buf.end(), 0.0);
    buf[0] = 1.0 / (4.0 * tau * tau);
    for (size_t k = 1; k < nd; k += 2) {
        const double v = -1.0 / (static_cast<double>(k * k) * kPi * kPi * tau * tau);
        buf[k] = v;
        buf[P - k] = v;
    }
    fftw_execute(fwd);
    std::vector<double> H(nf);
    for (size_t j = 0; j < nf; ++j)
        H[j] = spec_buf[j].real() * window_gain(spec, static_cast<double>(j) / static_cast<double>(P / 2));

    std::vector<double> filtered(na * nd);
    for (size_t i = 0; i < na; ++i) {
        std::fill(buf.begin(), buf.end(), 0.0);
        std::copy_n(s.psi.begin() + static_cast<std::ptrdiff_t>(i * nd), nd, buf.begin());
        fftw_execute(fwd);
        for (size_t j = 0; j < nf; ++j) spec_buf[j] *= H[j];
        fftw_execute(inv);
        for (size_t j = 0; j < nd; ++j) filtered[i * nd + j] = tau * buf[j] / static_cast<double>(P);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);

    return accumulate(s, filtered, n, kPi / coverage * s.alpha_step(), threads);
}

void write_field_csv(const std::string& path, const CartesianField& f) {
    ensure_parent_directory(path);
    std::ofstream out(path);
    if (!out) throw Error("write_field_csv: cannot open '" + path + "'");
    out << "x,y,value,mask\n";
    for (size_t iy = 0; iy < f.ny; ++iy)
        for (size_t ix = 0; ix < f.nx; ++ix)
            out << format_double(f.x(ix)) << ',' << format_double(f.y(iy)) << ',' << format_double(f.at(ix, iy)) << ','
                << static_cast<int>(f.mask[iy * f.nx + ix]) << '\n';
}

CartesianField read_field_csv(const std::string& path, const Slice& slice) {
    const CsvTable t = read_csv(path);
    const size_t cv = t.column("value");
    const size_t n = static_cast<size_t>(std::llround(std::sqrt(static_cast<double>(t.rows.size()))));
    if (n * n != t.rows.size() || n < 2) throw ConfigError("field: '" + path + "' is not a square grid");
    CartesianField f = CartesianField::make(slice, n);
    for (size_t r = 0; r < t.rows.size(); ++r) f.values[r] = f.mask[r] ? parse_double(t.rows[r][cv]) : 0.0;
    return f;
}

void write_pgm(const std::string& path, const CartesianField& f) {
    ensure_parent_directory(path);
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (size_t i = 0; i < f.values.size(); ++i)
        if (f.mask[i]) {
            lo = first ? f.values[i] : std::min(lo, f.values[i]);
            hi = first ? f.values[i] : std::max(hi, f.values[i]);
            first = false;
        }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_pgm: cannot open '" + path + "'");
    out << "P5\n" << f.nx << ' ' << f.ny << "\n65535\n";
    for (size_t r = 0; r < f.ny; ++r) {
        const size_t iy = f.ny - 1 - r;
        for (size_t ix = 0; ix < f.nx; ++ix) {
            const size_t i = iy * f.nx + ix;
            const double v = f.mask[i] ? (f.values[i] - lo) / span : 0.0;
            const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
            const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
            out.write(bytes, 2);
        }
    }
}

}  // namespace phaseless
