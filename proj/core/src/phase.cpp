#include "phaseless/phase.hpp"
#include "phaseless/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
// Boost 1.74 pchip.hpp calls isnan unqualified.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>

namespace phaseless {

PhaseMode phase_mode_from_string(const std::string& s) {
    if (s == "first_two") return PhaseMode::first_two;
    if (s == "refine") return PhaseMode::refine;
    throw ConfigError("unknown phase mode '" + s + "'");
}

const char* to_string(PhaseMode m) { return m == PhaseMode::refine ? "refine" : "first_two"; }

bool detect_unscattered(const std::vector<double>& f, double flatness_tol) {
    if (f.empty()) return true;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    return *hi - *lo < flatness_tol * (1.0 + *hi);
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

struct Peak {
    double k;
    double value;
};

// Least-squares quadratic through samples [m - w, m + w]; vertex in k.
bool fit_vertex(const double* k, const double* f, size_t m, size_t w, Peak& out) {
    if (w == 1) {
        const double h0 = k[m] - k[m - 1], h1 = k[m + 1] - k[m];
        const double s0 = (f[m] - f[m - 1]) / h0, s1 = (f[m + 1] - f[m]) / h1;
        const double c2 = (s1 - s0) / (h0 + h1);
        if (!(c2 < 0.0)) return false;
        const double c1 = s0 + c2 * h0;  // slope at k[m]
        const double u = -c1 / (2.0 * c2);
        if (u < -h0 || u > h1) return false;
        out.k = k[m] + u;
        out.value = f[m] + c1 * u + c2 * u * u;
        return true;
    }
    const size_t count = 2 * w + 1;
    Eigen::MatrixXd V(count, 3);
    Eigen::VectorXd y(count);
    const double k_ref = k[m];
    const double scale = std::max(k[m + w] - k[m - w], 1e-300);
    for (size_t r = 0; r < count; ++r) {
        const double u = (k[m - w + r] - k_ref) / scale;
        V(static_cast<Eigen::Index>(r), 0) = 1.0;
        V(static_cast<Eigen::Index>(r), 1) = u;
        V(static_cast<Eigen::Index>(r), 2) = u * u;
        y(static_cast<Eigen::Index>(r)) = f[m - w + r];
    }
    const Eigen::Vector3d c = V.colPivHouseholderQr().solve(y);
    if (!(c(2) < 0.0)) return false;
    const double u_star = -c(1) / (2.0 * c(2));
    if (std::abs(u_star) > 0.5) return false;
    out.k = k_ref + u_star * scale;
    out.value = c(0) + c(1) * u_star + c(2) * u_star * u_star;
    return true;
}

RetrievedRay failed(RetrievedRay r, std::string why) {
    r.status = RayStatus::failed;
    r.A_hat = 1.0;
    r.phi1_hat = 0.0;
    r.failure = std::move(why);
    return r;
}

}  // namespace

double estimate_relative_noise(const std::vector<double>& f) {
    if (f.size() < 7) return 0.0;
    static constexpr double c[7] = {1, -6, 15, -20, 15, -6, 1};
    std::vector<double> d(f.size() - 6);
    for (size_t i = 0; i < d.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < 7; ++j) s += c[j] * f[i + static_cast<size_t>(j)];
        d[i] = std::abs(s);
    }
    const double level = median(f);
    if (!(level > 0.0)) return 0.0;
    return median(std::move(d)) / (0.6745 * std::sqrt(924.0)) / level;
}

RetrievedRay recover(const IntensitySeries& series, const PeakControl& ctl) {
    RetrievedRay r;
    r.chord = series.chord;
    if (series.k.size() != series.f.size()) throw PreconditionError("recover: k and f differ in length");

    const size_t start = static_cast<size_t>(
        std::lower_bound(series.k.begin(), series.k.end(), ctl.k1) - series.k.begin());
    if (series.k.size() - start < 16) return failed(r, "fewer than 16 samples above k1");
    const double* k = series.k.data() + start;
    const double* f = series.f.data() + start;
    const size_t n = series.k.size() - start;
    std::vector<double> fv(f, f + n);

    const double fmax = *std::max_element(fv.begin(), fv.end());
    if (!(fmax > 0.0)) return failed(r, "nonpositive intensity");
    const double noise = estimate_relative_noise(fv);
    double curvature = 0.0;
    for (size_t i = 1; i + 1 < n; ++i) curvature = std::max(curvature, std::abs(fv[i + 1] - 2.0 * fv[i] + fv[i - 1]));
    const double noise_band = ctl.noise_band * noise * fmax;
    // A sampled maximum can sit up to curvature / 8 below the true one.
    const double band = std::max({ctl.peak_rel_tol * fmax, noise_band, 0.25 * curvature});
    const bool noisy = noise_band > ctl.peak_rel_tol * fmax;
    const double threshold = fmax - band;

    std::vector<std::pair<size_t, size_t>> runs;
    for (size_t i = 0; i < n; ++i) {
        if (fv[i] < threshold) continue;
        size_t j = i;
        while (j + 1 < n && fv[j + 1] >= threshold) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    size_t max_span = 0;
    for (const auto& [a, b] : runs) max_span = std::max(max_span, b - a + 1);
    std::vector<std::pair<size_t, size_t>> lobes;
    for (const auto& run : runs) {
        if (!lobes.empty() && run.first - lobes.back().second - 1 <= max_span)
            lobes.back().second = run.second;
        else
            lobes.push_back(run);
    }

    std::vector<Peak> peaks;
    for (const auto& [a, b] : lobes) {
        if (a == 0 || b == n - 1) continue;
        const size_t m = static_cast<size_t>(std::max_element(fv.begin() + static_cast<std::ptrdiff_t>(a),
                                                              fv.begin() + static_cast<std::ptrdiff_t>(b) + 1) -
                                             fv.begin());
        size_t w = 1;
        if (ctl.fit_half_width > 0)
            w = static_cast<size_t>(ctl.fit_half_width);
        else if (noisy)
            w = std::max<size_t>({m - a, b - m, 2});
        if (m < w || m + w > n - 1) continue;
        Peak p{};
        if (fit_vertex(k, f, m, w, p)) peaks.push_back(p);
    }
    for (const auto& p : peaks) r.peaks.push_back(p.k);
    if (peaks.size() < 2) return failed(r, "fewer than two qualifying maxima in the k-window");

    double spacing = peaks[1].k - peaks[0].k;
    double peak_value = peaks[0].value;
    r.k2 = peaks[0].k;
    if (ctl.mode == PhaseMode::refine) {
        std::vector<double> gaps;
        for (size_t i = 1; i < peaks.size(); ++i) gaps.push_back(peaks[i].k - peaks[i - 1].k);
        spacing = median(gaps);
        for (int pass = 0; pass < 2; ++pass) {
            std::vector<double> idx, pos, val;
            long last = -1;
            for (const auto& p : peaks) {
                const long j = std::lround((p.k - r.k2) / spacing);
                if (j <= last) continue;
                last = j;
                idx.push_back(static_cast<double>(j));
                pos.push_back(p.k);
                val.push_back(p.value);
            }
            const double m = static_cast<double>(idx.size());
            const double sx = std::accumulate(idx.begin(), idx.end(), 0.0);
            const double sy = std::accumulate(pos.begin(), pos.end(), 0.0);
            double sxx = 0.0, sxy = 0.0;
            for (size_t i = 0; i < idx.size(); ++i) {
                sxx += idx[i] * idx[i];
                sxy += idx[i] * pos[i];
            }
            const double den = m * sxx - sx * sx;
            if (!(den > 0.0)) break;
            spacing = (m * sxy - sx * sy) / den;
            r.k2 = (sy - spacing * sx) / m;
            peak_value = std::accumulate(val.begin(), val.end(), 0.0) / m;
        }
    }
    if (!(spacing > 0.0)) return failed(r, "nonincreasing maxima");
    r.k3 = r.k2 + spacing;
    r.peak_value = peak_value;
    if (peak_value < 1.0) return failed(r, "peak value below 1 is inconsistent with the intensity model");
    r.A_hat = std::sqrt(peak_value) - 1.0;
    if (!(r.A_hat > 0.0)) return failed(r, "nonpositive amplitude");
    r.phi1_hat = kTwoPi / (r.k3 - r.k2);

    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double model = r.A_hat * r.A_hat + 1.0 - 2.0 * r.A_hat * std::cos(k[i] * r.phi1_hat);
        ss += (f[i] - model) * (f[i] - model);
    }
    r.residual = std::sqrt(ss / static_cast<double>(n));
    r.status = RayStatus::recovered;
    return r;
}

RetrievedRay retrieve(const IntensitySeries& series, const PeakControl& ctl) {
    const size_t start = static_cast<size_t>(
        std::lower_bound(series.k.begin(), series.k.end(), ctl.k1) - series.k.begin());
    const std::vector<double> tail(series.f.begin() + static_cast<std::ptrdiff_t>(start), series.f.end());
    if (tail.size() >= 16 && detect_unscattered(tail, ctl.flatness_tol)) {
        RetrievedRay r;
        r.chord = series.chord;
        r.status = RayStatus::unscattered;
        r.A_hat = 1.0;
        r.phi1_hat = 0.0;
        const double level = tail.empty() ? 0.0 : tail.front();
        r.peak_value = level;
        r.amplitude_ambiguous = level > ctl.flatness_tol;
        return r;
    }
    return recover(series, ctl);
}

Sinogram build_sinogram(const std::vector<RetrievedRay>& rays, const Slice& slice, const ChordGrid& grid,
                        const SinogramOptions& options) {
    if (rays.size() != grid.size())
        throw PreconditionError("build_sinogram: ray count does not match the chord grid");
    Sinogram s(slice, grid);
    size_t n_failed = 0, first_failed = rays.size();
    for (size_t i = 0; i < rays.size(); ++i) {
        s.status[i] = rays[i].status;
        switch (rays[i].status) {
            case RayStatus::unscattered: s.psi[i] = 0.0; break;
            case RayStatus::recovered: s.psi[i] = rays[i].phi1_hat; break;
            case RayStatus::failed:
                s.psi[i] = 0.0;
                s.fill_mask[i] = 1;
                if (n_failed++ == 0) first_failed = i;
                break;
        }
    }
    const double fraction = rays.empty() ? 0.0 : static_cast<double>(n_failed) / static_cast<double>(rays.size());
    if (fraction > options.max_failed_fraction)
        throw StageError("phase", "failed fraction " + std::to_string(fraction) + " exceeds " +
                                      std::to_string(options.max_failed_fraction) + "; first failed chord alpha=" +
                                      format_double(rays[first_failed].chord.alpha) +
                                      " d=" + format_double(rays[first_failed].chord.d) + " (" +
                                      rays[first_failed].failure + ")");
    if (n_failed == 0) return s;

    const size_t nd = s.n_offset();
    for (size_t i = 0; i < s.n_alpha(); ++i) {
        // Anchors: valid entries plus psi = 0 at d = -B_a and d = +B_a; monotone cubic (PCHIP) between them.
        std::vector<double> xs{-slice.B_a}, ys{0.0};
        for (size_t j = 0; j < nd; ++j)
            if (!s.fill_mask[i * nd + j]) {
                xs.push_back(grid.offsets[j]);
                ys.push_back(s.at(i, j));
            }
        xs.push_back(slice.B_a);
        ys.push_back(0.0);
        if (xs.size() >= 4) {
            const boost::math::interpolators::pchip<std::vector<double>> spline{std::move(xs), std::move(ys)};
            for (size_t j = 0; j < nd; ++j)
                if (s.fill_mask[i * nd + j]) s.at(i, j) = spline(grid.offsets[j]);
            continue;
        }
        for (size_t j = 0; j < nd; ++j) {
            if (!s.fill_mask[i * nd + j]) continue;
            const double d = grid.offsets[j];
            const size_t hi = static_cast<size_t>(std::upper_bound(xs.begin(), xs.end(), d) - xs.begin());
            const size_t h = std::clamp<size_t>(hi, 1, xs.size() - 1);
            const double t = (d - xs[h - 1]) / (xs[h] - xs[h - 1]);
            s.at(i, j) = (1.0 - t) * ys[h - 1] + t * ys[h];
        }
    }
    return s;
}

}  // namespace phaseless
