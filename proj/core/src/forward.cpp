#include "phaseless/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "phaseless/csv.hpp"
#include "phaseless/parallel.hpp"

namespace phaseless {

std::vector<double> KGrid::values() const {
    std::vector<double> k(count);
    for (size_t i = 0; i < count; ++i) k[i] = k0 + dk * static_cast<double>(i);
    return k;
}

KGrid make_k_grid(double B, const KGridSpec& spec) {
    if (!(B > 0.0)) throw PreconditionError("make_k_grid: B must be positive");
    if (!(spec.phi_min > 0.0) || !(spec.phi_max >= spec.phi_min))
        throw PreconditionError("make_k_grid: need 0 < phi_min <= phi_max");
    if (!(spec.samples_per_period >= 4.0) || !(spec.periods > 0.0))
        throw PreconditionError("make_k_grid: too few samples per period or periods");
    KGrid g;
    g.k0 = spec.k0 > 0.0 ? spec.k0 : 50.0 * kTwoPi / (2.0 * B);
    g.dk = kTwoPi / (spec.samples_per_period * spec.phi_max * B);
    const double window = spec.periods * kTwoPi / (spec.phi_min * B);
    g.count = static_cast<size_t>(std::ceil(window / g.dk)) + 1;
    return g;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

IntensitySeries synth_series(double A, double phi1, const ChordGeometry& chord, const std::vector<double>& k,
                             const SynthOptions& options, std::uint64_t stream) {
    if (!(A > 0.0)) throw PreconditionError("synth_series: amplitude must be positive");
    for (size_t i = 1; i < k.size(); ++i)
        if (!(k[i] > k[i - 1])) throw PreconditionError("synth_series: k grid must be strictly increasing");

    IntensitySeries s;
    s.chord = chord;
    s.k = k;
    s.truth = SeriesTruth{A, phi1};
    s.f.resize(k.size());
    const double base = A * A + 1.0;
    if (phi1 == 0.0)
        std::fill(s.f.begin(), s.f.end(), base - 2.0 * A);
    else
        for (size_t i = 0; i < k.size(); ++i) s.f[i] = base - 2.0 * A * std::cos(k[i] * phi1);

    if (options.contamination != 0.0 || options.noise != 0.0) {
        std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(stream)));
        std::uniform_real_distribution<double> phase(0.0, kTwoPi);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double chi = phase(rng);
        for (size_t i = 0; i < k.size(); ++i) {
            if (options.contamination != 0.0) s.f[i] += options.contamination / k[i] * std::cos(k[i] * phi1 + chi);
            if (options.noise != 0.0) s.f[i] *= 1.0 + options.noise * gauss(rng);
            if (s.f[i] < 0.0) {
                s.f[i] = 0.0;
                ++s.clamped;
            }
        }
    }
    return s;
}

Fidelity fidelity_from_string(const std::string& s) {
    if (s == "linearized") return Fidelity::linearized;
    if (s == "ray") return Fidelity::ray;
    throw ConfigError("unknown fidelity '" + s + "'");
}

AmplitudeModel amplitude_model_from_string(const std::string& s) {
    if (s == "ray" || s == "ray_traced") return AmplitudeModel::ray_traced;
    if (s == "unit") return AmplitudeModel::unit;
    throw ConfigError("unknown amplitude model '" + s + "'");
}

const char* to_string(Fidelity f) { return f == Fidelity::ray ? "ray" : "linearized"; }

const char* to_string(AmplitudeModel m) { return m == AmplitudeModel::unit ? "unit" : "ray_traced"; }

namespace {

// The straight segment from the launch plane to x stays outside every component support.
bool straight_path_misses(const RefractiveMedium& medium, const ChordGeometry& chord) {
    const Vec3& nu = chord.nu.vec();
    const double len = chord.x.dot(nu) + medium.B();
    for (const auto& c : medium.components()) {
        const double R = c.support_radius();
        if (!std::isfinite(R)) return false;
        const double t = std::clamp((chord.x - c.center).dot(nu), 0.0, len);
        if ((chord.x - t * nu - c.center).norm() < R) return false;
    }
    return true;
}

}  // namespace

SeriesTruth chord_truth(const RefractiveMedium& medium, const ChordGeometry& chord, const SimulationOptions& options) {
    if (medium.trivial() || straight_path_misses(medium, chord)) return {1.0, 0.0};
    const bool need_ray = options.fidelity == Fidelity::ray || options.amplitude == AmplitudeModel::ray_traced;
    SeriesTruth t;
    if (need_ray) {
        const TravelTime tt = travel_time_to_point(medium, chord.nu, chord.x, options.shooting);
        if (options.amplitude == AmplitudeModel::ray_traced) t.A = amplitude_at(tt.ray);
        if (options.fidelity == Fidelity::ray) t.phi1 = tt.tau - medium.B() - chord.x.dot(chord.nu.vec());
    }
    if (options.fidelity == Fidelity::linearized) t.phi1 = exact_chord_integral(medium, chord).value;
    return t;
}

std::vector<IntensitySeries> simulate_slice(const RefractiveMedium& medium, const std::vector<ChordGeometry>& chords,
                                            const std::vector<double>& k, const SimulationOptions& options) {
    std::vector<IntensitySeries> out(chords.size());
    parallel_for(chords.size(), options.threads, [&](size_t i) {
        const SeriesTruth t = chord_truth(medium, chords[i], options);
        out[i] = synth_series(t.A, t.phi1, chords[i], k, options.synth, i);
    });
    return out;
}

void write_measurements(const std::string& path, const std::vector<IntensitySeries>& series) {
    ensure_parent_directory(path);
    std::ofstream out(path);
    if (!out) throw Error("write_measurements: cannot open '" + path + "'");
    out << "slice_a,alpha,d,k,f\n";
    for (const auto& s : series) {
        const std::string prefix =
            format_double(s.chord.slice.a) + "," + format_double(s.chord.alpha) + "," + format_double(s.chord.d) + ",";
        for (size_t i = 0; i < s.k.size(); ++i) out << prefix << format_double(s.k[i]) << ',' << format_double(s.f[i]) << '\n';
    }
}

std::vector<IntensitySeries> read_measurements(const std::string& path, double B) {
    const CsvTable t = read_csv(path);
    const size_t ca = t.column("slice_a"), cal = t.column("alpha"), cd = t.column("d"), ck = t.column("k"),
                 cf = t.column("f");
    std::vector<IntensitySeries> out;
    std::string last_key;
    for (const auto& row : t.rows) {
        const std::string key = row[ca] + "," + row[cal] + "," + row[cd];
        if (key != last_key) {
            IntensitySeries s;
            const Slice slice = Slice::make(parse_double(row[ca]), B);
            s.chord = boundary_from_chord(slice, parse_double(row[cal]), parse_double(row[cd]));
            out.push_back(std::move(s));
            last_key = key;
        }
        out.back().k.push_back(parse_double(row[ck]));
        out.back().f.push_back(parse_double(row[cf]));
    }
    return out;
}

}  // namespace phaseless
