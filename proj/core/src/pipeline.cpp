#include "phaseless/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "phaseless/csv.hpp"
#include "phaseless/parallel.hpp"

namespace phaseless {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: bad value for '" + name_ + "." + key + "'");
        }
    }

    template <class E>
    void get_enum(const char* key, E& out, E (*parse)(const std::string&)) {
        std::string s;
        get(key, s);
        if (!s.empty()) out = parse(s);
    }

    Section child(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, name_.empty() ? key : name_ + "." + key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError("config: unknown key '" + (name_.empty() ? "" : name_ + ".") + it.key() + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slice_tag(size_t index) { return "slice" + std::to_string(index); }

double rel_l2(const std::vector<double>& ref, const std::vector<double>& got) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        num += (got[i] - ref[i]) * (got[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double max_abs(const CartesianField& f) {
    double m = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i)
        if (f.mask[i]) m = std::max(m, std::abs(f.values[i]));
    return m;
}

// Recovers the alpha-major chord grid of one slice from measurement order.
ChordGrid grid_from_series(const std::vector<const IntensitySeries*>& series, double a) {
    ChordGrid g;
    for (const auto* s : series) {
        if (g.alphas.empty() || s->chord.alpha != g.alphas.back()) g.alphas.push_back(s->chord.alpha);
        if (g.alphas.size() == 1) g.offsets.push_back(s->chord.d);
    }
    if (g.alphas.size() * g.offsets.size() != series.size())
        throw ConfigError("measurements: slice a=" + format_double(a) + " is not an alpha-major grid");
    for (size_t i = 0; i < series.size(); ++i)
        if (series[i]->chord.alpha != g.alphas[i / g.offsets.size()] ||
            series[i]->chord.d != g.offsets[i % g.offsets.size()])
            throw ConfigError("measurements: slice a=" + format_double(a) + " is not an alpha-major grid");
    return g;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

PipelineConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    Section root(j, "");
    root.get("phantom", c.phantom);
    root.get("measurements", c.measurements);
    root.get("B", c.B);
    root.get("output_dir", c.output_dir);
    root.get("slices", c.slices);
    root.get("threads", c.threads);

    Section chords = root.child("chords");
    chords.get("angles", c.n_alpha);
    chords.get("offsets", c.n_offset);
    chords.finish();

    Section kg = root.child("k_grid");
    kg.get("k0", c.k_grid.k0);
    kg.get("phi_min", c.k_grid.phi_min);
    kg.get("phi_max", c.k_grid.phi_max);
    kg.get("samples_per_period", c.k_grid.samples_per_period);
    kg.get("periods", c.k_grid.periods);
    kg.finish();

    Section sim = root.child("simulation");
    sim.get_enum("fidelity", c.simulation.fidelity, &fidelity_from_string);
    sim.get_enum("amplitude", c.simulation.amplitude, &amplitude_model_from_string);
    sim.get("noise", c.simulation.synth.noise);
    sim.get("contamination", c.simulation.synth.contamination);
    sim.get("seed", c.simulation.synth.seed);
    sim.finish();

    Section ph = root.child("phase");
    ph.get_enum("mode", c.peaks.mode, &phase_mode_from_string);
    ph.get("peak_rel_tol", c.peaks.peak_rel_tol);
    ph.get("flatness_tol", c.peaks.flatness_tol);
    ph.get("noise_band", c.peaks.noise_band);
    ph.get("fit_half_width", c.peaks.fit_half_width);
    ph.get("k1", c.peaks.k1);
    ph.get("max_failed_fraction", c.sinogram.max_failed_fraction);
    ph.finish();

    Section rd = root.child("radon");
    rd.get_enum("apodization", c.filter.window, &apodization_from_string);
    rd.get("cutoff", c.filter.cutoff);
    rd.get("image_size", c.image_size);
    rd.finish();

    Section cm = root.child("cormack");
    cm.get("n_max", c.cormack.n_max);
    cm.get("tail_tolerance", c.cormack.tail_tolerance);
    cm.get_enum("method", c.cormack.volterra.method, &volterra_method_from_string);
    cm.get_enum("rhs", c.cormack.rhs, &rhs_method_from_string);
    cm.get("radial_points", c.radial_points);
    cm.get("tolerance", c.cormack.volterra.tolerance);
    cm.get("max_iterations", c.cormack.volterra.max_iterations);
    cm.get("regularity", c.cormack.volterra.regularity);
    cm.get("closure_target", c.cormack.closure_target);
    cm.finish();

    Section out = root.child("output");
    out.get("measurements", c.write_measurements);
    out.get("pgm", c.write_pgm);
    out.finish();
    root.finish();
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str());
}

std::string config_to_json_text(const PipelineConfig& c) {
    json j;
    j["phantom"] = c.phantom;
    j["measurements"] = c.measurements;
    j["B"] = c.B;
    j["output_dir"] = c.output_dir;
    j["slices"] = c.slices;
    j["threads"] = c.threads;
    j["chords"] = {{"angles", c.n_alpha}, {"offsets", c.n_offset}};
    j["k_grid"] = {{"k0", c.k_grid.k0},
                   {"phi_min", c.k_grid.phi_min},
                   {"phi_max", c.k_grid.phi_max},
                   {"samples_per_period", c.k_grid.samples_per_period},
                   {"periods", c.k_grid.periods}};
    j["simulation"] = {{"fidelity", to_string(c.simulation.fidelity)},
                       {"amplitude", to_string(c.simulation.amplitude)},
                       {"noise", c.simulation.synth.noise},
                       {"contamination", c.simulation.synth.contamination},
                       {"seed", c.simulation.synth.seed}};
    j["phase"] = {{"mode", to_string(c.peaks.mode)},
                  {"peak_rel_tol", c.peaks.peak_rel_tol},
                  {"flatness_tol", c.peaks.flatness_tol},
                  {"noise_band", c.peaks.noise_band},
                  {"fit_half_width", c.peaks.fit_half_width},
                  {"k1", c.peaks.k1},
                  {"max_failed_fraction", c.sinogram.max_failed_fraction}};
    j["radon"] = {{"apodization", to_string(c.filter.window)}, {"cutoff", c.filter.cutoff}, {"image_size", c.image_size}};
    j["cormack"] = {{"n_max", c.cormack.n_max},
                    {"tail_tolerance", c.cormack.tail_tolerance},
                    {"method", to_string(c.cormack.volterra.method)},
                    {"rhs", to_string(c.cormack.rhs)},
                    {"radial_points", c.radial_points},
                    {"tolerance", c.cormack.volterra.tolerance},
                    {"max_iterations", c.cormack.volterra.max_iterations},
                    {"regularity", c.cormack.volterra.regularity},
                    {"closure_target", c.cormack.closure_target}};
    j["output"] = {{"measurements", c.write_measurements}, {"pgm", c.write_pgm}};
    return j.dump(2);
}

void validate(const PipelineConfig& c) {
    if (!c.measurements.empty()) {
        if (!std::filesystem::exists(c.measurements))
            throw ConfigError("config: measurements file '" + c.measurements + "' does not exist");
        if (!(c.B > 0.0)) throw ConfigError("config: B must be positive in pure-data mode");
    } else if (!c.phantom.empty() && !std::filesystem::exists(c.phantom)) {
        throw ConfigError("config: phantom file '" + c.phantom + "' does not exist");
    }
    if (c.measurements.empty() && c.slices.empty()) throw ConfigError("config: no slices");
    if (c.n_alpha < 4 || c.n_offset < 8) throw ConfigError("config: chord grid too small (angles >= 4, offsets >= 8)");
    if (c.image_size < 8) throw ConfigError("config: radon.image_size must be at least 8");
    if (c.threads < 1) throw ConfigError("config: threads must be at least 1");
    if (c.cormack.n_max < 0) throw ConfigError("config: cormack.n_max must be nonnegative");
    if (!(c.cormack.closure_target >= 0.0)) throw ConfigError("config: cormack.closure_target must be nonnegative");
    if (!(c.cormack.volterra.regularity > 0.0 && c.cormack.volterra.regularity < 1.0))
        throw ConfigError("config: cormack.regularity must lie in (0, 1)");
    if (c.radial_points != 0 && c.radial_points < 8) throw ConfigError("config: cormack.radial_points must be >= 8");
    if (!(c.sinogram.max_failed_fraction >= 0.0 && c.sinogram.max_failed_fraction <= 1.0))
        throw ConfigError("config: phase.max_failed_fraction must lie in [0, 1]");
    if (!(c.simulation.synth.noise >= 0.0)) throw ConfigError("config: simulation.noise must be nonnegative");
    if (c.measurements.empty()) {
        const KGridSpec& k = c.k_grid;
        if (!(k.phi_min > 0.0) || !(k.phi_max >= k.phi_min))
            throw ConfigError("config: k_grid needs 0 < phi_min <= phi_max");
        if (!(k.samples_per_period >= 4.0)) throw ConfigError("config: k_grid.samples_per_period must be >= 4");
        // Two interference maxima of the weakest configured ray must fit in the window.
        if (!(k.periods >= 2.0)) throw ConfigError("config: k_grid.periods must be >= 2 to resolve phi_min");
    }
}

FieldComparison compare_fields(const CartesianField& ref, const CartesianField& got) {
    if (!ref.same_grid(got)) throw PreconditionError("compare_fields: grids differ");
    FieldComparison c;
    c.difference = ref;
    double num = 0.0, den = 0.0, inf = 0.0, ref_inf = 0.0;
    for (size_t i = 0; i < ref.values.size(); ++i) {
        if (!ref.mask[i]) {
            c.difference.values[i] = 0.0;
            continue;
        }
        const double d = got.values[i] - ref.values[i];
        c.difference.values[i] = d;
        num += d * d;
        den += ref.values[i] * ref.values[i];
        inf = std::max(inf, std::abs(d));
        ref_inf = std::max(ref_inf, std::abs(ref.values[i]));
    }
    c.rel_l2 = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    c.rel_linf = ref_inf > 0.0 ? inf / ref_inf : inf;
    return c;
}

std::vector<RetrievedRay> retrieve_all(const std::vector<IntensitySeries>& series, const PeakControl& control,
                                       int threads) {
    std::vector<RetrievedRay> rays(series.size());
    parallel_for(series.size(), threads, [&](size_t i) { rays[i] = retrieve(series[i], control); });
    return rays;
}

Sinogram exact_sinogram(const RefractiveMedium& medium, const Slice& slice, const ChordGrid& grid, int threads) {
    Sinogram s(slice, grid);
    const auto chords = grid_chords(slice, grid);
    parallel_for(chords.size(), threads, [&](size_t i) { s.psi[i] = exact_chord_integral(medium, chords[i]).value; });
    return s;
}

ReconstructionReport run_pipeline(const PipelineConfig& config) {
    validate(config);
    ReconstructionReport report;
    report.config = config;
    auto clock = std::chrono::steady_clock::now;
    const std::filesystem::path out_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);

    const bool data_mode = !config.measurements.empty();
    RefractiveMedium medium;
    std::vector<IntensitySeries> measured;
    std::vector<double> slices = config.slices;
    if (data_mode) {
        auto t0 = clock();
        measured = read_measurements(config.measurements, config.B);
        report.timings["read_measurements"] = seconds_since(t0);
        std::vector<double> present;
        for (const auto& s : measured)
            if (std::find(present.begin(), present.end(), s.chord.slice.a) == present.end())
                present.push_back(s.chord.slice.a);
        if (slices.empty()) slices = present;
        for (double a : slices)
            if (std::find(present.begin(), present.end(), a) == present.end())
                throw ConfigError("config: slice a=" + format_double(a) + " not present in the measurements");
    } else {
        medium = config.phantom.empty() ? default_two_bump_phantom() : load_phantom(config.phantom);
        report.ground_truth = true;
        report.trivial_medium = medium.trivial();
        std::ofstream(out_dir / "phantom.json") << phantom_to_json_text(medium) << '\n';
    }
    const double B = data_mode ? config.B : medium.B();
    for (double a : slices)
        if (!(std::abs(a) < B)) throw ConfigError("config: slice a=" + format_double(a) + " outside (-B, B)");

    std::vector<double> k;
    if (!data_mode) k = make_k_grid(B, config.k_grid).values();
    SimulationOptions sim = config.simulation;
    sim.threads = config.threads;
    CormackOptions cormack = config.cormack;
    cormack.threads = config.threads;

    bool all_unscattered = true;
    for (size_t si = 0; si < slices.size(); ++si) {
        const Slice slice = Slice::make(slices[si], B);
        const std::string tag = slice_tag(si);
        SliceReport sr;
        sr.a = slice.a;
        sr.B_a = slice.B_a;

        ChordGrid grid;
        std::vector<RetrievedRay> rays;
        auto t0 = clock();
        if (data_mode) {
            std::vector<const IntensitySeries*> mine;
            for (const auto& s : measured)
                if (s.chord.slice.a == slice.a) mine.push_back(&s);
            grid = grid_from_series(mine, slice.a);
            rays.resize(mine.size());
            parallel_for(mine.size(), config.threads, [&](size_t i) { rays[i] = retrieve(*mine[i], config.peaks); });
        } else {
            grid = ChordGrid::uniform(slice, config.n_alpha, config.n_offset);
            const auto chords = grid_chords(slice, grid);
            std::vector<IntensitySeries> kept(config.write_measurements ? chords.size() : 0);
            rays.resize(chords.size());
            try {
                // Series are retrieved as they are synthesized; they are only kept when written out.
                parallel_for(chords.size(), config.threads, [&](size_t i) {
                    const SeriesTruth t = chord_truth(medium, chords[i], sim);
                    IntensitySeries s = synth_series(t.A, t.phi1, chords[i], k, sim.synth, i);
                    rays[i] = retrieve(s, config.peaks);
                    if (config.write_measurements) kept[i] = std::move(s);
                });
            } catch (const Error& e) {
                throw StageError("simulate", tag + ": " + e.what());
            }
            if (config.write_measurements) write_measurements((out_dir / (tag + "_measurements.csv")).string(), kept);
        }
        report.timings[tag + ".simulate_retrieve"] = seconds_since(t0);

        t0 = clock();
        const Sinogram sino = build_sinogram(rays, slice, grid, config.sinogram);
        write_sinogram((out_dir / (tag + "_sinogram.csv")).string(), sino);
        report.timings[tag + ".retrieve"] = seconds_since(t0);
        sr.rays = rays.size();
        for (const auto& r : rays) {
            sr.unscattered += r.status == RayStatus::unscattered;
            sr.recovered += r.status == RayStatus::recovered;
            sr.failed += r.status == RayStatus::failed;
        }
        sr.failed_fraction = sr.rays ? static_cast<double>(sr.failed) / static_cast<double>(sr.rays) : 0.0;
        all_unscattered = all_unscattered && sr.unscattered == sr.rays;

        t0 = clock();
        const CartesianField fbp = radon_invert(sino, config.filter, config.image_size, config.threads);
        write_field_csv((out_dir / (tag + "_radon.csv")).string(), fbp);
        if (config.write_pgm) write_pgm((out_dir / (tag + "_radon.pgm")).string(), fbp);
        report.timings[tag + ".radon"] = seconds_since(t0);

        t0 = clock();
        const PolarField pf = cormack_reconstruct(to_polar(sino, config.radial_points), cormack);
        const CartesianField cf = to_cartesian(pf, config.image_size);
        write_polar_field((out_dir / (tag + "_cormack_polar.csv")).string(), pf);
        write_field_csv((out_dir / (tag + "_cormack.csv")).string(), cf);
        if (config.write_pgm) write_pgm((out_dir / (tag + "_cormack.pgm")).string(), cf);
        report.timings[tag + ".cormack"] = seconds_since(t0);
        sr.n_used = pf.n_used();
        sr.tail_fraction = pf.tail_fraction;
        sr.tail_warning = pf.tail_warning;
        sr.picard_iterations = pf.iterations;

        t0 = clock();
        sr.radon.max_abs = max_abs(fbp);
        sr.cormack.max_abs = max_abs(cf);
        sr.cross_rel_l2 = compare_fields(fbp, cf).rel_l2;
        sr.forward_closure_rel_l2 = rel_l2(sino.psi, radon_forward(to_cartesian(pf, 2 * config.image_size), grid).psi);
        if (!data_mode) {
            const CartesianField truth = sample_medium(medium, slice, config.image_size);
            write_field_csv((out_dir / (tag + "_truth.csv")).string(), truth);
            const auto cr = compare_fields(truth, fbp), cc = compare_fields(truth, cf);
            sr.radon.rel_l2 = cr.rel_l2;
            sr.radon.rel_linf = cr.rel_linf;
            sr.cormack.rel_l2 = cc.rel_l2;
            sr.cormack.rel_linf = cc.rel_linf;

            const Sinogram exact = exact_sinogram(medium, slice, grid, config.threads);
            sr.sinogram_rel_l2 = rel_l2(exact.psi, sino.psi);
            sr.radon.baseline_rel_l2 =
                compare_fields(truth, radon_invert(exact, config.filter, config.image_size, config.threads)).rel_l2;
            sr.cormack.baseline_rel_l2 =
                compare_fields(truth, to_cartesian(cormack_reconstruct(to_polar(exact, config.radial_points), cormack),
                                                   config.image_size))
                    .rel_l2;
        }
        report.timings[tag + ".compare"] = seconds_since(t0);
        report.slices.push_back(std::move(sr));
    }
    if (data_mode) report.trivial_medium = all_unscattered;

    std::ofstream(out_dir / "report.json") << report_to_json_text(report) << '\n';
    std::ofstream(out_dir / "timings.json") << timings_to_json_text(report) << '\n';
    return report;
}

std::string report_to_json_text(const ReconstructionReport& r) {
    json j;
    j["config"] = json::parse(config_to_json_text(r.config));
    j["ground_truth"] = r.ground_truth;
    j["trivial_medium"] = r.trivial_medium;
    j["slices"] = json::array();
    auto method = [&](const MethodMetrics& m) {
        json o;
        o["rel_l2"] = optional_number(m.rel_l2);
        o["rel_linf"] = optional_number(m.rel_linf);
        o["baseline_rel_l2"] = optional_number(m.baseline_rel_l2);
        o["degradation"] = m.rel_l2 && m.baseline_rel_l2 && *m.baseline_rel_l2 > 0.0
                               ? json(*m.rel_l2 / *m.baseline_rel_l2)
                               : json(nullptr);
        o["max_abs"] = m.max_abs;
        return o;
    };
    for (const auto& s : r.slices) {
        json o;
        o["a"] = s.a;
        o["B_a"] = s.B_a;
        o["rays"] = s.rays;
        o["unscattered"] = s.unscattered;
        o["recovered"] = s.recovered;
        o["failed"] = s.failed;
        o["failed_fraction"] = s.failed_fraction;
        o["sinogram_rel_l2"] = optional_number(s.sinogram_rel_l2);
        o["radon"] = method(s.radon);
        o["cormack"] = method(s.cormack);
        o["cormack"]["n_used"] = s.n_used;
        o["cormack"]["tail_fraction"] = s.tail_fraction;
        o["cormack"]["tail_warning"] = s.tail_warning;
        o["cormack"]["picard_iterations"] = s.picard_iterations;
        o["cross_rel_l2"] = finite_or_null(s.cross_rel_l2);
        o["forward_closure_rel_l2"] = finite_or_null(s.forward_closure_rel_l2);
        j["slices"].push_back(o);
    }
    return j.dump(2);
}

std::string timings_to_json_text(const ReconstructionReport& r) {
    json j = json::object();
    for (const auto& [stage, t] : r.timings) j[stage] = t;
    return j.dump(2);
}

}  // namespace phaseless
