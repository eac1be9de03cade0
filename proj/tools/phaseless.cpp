#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phaseless/pipeline.hpp"
#include "phaseless/csv.hpp"
#include "phaseless/raytrace.hpp"

using namespace phaseless;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct KGridFlags {
    KGridSpec spec{0.0, 3e-5, 0.02, 20.0, 2.5};

    void add(CLI::App* app) {
        app->add_option("--k0", spec.k0, "first wavenumber (0: 50 * 2 pi / 2B)");
        app->add_option("--phi-min", spec.phi_min, "smallest travel-time perturbation to resolve, relative to B");
        app->add_option("--phi-max", spec.phi_max, "largest expected perturbation, relative to B");
        app->add_option("--samples-per-period", spec.samples_per_period);
        app->add_option("--periods", spec.periods, "periods of phi-min inside the window");
    }
};

struct GridFlags {
    int angles = 180;
    int offsets = 128;
    double slice = 0.0;

    void add(CLI::App* app) {
        app->add_option("--angles", angles, "chord normal angles over (0, pi]");
        app->add_option("--offsets", offsets, "chord offsets over (-B_a, B_a)");
        app->add_option("--slice", slice, "slice height a");
    }
};

RefractiveMedium phantom_or_default(const std::string& path) {
    return path.empty() ? default_two_bump_phantom() : load_phantom(path);
}

void print_field_summary(const char* name, const CartesianField& f) {
    double mx = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i)
        if (f.mask[i]) mx = std::max(mx, std::abs(f.values[i]));
    std::printf("%s: %zux%zu pixels, max |beta| %.6g\n", name, f.nx, f.ny, mx);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phaseless inverse scattering: simulate, retrieve phase, reconstruct"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    // phantom validate
    auto* phantom = app.add_subcommand("phantom", "phantom utilities");
    phantom->require_subcommand(1);
    auto* validate_cmd = phantom->add_subcommand("validate", "load a phantom and report its diagnostics");
    std::string phantom_path;
    double budget = 0.05;
    validate_cmd->add_option("path", phantom_path, "phantom JSON")->required();
    validate_cmd->add_option("--budget", budget, "linearization budget for max |beta|");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "synthesize intensity series for one slice");
    std::string sim_phantom, sim_out = "measurements.csv", fidelity = "linearized", amplitude = "ray_traced";
    SynthOptions synth;
    KGridFlags sim_k;
    GridFlags sim_grid;
    simulate->add_option("--phantom", sim_phantom, "phantom JSON (default: built-in two-bump)");
    simulate->add_option("-o,--output", sim_out, "measurement CSV");
    simulate->add_option("--fidelity", fidelity)->check(CLI::IsMember({"linearized", "ray"}));
    simulate->add_option("--amplitude", amplitude)->check(CLI::IsMember({"ray_traced", "unit"}));
    simulate->add_option("--noise", synth.noise, "relative Gaussian noise");
    simulate->add_option("--contamination", synth.contamination, "c in c k^-1 cos(k phi1 + chi)");
    simulate->add_option("--seed", synth.seed);
    sim_k.add(simulate);
    sim_grid.add(simulate);

    // retrieve
    auto* retrieve_cmd = app.add_subcommand("retrieve", "recover the sinogram from measurements");
    std::string ret_in, ret_out = "sinogram.csv", mode = "refine";
    double ret_B = 1.0, ret_slice = 0.0;
    PeakControl peaks{1e-3, 1e-9, PhaseMode::refine, 0.0, 0, 10.0};
    SinogramOptions sino_opt;
    retrieve_cmd->add_option("-i,--input", ret_in, "measurement CSV")->required();
    retrieve_cmd->add_option("-o,--output", ret_out, "sinogram CSV");
    retrieve_cmd->add_option("--B", ret_B, "ball radius");
    retrieve_cmd->add_option("--slice", ret_slice, "slice height a");
    retrieve_cmd->add_option("--mode", mode)->check(CLI::IsMember({"first_two", "refine"}));
    retrieve_cmd->add_option("--peak-rel-tol", peaks.peak_rel_tol);
    retrieve_cmd->add_option("--flatness-tol", peaks.flatness_tol);
    retrieve_cmd->add_option("--noise-band", peaks.noise_band);
    retrieve_cmd->add_option("--k1", peaks.k1);
    retrieve_cmd->add_option("--max-failed-fraction", sino_opt.max_failed_fraction);

    // invert-radon
    auto* radon_cmd = app.add_subcommand("invert-radon", "filtered backprojection of a sinogram");
    std::string rad_in, rad_phantom, rad_out = "radon.csv", rad_pgm, apod = "hann";
    double rad_B = 1.0, cutoff = 0.9;
    size_t rad_size = 128;
    std::string filter = "ramp";
    GridFlags rad_grid;
    radon_cmd->add_option("-i,--input", rad_in, "sinogram CSV");
    radon_cmd->add_option("--phantom", rad_phantom, "use exact chord integrals of this phantom instead of --input");
    radon_cmd->add_option("--B", rad_B, "ball radius (with --input)");
    radon_cmd->add_option("-o,--output", rad_out, "field CSV");
    radon_cmd->add_option("--pgm", rad_pgm, "16-bit PGM preview");
    radon_cmd->add_option("--filter", filter)->check(CLI::IsMember({"ramp"}));
    radon_cmd->add_option("--apodization", apod)->check(CLI::IsMember({"none", "cosine", "hann"}));
    radon_cmd->add_option("--cutoff", cutoff, "apodization cutoff, fraction of Nyquist");
    radon_cmd->add_option("--size", rad_size, "output pixels per axis");
    rad_grid.add(radon_cmd);

    // invert-cormack
    auto* cormack_cmd = app.add_subcommand("invert-cormack", "harmonic Abel-Volterra inversion of a sinogram");
    std::string cor_in, cor_phantom, cor_out = "cormack.csv", cor_polar, cor_pgm, method = "nystrom";
    double cor_B = 1.0;
    size_t cor_size = 128, radial_points = 0;
    CormackOptions cormack;
    GridFlags cor_grid;
    cormack_cmd->add_option("-i,--input", cor_in, "sinogram CSV");
    cormack_cmd->add_option("--phantom", cor_phantom, "use exact chord integrals of this phantom instead of --input");
    cormack_cmd->add_option("--B", cor_B, "ball radius (with --input)");
    cormack_cmd->add_option("-o,--output", cor_out, "resampled field CSV");
    cormack_cmd->add_option("--polar", cor_polar, "harmonic CSV (n,r,re,im)");
    cormack_cmd->add_option("--pgm", cor_pgm, "16-bit PGM preview");
    cormack_cmd->add_option("--nmax", cormack.n_max, "largest harmonic");
    cormack_cmd->add_option("--method", method)->check(CLI::IsMember({"picard", "nystrom"}));
    cormack_cmd->add_option("--radial-points", radial_points, "radial grid size (0: offsets / 2)");
    cormack_cmd->add_option("--regularity", cormack.volterra.regularity, "power-law closure level");
    cormack_cmd->add_option("--closure-target", cormack.closure_target, "noise-floor closure target; 0 disables");
    cormack_cmd->add_option("--size", cor_size, "output pixels per axis");
    cor_grid.add(cormack_cmd);

    // run
    auto* run_cmd = app.add_subcommand("run", "full pipeline from a JSON config");
    std::string config_path, output_dir;
    run_cmd->add_option("-c,--config", config_path, "pipeline config (JSON, comments allowed)")->required();
    run_cmd->add_option("--output-dir", output_dir, "override output_dir");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "relative L2 / Linf between two field CSVs");
    std::string cmp_ref, cmp_cand, cmp_out;
    double cmp_B = 1.0, cmp_slice = 0.0;
    compare_cmd->add_option("reference", cmp_ref)->required();
    compare_cmd->add_option("candidate", cmp_cand)->required();
    compare_cmd->add_option("--B", cmp_B, "ball radius");
    compare_cmd->add_option("--slice", cmp_slice, "slice height a");
    compare_cmd->add_option("-o,--output", cmp_out, "difference field CSV");

    // trace
    auto* trace_cmd = app.add_subcommand("trace", "trace one chord and print its ray diagnostics");
    std::string tr_phantom;
    double tr_alpha = 0.0, tr_d = 0.0, tr_slice = 0.0;
    trace_cmd->add_option("--phantom", tr_phantom, "phantom JSON (default: built-in two-bump)");
    trace_cmd->add_option("--alpha", tr_alpha, "chord normal angle");
    trace_cmd->add_option("--d", tr_d, "chord offset");
    trace_cmd->add_option("--slice", tr_slice, "slice height a");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    // Exact or file-backed sinogram for the two inversion commands.
    auto load_sinogram = [&](const std::string& in, const std::string& ph, double B, const GridFlags& g) {
        if (in.empty() == ph.empty()) throw ConfigError("give exactly one of --input and --phantom");
        if (!in.empty()) return read_sinogram(in, B);
        const RefractiveMedium m = load_phantom(ph);
        const Slice s = Slice::make(g.slice, m.B());
        return exact_sinogram(m, s, ChordGrid::uniform(s, g.angles, g.offsets), threads);
    };

    try {
        if (*validate_cmd) {
            const RefractiveMedium m = load_phantom(phantom_path);
            const SmallnessReport sm = check_smallness(m, budget);
            CurvatureGrid cg;
            cg.radius = m.B();
            cg.points_per_axis = 21;
            const CurvatureReport cr = curvature_check(m, cg);
            std::printf("components: %zu\nB: %.6g\nsupport radius: %.6g\n", m.components().size(), m.B(),
                        m.support_radius());
            std::printf("max |beta|: %.6g (budget %.3g): %s\n", sm.max_beta, sm.budget,
                        sm.within_budget ? "ok" : "exceeds budget");
            std::printf("curvature condition: %s (min eigenvalue %.6g at %.4g %.4g %.4g)\n",
                        cr.satisfied ? "satisfied" : "not satisfied", cr.worst_eigenvalue, cr.worst_point.x(),
                        cr.worst_point.y(), cr.worst_point.z());
            if (!sm.within_budget) return kExitConfig;
        } else if (*simulate) {
            const RefractiveMedium m = phantom_or_default(sim_phantom);
            const Slice s = Slice::make(sim_grid.slice, m.B());
            const ChordGrid grid = ChordGrid::uniform(s, sim_grid.angles, sim_grid.offsets);
            SimulationOptions opt;
            opt.fidelity = fidelity_from_string(fidelity);
            opt.amplitude = amplitude_model_from_string(amplitude);
            opt.synth = synth;
            opt.threads = threads;
            const auto k = make_k_grid(m.B(), sim_k.spec).values();
            const auto series = simulate_slice(m, grid_chords(s, grid), k, opt);
            write_measurements(sim_out, series);
            std::printf("%zu chords x %zu wavenumbers -> %s\n", series.size(), k.size(), sim_out.c_str());
        } else if (*retrieve_cmd) {
            peaks.mode = phase_mode_from_string(mode);
            auto series = read_measurements(ret_in, ret_B);
            std::erase_if(series, [&](const IntensitySeries& s) { return s.chord.slice.a != ret_slice; });
            if (series.empty()) throw ConfigError("no measurements for slice a=" + format_double(ret_slice));
            const Slice s = series.front().chord.slice;
            ChordGrid grid;
            for (const auto& x : series) {
                if (grid.alphas.empty() || grid.alphas.back() != x.chord.alpha) grid.alphas.push_back(x.chord.alpha);
                if (grid.alphas.size() == 1) grid.offsets.push_back(x.chord.d);
            }
            if (grid.size() != series.size()) throw ConfigError("measurements are not an alpha-major chord grid");
            const auto rays = retrieve_all(series, peaks, threads);
            const Sinogram sino = build_sinogram(rays, s, grid, sino_opt);
            write_sinogram(ret_out, sino);
            size_t counts[3] = {0, 0, 0};
            for (const auto& r : rays) ++counts[static_cast<int>(r.status)];
            std::printf("unscattered %zu, recovered %zu, failed %zu -> %s\n", counts[0], counts[1], counts[2],
                        ret_out.c_str());
        } else if (*radon_cmd) {
            const Sinogram sino = load_sinogram(rad_in, rad_phantom, rad_B, rad_grid);
            const CartesianField f = radon_invert(sino, {apodization_from_string(apod), cutoff}, rad_size, threads);
            write_field_csv(rad_out, f);
            if (!rad_pgm.empty()) write_pgm(rad_pgm, f);
            print_field_summary("radon", f);
        } else if (*cormack_cmd) {
            const Sinogram sino = load_sinogram(cor_in, cor_phantom, cor_B, cor_grid);
            cormack.volterra.method = volterra_method_from_string(method);
            cormack.threads = threads;
            PolarField pf;
            try {
                pf = cormack_reconstruct(to_polar(sino, radial_points), cormack);
            } catch (const PreconditionError& e) {
                throw ConfigError(e.what());
            }
            const CartesianField f = to_cartesian(pf, cor_size);
            write_field_csv(cor_out, f);
            if (!cor_polar.empty()) write_polar_field(cor_polar, pf);
            if (!cor_pgm.empty()) write_pgm(cor_pgm, f);
            if (pf.tail_warning)
                std::fprintf(stderr, "warning: spectral tail %.3g beyond n_max\n", pf.tail_fraction);
            std::printf("harmonics used: %d\n", pf.n_used());
            print_field_summary("cormack", f);
        } else if (*run_cmd) {
            PipelineConfig cfg = load_config(config_path);
            if (!output_dir.empty()) cfg.output_dir = output_dir;
            if (app.get_option("--threads")->count()) cfg.threads = threads;
            const ReconstructionReport r = run_pipeline(cfg);
            for (const auto& s : r.slices) {
                std::printf("slice a=%g: failed %.4f", s.a, s.failed_fraction);
                if (s.radon.rel_l2) std::printf(", radon %.4g, cormack %.4g", *s.radon.rel_l2, *s.cormack.rel_l2);
                std::printf(", cross %.4g, closure %.4g\n", s.cross_rel_l2, s.forward_closure_rel_l2);
            }
            if (r.trivial_medium) std::printf("trivial medium\n");
            std::printf("report: %s/report.json\n", cfg.output_dir.c_str());
        } else if (*compare_cmd) {
            const Slice s = Slice::make(cmp_slice, cmp_B);
            const FieldComparison c = compare_fields(read_field_csv(cmp_ref, s), read_field_csv(cmp_cand, s));
            if (!cmp_out.empty()) write_field_csv(cmp_out, c.difference);
            std::printf("rel_l2 %.6g\nrel_linf %.6g\n", c.rel_l2, c.rel_linf);
        } else if (*trace_cmd) {
            const RefractiveMedium m = phantom_or_default(tr_phantom);
            const Slice s = Slice::make(tr_slice, m.B());
            const ChordGeometry chord = boundary_from_chord(s, tr_alpha, tr_d);
            const TravelTime tt = travel_time_to_point(m, chord.nu, chord.x);
            std::printf("tau %.12g\nphi1 (ray) %.12g\nphi1 (chord integral) %.12g\nA %.12g\n", tt.tau,
                        tt.tau - m.B() - chord.x.dot(chord.nu.vec()), exact_chord_integral(m, chord).value,
                        amplitude_at(tt.ray));
            std::printf("shooting iterations %d, residual %.3g, steps %zu, caustic %s\n", tt.iterations, tt.residual,
                        tt.ray.steps, tt.ray.caustic ? "yes" : "no");
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const StageError& e) {
        std::fprintf(stderr, "stage '%s' failed: %s\n", e.stage().c_str(), e.what());
        return kExitStage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitStage;
    }
    return 0;
}
