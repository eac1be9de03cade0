#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phaseless/cormack.hpp"
#include "phaseless/forward.hpp"
#include "phaseless/phase.hpp"
#include "phaseless/radon.hpp"

namespace phaseless {

struct PipelineConfig {
    std::string phantom;        // phantom JSON; empty selects the built-in two-bump phantom unless measurements is set
    std::string measurements;   // measurement CSV for pure-data mode (no ground truth)
    double B = 0.0;             // ball radius; required in pure-data mode, otherwise taken from the phantom
    std::string output_dir = "out";
    std::vector<double> slices{0.0};
    int threads = 1;

    int n_alpha = 180;
    int n_offset = 128;

    KGridSpec k_grid{0.0, 3e-5, 0.02, 20.0, 2.5};
    SimulationOptions simulation;

    PeakControl peaks{1e-3, 1e-9, PhaseMode::refine, 0.0, 0, 10.0};
    SinogramOptions sinogram;

    FilterSpec filter;
    size_t image_size = 128;

    CormackOptions cormack;
    size_t radial_points = 0;  // 0: n_offset / 2

    bool write_measurements = false;
    bool write_pgm = true;
};

// Parses JSON (comments allowed); unknown keys and invalid values raise ConfigError.
PipelineConfig config_from_json_text(const std::string& text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json_text(const PipelineConfig& config);

// Checks the preconditions of run_pipeline; throws ConfigError.
void validate(const PipelineConfig& config);

struct FieldComparison {
    double rel_l2 = 0.0;
    double rel_linf = 0.0;
    CartesianField difference;  // candidate - reference on the mask
};

// Norms over the mask of `reference`; relative to the reference norms (absolute when the reference vanishes).
FieldComparison compare_fields(const CartesianField& reference, const CartesianField& candidate);

struct MethodMetrics {
    std::optional<double> rel_l2;    // vs ground truth
    std::optional<double> rel_linf;
    std::optional<double> baseline_rel_l2;  // same method on exact chord integrals
    double max_abs = 0.0;
};

struct SliceReport {
    double a = 0.0;
    double B_a = 0.0;
    size_t rays = 0;
    size_t unscattered = 0;
    size_t recovered = 0;
    size_t failed = 0;
    double failed_fraction = 0.0;
    std::optional<double> sinogram_rel_l2;  // retrieved vs exact chord integrals
    MethodMetrics radon;
    MethodMetrics cormack;
    double cross_rel_l2 = 0.0;         // cormack vs radon
    double forward_closure_rel_l2 = 0.0;
    int n_used = 0;
    double tail_fraction = 0.0;
    bool tail_warning = false;
    std::vector<int> picard_iterations;
};

struct ReconstructionReport {
    PipelineConfig config;
    bool trivial_medium = false;
    bool ground_truth = false;
    std::vector<SliceReport> slices;
    std::map<std::string, double> timings;  // seconds per stage, kept out of the report file
};

// Runs simulate -> retrieve -> invert (both) -> compare; writes all artifacts under config.output_dir.
ReconstructionReport run_pipeline(const PipelineConfig& config);

// Deterministic JSON (no timings).
std::string report_to_json_text(const ReconstructionReport& report);
std::string timings_to_json_text(const ReconstructionReport& report);

// Shared stage helpers used by the CLI.
std::vector<RetrievedRay> retrieve_all(const std::vector<IntensitySeries>& series, const PeakControl& control,
                                       int threads);
Sinogram exact_sinogram(const RefractiveMedium& medium, const Slice& slice, const ChordGrid& grid, int threads = 1);

}  // namespace phaseless
