#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchforge/attack.hpp"

namespace pf::evaluate {

using compose::PatchTexture;

// Camera pose deltas relative to the base camera orbit: degrees, degrees,
// meters.
struct EvalPose {
    double azimuth = 0.0;
    double elevation = 0.0;
    double distance = 0.0;

    scene::TransformSample to_sample() const;
};

struct EvalGrid {
    std::vector<EvalPose> poses;
    // Buffers for the scene the grid was built on, one per pose. Reused by
    // evaluate_patch so repeated evaluations skip re-rendering.
    std::vector<ViewBuffers> buffers;
    long dropped = 0;
};

// Cartesian grid over the camera dimensions (azimuth, elevation, distance
// ranges with per-dimension counts). Poses where the patch strip is not
// visible in the clean scene fail the pre-pass and are dropped.
EvalGrid build_eval_grid(const scene::Scene& sc,
                         const scene::TransformDistribution& azimuth, int azimuth_count,
                         const scene::TransformDistribution& elevation, int elevation_count,
                         const scene::TransformDistribution& distance, int distance_count,
                         int threads = 1);

struct PoseRecord {
    EvalPose pose;
    int predicted = 0;
    double confidence = 0.0;
};

// Per-patch classification tally over a pose grid (original / target /
// other), plus the per-pose prediction log.
struct RateReport {
    std::string variant;
    std::string target_class;
    long og = 0, tg = 0, ot = 0;
    std::vector<PoseRecord> log;

    long n() const { return og + tg + ot; }
    double og_pct() const { return n() ? 100.0 * og / n() : 0.0; }
    double tg_pct() const { return n() ? 100.0 * tg / n() : 0.0; }
    double ot_pct() const { return n() ? 100.0 * ot / n() : 0.0; }
};

// Renders each pose (patch == nullptr -> clean scene), classifies, tallies.
// Read-only in scene, patch, grid, and model.
RateReport evaluate_patch(const scene::Scene& sc, const PatchTexture* patch,
                          const EvalGrid& grid, const model::Model& m, int y_og, int y_tg,
                          int threads = 1);

// Per-pose argmax predictions with confidence; one render+forward per pose.
std::vector<std::pair<int, double>> predict_grid(const scene::Scene& sc,
                                                 const PatchTexture* patch, const EvalGrid& grid,
                                                 const model::Model& m, int threads = 1);

RateReport tally(const std::vector<std::pair<int, double>>& preds, const EvalGrid& grid,
                 int y_og, int y_tg);

// ---- holdout suite (unexpected scene transformations) ---------------------

enum class Mutation {
    Identity,
    PatchUp,
    PatchDown,
    MatRed,
    MatWood,
    ObjectColor,
    ObjectShape,
    Flipped,
};

extern const std::vector<Mutation> kHoldoutSuite;  // the seven non-identity mutations
std::string mutation_name(Mutation m);
Mutation mutation_from_string(const std::string& s);

struct HoldoutParams {
    std::string central_tag = "mug";  // object carrying the patch host
    std::string desk_object = "desk";
    double patch_shift = 0.02;        // meters along the host axis for up/down
    Rgb mat_red{0.72, 0.12, 0.10};
    Rgb mat_wood{0.48, 0.30, 0.16};
    Rgb object_color{0.25, 0.28, 0.45};
};

// Applies one mutation to a copy of the scene. Throws ConfigError when the
// mutation does not fit the scene (e.g. patch_up exceeds the host height).
scene::Scene mutate_scene(const scene::Scene& sc, Mutation mutation, const HoldoutParams& params);

// One report per mutation, on the fixed pose grid (poses only; buffers are
// re-rendered because each mutation changes the scene). Mutations apply to
// the evaluation scene only, never to crafting.
std::vector<std::pair<std::string, RateReport>> run_holdout(
    const scene::Scene& sc, const PatchTexture& patch, const std::vector<Mutation>& suite,
    const EvalGrid& grid, const model::Model& m, int y_og, int y_tg,
    const HoldoutParams& params, int threads = 1);

// ---- statistics ------------------------------------------------------------

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
};

// Two-sided paired t-test on differences a-b (sample sd, n-1 dof). The
// p-value integrates the t-density numerically (adaptive Simpson, absolute
// error <= 1e-6). sd == 0 with nonzero mean raises a degenerate-variance
// error; sd == 0 with zero mean yields t = 0, p = 1.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// ---- report output ---------------------------------------------------------

enum class ReportFormat { Csv, MarkdownTable };

// One row per (variant, target class) with Og/Tg/Ot percentages to one
// decimal; byte-deterministic.
std::string format_report(const std::vector<RateReport>& reports, ReportFormat format);
void write_report(const std::vector<RateReport>& reports, ReportFormat format,
                  const std::string& path);

// JSON-lines log: pose parameters, predicted class name, confidence.
void write_pose_log(const RateReport& report, const std::vector<std::string>& class_names,
                    const std::string& path);

}  // namespace pf::evaluate
