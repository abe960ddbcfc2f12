#pragma once

#include <optional>

#include "patchforge/compose.hpp"
#include "patchforge/model.hpp"
#include "patchforge/raster.hpp"

namespace pf::attack {

using compose::PatchGradient;
using compose::PatchTexture;

struct AdamHyper {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

enum class SamplingMode { Random, Systematic };
enum class PatchInit { Gray, Noise };

struct AttackConfig {
    int y_og = 0;
    int y_tg = 1;
    double kappa = 1.0;      // weight of the push-away-from-original CE term
    double lambda_tv = 1e-3; // weight of the smoothness term
    SamplingMode mode = SamplingMode::Systematic;
    int n_views = 64;                                        // random mode
    std::vector<std::pair<std::string, int>> systematic_counts;  // (dimension id, count)
    int batch_size = 16;
    int iterations = 400;  // total optimizer steps; 0 is a no-op run
    AdamHyper adam;
    uint64_t seed = 0;
    int patch_h = 64, patch_w = 128;
    PatchInit init = PatchInit::Gray;
    int validation_views = 48;
    double stop_fooling_rate = 2.0;  // > 1 disables early stopping
    int threads = 1;

    void validate() const;
};

// The EOT view set X = {(b_i, p_i)}.
struct ViewSet {
    std::vector<ViewBuffers> views;
};

// Builds the view set for one epoch. Random mode draws n_views i.i.d.
// samples (epoch varies the stream); views with an empty mask are resampled.
// Systematic mode enumerates the per-dimension grid once and drops
// empty-mask views with a warning. More than half the grid dropped, or
// random resampling exhausted, raises a range-misconfiguration error.
ViewSet build_view_set(const scene::Scene& sc,
                       const std::vector<scene::TransformDistribution>& dists,
                       const AttackConfig& config, uint64_t epoch = 0);

// Smoothed isotropic total variation with forward differences:
//   sum over pixels/channels of sqrt(dx^2 + dy^2 + eps_tv), eps_tv = 1e-8.
// Out-of-bounds differences are zero. Returns the value and its gradient.
std::pair<double, PatchGradient> total_variation(const PatchTexture& p);

struct LossBreakdown {
    double total = 0.0;
    double ce_tg = 0.0;  // mean over the batch
    double ce_og = 0.0;
    double tv = 0.0;
};

// The attack loss over a batch of views:
//   L = CE(X~, y_tg) - kappa * CE(X~, y_og) + lambda * TV(P)
// with the CE terms averaged over views. The gradient flows through
// backprop_compose per view (fixed reduction order) plus the TV term.
std::pair<LossBreakdown, PatchGradient> attack_loss(const PatchTexture& p,
                                                    const std::vector<const ViewBuffers*>& views,
                                                    const model::Model& m,
                                                    const AttackConfig& config);

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

// Standard bias-corrected Adam step followed by projection onto [0,1].
void adam_step(PatchTexture& p, const PatchGradient& grad, AdamState& state,
               const AdamHyper& hyper);

struct TraceRow {
    int iteration = 0;
    double loss = 0.0, ce_tg = 0.0, ce_og = 0.0, tv = 0.0;
    double val_fooling = -1.0;  // >= 0 only on validation iterations
};

struct CraftResult {
    PatchTexture patch;          // best by validation fooling rate
    std::vector<TraceRow> trace;
    double best_val_fooling = 0.0;
    int best_iteration = 0;      // 0 = the initial patch
    int iterations_run = 0;
    bool improved = false;
    long grid_total = 0;   // systematic mode bookkeeping
    long grid_kept = 0;
};

// Optimizes the patch with Adam over minibatches of views. Random mode
// resamples the view set each epoch; systematic mode shuffles the fixed grid
// order per epoch. Stops at config.iterations or once the validation fooling
// rate reaches stop_fooling_rate. Deterministic given seed, config, threads.
CraftResult craft(const scene::Scene& sc, const model::Model& m,
                  const std::vector<scene::TransformDistribution>& dists,
                  const AttackConfig& config);

PatchTexture make_noise_patch(int h, int w, uint64_t seed);

// Resamples an arbitrary source image onto the patch resolution; aspect
// mismatch stretches.
PatchTexture make_patch_from_image(const Image& source, int h, int w);

// Fraction of views whose composed image is classified as y_tg.
double fooling_rate(const PatchTexture& p, const ViewSet& views, const model::Model& m,
                    int y_tg, int threads);

}  // namespace pf::attack
