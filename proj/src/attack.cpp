#include "patchforge/attack.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "patchforge/parallel.hpp"
#include "patchforge/rng.hpp"

namespace pf::attack {

namespace {

constexpr double kTvEps = 1e-8;

PatchTexture make_init_patch(const AttackConfig& config) {
    if (config.init == PatchInit::Noise) {
        return make_noise_patch(config.patch_h, config.patch_w,
                                derive_seed(config.seed, "patch-init"));
    }
    return PatchTexture(config.patch_h, config.patch_w, 0.5);
}

}  // namespace

void AttackConfig::validate() const {
    if (y_og == y_tg) throw ConfigError("attack original and target class must differ");
    if (iterations < 0) throw ConfigError("attack iterations must be >= 0");
    if (batch_size < 1) throw ConfigError("attack batch size must be >= 1");
    if (patch_h < 1 || patch_w < 1) throw ConfigError("patch resolution must be positive");
    if (mode == SamplingMode::Random && n_views < 1) {
        throw ConfigError("random mode needs n_views >= 1");
    }
    if (mode == SamplingMode::Systematic && systematic_counts.empty()) {
        throw ConfigError("systematic mode needs per-dimension counts");
    }
}

ViewSet build_view_set(const scene::Scene& sc,
                       const std::vector<scene::TransformDistribution>& dists,
                       const AttackConfig& config, uint64_t epoch) {
    ViewSet set;
    if (config.mode == SamplingMode::Systematic) {
        std::vector<scene::TransformDistribution> grid_dists;
        std::vector<int> counts;
        for (const auto& [id, count] : config.systematic_counts) {
            const auto it = std::find_if(dists.begin(), dists.end(),
                                         [&](const auto& d) { return d.id == id; });
            if (it == dists.end()) {
                throw ConfigError("systematic counts reference undeclared dimension: " + id);
            }
            grid_dists.push_back(*it);
            counts.push_back(count);
        }
        const auto samples = scene::enumerate_grid(grid_dists, counts);
        std::vector<ViewBuffers> rendered(samples.size());
        parallel_for(samples.size(), config.threads,
                     [&](size_t i) { rendered[i] = raster::render_buffers(sc, samples[i]); });
        long dropped = 0;
        for (auto& vb : rendered) {
            if (vb.mask_count() > 0) {
                set.views.push_back(std::move(vb));
            } else {
                ++dropped;
            }
        }
        if (dropped > 0) {
            std::cerr << "warning: dropped " << dropped << "/" << samples.size()
                      << " systematic views with an empty patch mask\n";
        }
        if (2 * dropped > static_cast<long>(samples.size())) {
            throw RangeMisconfigurationError(
                "more than half of the systematic view grid has no visible patch");
        }
    } else {
        Rng rng(derive_seed(config.seed, "views", epoch));
        const int cap = 20 * config.n_views;
        int attempts = 0;
        long rejected = 0;
        while (static_cast<int>(set.views.size()) < config.n_views && attempts < cap) {
            const int want = config.n_views - static_cast<int>(set.views.size());
            std::vector<scene::TransformSample> candidates;
            candidates.reserve(static_cast<size_t>(want));
            for (int i = 0; i < want; ++i) {
                scene::TransformSample s;
                s.provenance = scene::Provenance::Random;
                for (const auto& d : dists) s.values.emplace_back(d.id, rng.uniform(d.lo, d.hi));
                candidates.push_back(std::move(s));
            }
            attempts += want;
            std::vector<ViewBuffers> rendered(candidates.size());
            parallel_for(candidates.size(), config.threads, [&](size_t i) {
                rendered[i] = raster::render_buffers(sc, candidates[i]);
            });
            for (auto& vb : rendered) {
                if (vb.mask_count() > 0) {
                    set.views.push_back(std::move(vb));
                } else {
                    ++rejected;
                }
            }
        }
        if (static_cast<int>(set.views.size()) < config.n_views) {
            throw RangeMisconfigurationError(
                "could not sample enough views with a visible patch (rejected " +
                std::to_string(rejected) + ")");
        }
        if (rejected > 0) {
            std::cerr << "warning: resampled " << rejected << " views with an empty patch mask\n";
        }
    }
    return set;
}

std::pair<double, PatchGradient> total_variation(const PatchTexture& p) {
    PatchGradient grad(p.h, p.w);
    double tv = 0.0;
    for (int y = 0; y < p.h; ++y) {
        for (int x = 0; x < p.w; ++x) {
            for (int ch = 0; ch < 3; ++ch) {
                const double dx = x + 1 < p.w ? p.at(y, x + 1, ch) - p.at(y, x, ch) : 0.0;
                const double dy = y + 1 < p.h ? p.at(y + 1, x, ch) - p.at(y, x, ch) : 0.0;
                const double s = std::sqrt(dx * dx + dy * dy + kTvEps);
                tv += s;
                if (x + 1 < p.w) {
                    grad.at(y, x + 1, ch) += dx / s;
                    grad.at(y, x, ch) -= dx / s;
                }
                if (y + 1 < p.h) {
                    grad.at(y + 1, x, ch) += dy / s;
                    grad.at(y, x, ch) -= dy / s;
                }
            }
        }
    }
    return {tv, std::move(grad)};
}

std::pair<LossBreakdown, PatchGradient> attack_loss(const PatchTexture& p,
                                                    const std::vector<const ViewBuffers*>& views,
                                                    const model::Model& m,
                                                    const AttackConfig& config) {
    if (views.empty()) throw ContractViolationError("attack_loss needs at least one view");
    const size_t n = views.size();
    std::vector<PatchGradient> view_grads(n);
    std::vector<double> view_ce_tg(n, 0.0), view_ce_og(n, 0.0);
    parallel_for(n, config.threads, [&](size_t i) {
        const ViewBuffers& vb = *views[i];
        const RenderedImage img = compose::compose(p, vb);
        const model::ForwardTrace trace = model::forward_trace(m, img);
        view_ce_tg[i] = model::cross_entropy(trace.probs, config.y_tg);
        view_ce_og[i] = model::cross_entropy(trace.probs, config.y_og);
        // d(CE_tg - kappa*CE_og)/dlogits = (probs - e_tg) - kappa*(probs - e_og)
        std::vector<double> dlogits(trace.probs.size());
        for (size_t k = 0; k < dlogits.size(); ++k) {
            dlogits[k] = (1.0 - config.kappa) * trace.probs[k];
        }
        dlogits[static_cast<size_t>(config.y_tg)] -= 1.0;
        dlogits[static_cast<size_t>(config.y_og)] += config.kappa;
        const model::Tensor dimg = model::backward(m, trace, dlogits, nullptr);
        view_grads[i] = compose::backprop_compose(dimg, p, vb);
    });

    LossBreakdown loss;
    PatchGradient grad(p.h, p.w);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
        loss.ce_tg += view_ce_tg[i] * inv_n;
        loss.ce_og += view_ce_og[i] * inv_n;
        for (size_t k = 0; k < grad.rgb.size(); ++k) grad.rgb[k] += view_grads[i].rgb[k] * inv_n;
    }
    auto [tv, tv_grad] = total_variation(p);
    loss.tv = tv;
    for (size_t k = 0; k < grad.rgb.size(); ++k) grad.rgb[k] += config.lambda_tv * tv_grad.rgb[k];
    loss.total = loss.ce_tg - config.kappa * loss.ce_og + config.lambda_tv * loss.tv;
    if (!std::isfinite(loss.total)) throw NumericalFailureError("attack loss is not finite");
    for (double g : grad.rgb) {
        if (!std::isfinite(g)) throw NumericalFailureError("attack gradient is not finite");
    }
    return {loss, std::move(grad)};
}

void adam_step(PatchTexture& p, const PatchGradient& grad, AdamState& state,
               const AdamHyper& hyper) {
    if (grad.rgb.size() != p.rgb.size()) throw ContractViolationError("adam shape mismatch");
    if (state.m.empty()) {
        state.m.assign(p.rgb.size(), 0.0);
        state.v.assign(p.rgb.size(), 0.0);
        state.step = 0;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < p.rgb.size(); ++i) {
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grad.rgb[i];
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grad.rgb[i] * grad.rgb[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p.rgb[i] = clamp01(p.rgb[i] - hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps));
    }
}

double fooling_rate(const PatchTexture& p, const ViewSet& views, const model::Model& m,
                    int y_tg, int threads) {
    if (views.views.empty()) return 0.0;
    std::vector<uint8_t> hits(views.views.size(), 0);
    parallel_for(views.views.size(), threads, [&](size_t i) {
        const RenderedImage img = compose::compose(p, views.views[i]);
        const auto probs = model::forward(m, img);
        const int pred =
            static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
        hits[i] = pred == y_tg ? 1 : 0;
    });
    long n = 0;
    for (uint8_t h : hits) n += h;
    return static_cast<double>(n) / static_cast<double>(views.views.size());
}

CraftResult craft(const scene::Scene& sc, const model::Model& m,
                  const std::vector<scene::TransformDistribution>& dists,
                  const AttackConfig& config) {
    config.validate();
    CraftResult result;
    result.patch = make_init_patch(config);
    if (config.iterations == 0) {
        return result;
    }

    AttackConfig val_config = config;
    val_config.mode = SamplingMode::Random;
    val_config.n_views = config.validation_views;
    val_config.seed = derive_seed(config.seed, "validation");
    const ViewSet val_views = build_view_set(sc, dists, val_config, 0);

    PatchTexture p = result.patch;
    result.best_val_fooling = fooling_rate(p, val_views, m, config.y_tg, config.threads);
    result.best_iteration = 0;

    ViewSet grid;
    if (config.mode == SamplingMode::Systematic) {
        grid = build_view_set(sc, dists, config, 0);
        result.grid_kept = static_cast<long>(grid.views.size());
        long total = 1;
        for (const auto& [id, count] : config.systematic_counts) total *= count;
        result.grid_total = total;
    }

    AdamState state;
    Rng order_rng(derive_seed(config.seed, "batch-order"));
    int it = 0;
    uint64_t epoch = 0;
    bool stop = false;
    while (it < config.iterations && !stop) {
        const ViewSet* views = &grid;
        ViewSet epoch_views;
        if (config.mode == SamplingMode::Random) {
            epoch_views = build_view_set(sc, dists, config, epoch);
            views = &epoch_views;
        }
        std::vector<size_t> order(views->views.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        order_rng.shuffle(order);

        for (size_t start = 0; start < order.size() && it < config.iterations; // one epoch
             start += static_cast<size_t>(config.batch_size)) {
            const size_t bn =
                std::min(static_cast<size_t>(config.batch_size), order.size() - start);
            std::vector<const ViewBuffers*> batch(bn);
            for (size_t b = 0; b < bn; ++b) batch[b] = &views->views[order[start + b]];
            LossBreakdown loss;
            PatchGradient grad;
            try {
                std::tie(loss, grad) = attack_loss(p, batch, m, config);
            } catch (const NumericalFailureError& e) {
                throw NumericalFailureError(std::string(e.what()) + " at iteration " +
                                            std::to_string(it));
            }
            TraceRow row;
            row.iteration = it;
            row.loss = loss.total;
            row.ce_tg = loss.ce_tg;
            row.ce_og = loss.ce_og;
            row.tv = loss.tv;
            result.trace.push_back(row);
            adam_step(p, grad, state, config.adam);
            ++it;
        }

        const double val = fooling_rate(p, val_views, m, config.y_tg, config.threads);
        if (!result.trace.empty()) result.trace.back().val_fooling = val;
        if (val > result.best_val_fooling) {
            result.best_val_fooling = val;
            result.best_iteration = it;
            result.patch = p;
            result.improved = true;
        }
        if (val >= config.stop_fooling_rate) stop = true;
        ++epoch;
    }
    result.iterations_run = it;
    if (!result.improved) {
        std::cerr << "warning: validation fooling rate never improved over the initial patch\n";
    }
    return result;
}

PatchTexture make_noise_patch(int h, int w, uint64_t seed) {
    PatchTexture p(h, w, 0.0);
    Rng rng(seed);
    for (auto& t : p.rgb) t = rng.uniform();
    return p;
}

PatchTexture make_patch_from_image(const Image& source, int h, int w) {
    if (source.c != 3 || source.h < 1 || source.w < 1) {
        throw InvalidParameterError("patch source image must be non-empty RGB");
    }
    PatchTexture src_tex(source.h, source.w, 0.0);
    src_tex.rgb = source.v;
    PatchTexture out(h, w, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x + 0.5) / w;
            const double v = (y + 0.5) / h;
            const Rgb c = compose::sample_bilinear(src_tex, u, v);
            out.at(y, x, 0) = clamp01(c.r);
            out.at(y, x, 1) = clamp01(c.g);
            out.at(y, x, 2) = clamp01(c.b);
        }
    }
    return out;
}

}  // namespace pf::attack
