#include "patchforge/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "patchforge/image_io.hpp"
#include "patchforge/parallel.hpp"

#include <json.hpp>

namespace pf::evaluate {

scene::TransformSample EvalPose::to_sample() const {
    scene::TransformSample s;
    s.provenance = scene::Provenance::Systematic;
    s.values = {{"camera-azimuth", azimuth},
                {"camera-elevation", elevation},
                {"camera-distance", distance}};
    return s;
}

EvalGrid build_eval_grid(const scene::Scene& sc,
                         const scene::TransformDistribution& azimuth, int azimuth_count,
                         const scene::TransformDistribution& elevation, int elevation_count,
                         const scene::TransformDistribution& distance, int distance_count,
                         int threads) {
    if (azimuth_count < 1 || elevation_count < 1 || distance_count < 1) {
        throw InvalidParameterError("eval grid counts must be >= 1");
    }
    const auto az = scene::sample_systematic(azimuth, azimuth_count);
    const auto el = scene::sample_systematic(elevation, elevation_count);
    const auto di = scene::sample_systematic(distance, distance_count);

    std::vector<EvalPose> candidates;
    candidates.reserve(az.size() * el.size() * di.size());
    for (double a : az) {
        for (double e : el) {
            for (double d : di) candidates.push_back({a, e, d});
        }
    }

    std::vector<ViewBuffers> rendered(candidates.size());
    parallel_for(candidates.size(), threads, [&](size_t i) {
        rendered[i] = raster::render_buffers(sc, candidates[i].to_sample());
    });

    EvalGrid grid;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (rendered[i].mask_count() > 0) {
            grid.poses.push_back(candidates[i]);
            grid.buffers.push_back(std::move(rendered[i]));
        } else {
            ++grid.dropped;
        }
    }
    if (grid.dropped > 0) {
        std::cerr << "warning: dropped " << grid.dropped << "/" << candidates.size()
                  << " eval poses failing the patch-visibility pre-pass\n";
    }
    if (grid.poses.empty()) {
        throw ConfigError("eval grid is empty after the visibility pre-pass");
    }
    return grid;
}

std::vector<std::pair<int, double>> predict_grid(const scene::Scene& sc,
                                                 const PatchTexture* patch, const EvalGrid& grid,
                                                 const model::Model& m, int threads) {
    std::vector<std::pair<int, double>> preds(grid.poses.size());
    const bool cached = grid.buffers.size() == grid.poses.size();
    parallel_for(grid.poses.size(), threads, [&](size_t i) {
        RenderedImage img;
        if (cached) {
            img = patch ? compose::compose(*patch, grid.buffers[i]) : grid.buffers[i].background;
        } else {
            const ViewBuffers vb = raster::render_buffers(sc, grid.poses[i].to_sample());
            img = patch ? compose::compose(*patch, vb) : vb.background;
        }
        const auto probs = model::forward(m, img);
        const auto best = std::max_element(probs.begin(), probs.end());
        preds[i] = {static_cast<int>(best - probs.begin()), *best};
    });
    return preds;
}

RateReport tally(const std::vector<std::pair<int, double>>& preds, const EvalGrid& grid,
                 int y_og, int y_tg) {
    RateReport report;
    report.log.reserve(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
        const auto [pred, conf] = preds[i];
        if (pred == y_og) {
            ++report.og;
        } else if (pred == y_tg) {
            ++report.tg;
        } else {
            ++report.ot;
        }
        report.log.push_back({grid.poses[i], pred, conf});
    }
    return report;
}

RateReport evaluate_patch(const scene::Scene& sc, const PatchTexture* patch,
                          const EvalGrid& grid, const model::Model& m, int y_og, int y_tg,
                          int threads) {
    if (grid.poses.empty()) throw InvalidParameterError("eval grid is empty");
    return tally(predict_grid(sc, patch, grid, m, threads), grid, y_og, y_tg);
}

// ---- holdout ---------------------------------------------------------------

const std::vector<Mutation> kHoldoutSuite = {
    Mutation::PatchUp,     Mutation::PatchDown,   Mutation::MatRed,  Mutation::MatWood,
    Mutation::ObjectColor, Mutation::ObjectShape, Mutation::Flipped,
};

std::string mutation_name(Mutation m) {
    switch (m) {
        case Mutation::Identity: return "identity";
        case Mutation::PatchUp: return "patch_up";
        case Mutation::PatchDown: return "patch_down";
        case Mutation::MatRed: return "mat_red";
        case Mutation::MatWood: return "mat_wood";
        case Mutation::ObjectColor: return "object_color";
        case Mutation::ObjectShape: return "object_shape";
        case Mutation::Flipped: return "flipped";
    }
    throw InvalidParameterError("unknown mutation");
}

Mutation mutation_from_string(const std::string& s) {
    for (Mutation m : {Mutation::Identity, Mutation::PatchUp, Mutation::PatchDown,
                       Mutation::MatRed, Mutation::MatWood, Mutation::ObjectColor,
                       Mutation::ObjectShape, Mutation::Flipped}) {
        if (mutation_name(m) == s) return m;
    }
    throw ConfigError("unknown holdout mutation: " + s);
}

namespace {

// Height of the patch host body above its local base, estimated from the
// mesh extent along +z.
double host_height(const scene::ObjectInstance& host) {
    double z_hi = 0.0;
    for (const auto& v : host.mesh.vertices) z_hi = std::max(z_hi, v.z);
    return z_hi;
}

}  // namespace

scene::Scene mutate_scene(const scene::Scene& sc, Mutation mutation,
                          const HoldoutParams& params) {
    scene::Scene out = sc;
    switch (mutation) {
        case Mutation::Identity:
            break;
        case Mutation::PatchUp:
        case Mutation::PatchDown: {
            const double shift = mutation == Mutation::PatchUp ? params.patch_shift
                                                               : -params.patch_shift;
            const auto& host = out.objects[out.object_index_by_tag(params.central_tag)];
            const double top = host_height(host);
            const double new_lo = out.patch.z_lo + shift;
            const double new_hi = out.patch.z_hi + shift;
            if (new_lo < 0.0 || new_hi > top) {
                throw ConfigError("patch shift moves the strip off the host object");
            }
            out.patch.z_lo = new_lo;
            out.patch.z_hi = new_hi;
            break;
        }
        case Mutation::MatRed:
        case Mutation::MatWood: {
            bool found = false;
            for (auto& obj : out.objects) {
                if (obj.name == params.desk_object) {
                    obj.albedo = mutation == Mutation::MatRed ? params.mat_red : params.mat_wood;
                    found = true;
                }
            }
            if (!found) throw ConfigError("holdout desk object not found: " + params.desk_object);
            break;
        }
        case Mutation::ObjectColor: {
            auto& host = out.objects[out.object_index_by_tag(params.central_tag)];
            host.albedo = params.object_color;
            break;
        }
        case Mutation::ObjectShape: {
            auto& host = out.objects[out.object_index_by_tag(params.central_tag)];
            // shorter cone-like mug; the strip follows the widest body radius
            const double r_bottom = 0.050, r_top = 0.035, height = 0.075;
            host.mesh = scene::build_cone_mug_mesh(r_bottom, r_top, height, 48, 0.024, 0.007);
            host.albedo = {0.85, 0.85, 0.85};
            const double span = out.patch.z_hi - out.patch.z_lo;
            out.patch.z_lo = std::min(0.020, height - span - 0.005);
            out.patch.z_hi = out.patch.z_lo + std::min(span, height - 0.01);
            out.patch.radius = r_bottom + 0.001;
            break;
        }
        case Mutation::Flipped: {
            auto& host = out.objects[out.object_index_by_tag(params.central_tag)];
            const Mat4 flip = Mat4::rotation_z(kPi);
            host.transform = host.transform * flip;
            out.patch.transform = out.patch.transform * flip;
            break;
        }
    }
    return out;
}

std::vector<std::pair<std::string, RateReport>> run_holdout(
    const scene::Scene& sc, const PatchTexture& patch, const std::vector<Mutation>& suite,
    const EvalGrid& grid, const model::Model& m, int y_og, int y_tg,
    const HoldoutParams& params, int threads) {
    std::vector<std::pair<std::string, RateReport>> reports;
    reports.reserve(suite.size());
    for (Mutation mut : suite) {
        const scene::Scene mutated = mutate_scene(sc, mut, params);
        EvalGrid pose_only;
        pose_only.poses = grid.poses;  // fixed protocol poses; re-render per mutation
        RateReport r = evaluate_patch(mutated, &patch, pose_only, m, y_og, y_tg, threads);
        r.variant = mutation_name(mut);
        reports.emplace_back(mutation_name(mut), std::move(r));
    }
    return reports;
}

// ---- statistics ------------------------------------------------------------

namespace {

double student_t_pdf(double x, double dof) {
    const double c = std::exp(std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0)) /
                     std::sqrt(dof * kPi);
    return c * std::pow(1.0 + x * x / dof, -(dof + 1.0) / 2.0);
}

double adaptive_simpson(double (*f)(double, double), double dof, double a, double b, double fa,
                        double fb, double fm, double whole, double tol, int depth) {
    const double m = (a + b) / 2.0;
    const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
    const double flm = f(lm, dof), frm = f(rm, dof);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, dof, a, m, fa, fm, flm, left, tol / 2.0, depth - 1) +
           adaptive_simpson(f, dof, m, b, fm, fb, frm, right, tol / 2.0, depth - 1);
}

// Integral of the t-density over [0, x].
double t_cdf_half(double x, double dof) {
    if (x <= 0.0) return 0.0;
    const double fa = student_t_pdf(0.0, dof);
    const double fb = student_t_pdf(x, dof);
    const double fm = student_t_pdf(x / 2.0, dof);
    const double whole = x / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(student_t_pdf, dof, 0.0, x, fa, fb, fm, whole, 1e-8, 40);
}

}  // namespace

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidParameterError("paired t-test needs equal lengths");
    const size_t n = a.size();
    if (n < 2) throw InvalidParameterError("paired t-test needs n >= 2");
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        if (mean != 0.0) {
            throw DegenerateVarianceError("zero variance with nonzero mean difference");
        }
        return {0.0, 1.0};
    }
    TTestResult r;
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double tail = 0.5 - t_cdf_half(std::abs(r.t), static_cast<double>(n - 1));
    r.p = std::min(1.0, std::max(0.0, 2.0 * tail));
    return r;
}

// ---- report output ---------------------------------------------------------

std::string format_report(const std::vector<RateReport>& reports, ReportFormat format) {
    if (reports.empty()) throw InvalidParameterError("no reports to write");
    std::ostringstream out;
    char line[256];
    if (format == ReportFormat::Csv) {
        out << "variant,target_class,og_pct,tg_pct,ot_pct,n_poses\n";
        for (const auto& r : reports) {
            std::snprintf(line, sizeof(line), "%s,%s,%.1f,%.1f,%.1f,%ld\n", r.variant.c_str(),
                          r.target_class.c_str(), r.og_pct(), r.tg_pct(), r.ot_pct(), r.n());
            out << line;
        }
    } else {
        out << "| variant | target class | Og % | Tg % | Ot % | poses |\n";
        out << "|---|---|---|---|---|---|\n";
        for (const auto& r : reports) {
            std::snprintf(line, sizeof(line), "| %s | %s | %.1f | %.1f | %.1f | %ld |\n",
                          r.variant.c_str(), r.target_class.c_str(), r.og_pct(), r.tg_pct(),
                          r.ot_pct(), r.n());
            out << line;
        }
    }
    return out.str();
}

void write_report(const std::vector<RateReport>& reports, ReportFormat format,
                  const std::string& path) {
    io::write_text_file(path, format_report(reports, format));
}

void write_pose_log(const RateReport& report, const std::vector<std::string>& class_names,
                    const std::string& path) {
    std::ostringstream out;
    for (const auto& rec : report.log) {
        nlohmann::ordered_json j;
        j["azimuth_deg"] = rec.pose.azimuth;
        j["elevation_deg"] = rec.pose.elevation;
        j["distance_m"] = rec.pose.distance;
        j["predicted"] = rec.predicted >= 0 && rec.predicted < static_cast<int>(class_names.size())
                             ? class_names[static_cast<size_t>(rec.predicted)]
                             : std::to_string(rec.predicted);
        j["confidence"] = rec.confidence;
        out << j.dump() << "\n";
    }
    io::write_text_file(path, out.str());
}

}  // namespace pf::evaluate
