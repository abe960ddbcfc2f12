#include "patchforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "patchforge/image_io.hpp"
#include "patchforge/parallel.hpp"
#include "patchforge/raster.hpp"
#include "patchforge/rng.hpp"

namespace pf::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class StageTimer {
public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string join_path(const std::string& a, const std::string& b) {
    return (fs::path(a) / b).string();
}

void ensure_dir(const std::string& path) { fs::create_directories(path); }

std::string mode_name(attack::SamplingMode mode) {
    return mode == attack::SamplingMode::Systematic ? "systematic" : "random";
}

Image patch_to_image(const attack::PatchTexture& p) {
    Image img(p.h, p.w, 3);
    img.v = p.rgb;
    return img;
}

attack::PatchTexture patch_from_file(const std::string& path) {
    const Image img = io::read_ppm(path);
    attack::PatchTexture p(img.h, img.w, 0.0);
    p.rgb = img.v;
    return p;
}

}  // namespace

std::string dataset_dir(const RunContext& ctx) { return join_path(ctx.out_dir, "dataset"); }
std::string checkpoint_path(const RunContext& ctx) { return join_path(ctx.out_dir, "model.ckpt"); }
std::string patches_dir(const RunContext& ctx) { return join_path(ctx.out_dir, "patches"); }
std::string reports_dir(const RunContext& ctx) { return join_path(ctx.out_dir, "reports"); }

GenDataResult run_gen_data(const RunContext& ctx) {
    StageTimer timer;
    const auto& cfg = ctx.cfg;
    const uint64_t seed = ctx.seed_override.value_or(cfg.dataset.seed);

    const model::LabeledDataset ds = model::generate_dataset(
        cfg.scene, cfg.dataset.central_tag, cfg.dataset.classes, cfg.dataset.n_per_class,
        cfg.transforms, seed, cfg.dataset.val_fraction, ctx.threads);

    const std::string dir = dataset_dir(ctx);
    const std::string img_dir = join_path(dir, "images");
    ensure_dir(img_dir);

    ordered_json manifest;
    manifest["seed"] = seed;
    manifest["n_per_class"] = cfg.dataset.n_per_class;
    manifest["val_fraction"] = cfg.dataset.val_fraction;
    manifest["classes"] = ds.class_names;
    ordered_json images = ordered_json::array();
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < ds.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "img_%05zu_%s.ppm", i,
                      ds.class_names[static_cast<size_t>(ds.labels[i])].c_str());
        const std::string rel = std::string("images/") + name;
        io::write_ppm(join_path(dir, rel), ds.images[i]);
        const std::string bytes = io::read_text_file(join_path(dir, rel));
        hash = fnv1a64(bytes.data(), bytes.size(), hash);
        hash = fnv1a64(&ds.labels[i], sizeof(int), hash);
        ordered_json entry;
        entry["file"] = rel;
        entry["label"] = ds.labels[i];
        entry["split"] = ds.is_val[i] ? "val" : "train";
        images.push_back(entry);
    }
    manifest["images"] = images;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    manifest["hash"] = hex;
    const std::string manifest_path = join_path(dir, "manifest.json");
    io::write_text_file(manifest_path, manifest.dump(2) + "\n");

    config::StageRecord rec;
    rec.seed = seed;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {manifest_path};
    config::update_manifest(ctx.out_dir, cfg.config_hash, "gen-data", rec);
    return {ds.size(), hex, manifest_path};
}

model::LabeledDataset load_dataset(const RunContext& ctx) {
    const std::string dir = dataset_dir(ctx);
    const std::string manifest_path = join_path(dir, "manifest.json");
    if (!fs::exists(manifest_path)) {
        throw MissingArtifactError("dataset manifest not found: " + manifest_path +
                                   " (run gen-data first)");
    }
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(io::read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptInputError("dataset manifest is not valid JSON: " + std::string(e.what()));
    }
    model::LabeledDataset ds;
    for (const auto& c : manifest.at("classes")) ds.class_names.push_back(c.get<std::string>());
    const auto& images = manifest.at("images");
    ds.images.resize(images.size());
    ds.labels.resize(images.size());
    ds.is_val.resize(images.size());
    std::vector<std::string> files(images.size());
    for (size_t i = 0; i < images.size(); ++i) {
        files[i] = join_path(dir, images[i].at("file").get<std::string>());
        ds.labels[i] = images[i].at("label").get<int>();
        ds.is_val[i] = images[i].at("split").get<std::string>() == "val" ? 1 : 0;
    }
    parallel_for(images.size(), ctx.threads,
                 [&](size_t i) { ds.images[i] = io::read_ppm(files[i]); });
    return ds;
}

TrainResult run_train(const RunContext& ctx) {
    StageTimer timer;
    const auto& cfg = ctx.cfg;
    model::LabeledDataset ds = load_dataset(ctx);
    if (ds.images.empty()) throw MissingArtifactError("dataset is empty");

    const int input = ds.images.front().h;
    if (ds.images.front().w != input) {
        throw ConfigError("classifier expects square renders");
    }
    model::TrainHyper hyper = cfg.classifier.hyper;
    hyper.threads = ctx.threads;
    if (ctx.seed_override) hyper.seed = *ctx.seed_override;

    model::Model m = model::make_default_model(input, ds.class_names,
                                               derive_seed(hyper.seed, "model-init"));
    const model::TrainReport report = model::train(m, ds, hyper);

    const std::string ckpt = checkpoint_path(ctx);
    model::save_checkpoint(m, ckpt);

    ordered_json jr;
    jr["train_accuracy"] = report.train_accuracy;
    jr["val_accuracy"] = report.val_accuracy;
    jr["final_loss"] = report.final_loss;
    jr["epochs_run"] = report.epochs_run;
    const std::string report_path = join_path(ctx.out_dir, "train_report.json");
    io::write_text_file(report_path, jr.dump(2) + "\n");

    config::StageRecord rec;
    rec.seed = hyper.seed;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {ckpt, report_path};
    config::update_manifest(ctx.out_dir, cfg.config_hash, "train", rec);
    return {report, ckpt};
}

model::Model load_model(const RunContext& ctx) {
    const std::string ckpt = checkpoint_path(ctx);
    if (!fs::exists(ckpt)) {
        throw MissingArtifactError("model checkpoint not found: " + ckpt + " (run train first)");
    }
    return model::load_checkpoint(ckpt);
}

CraftOutcome run_craft(const RunContext& ctx, const std::string& target,
                       attack::SamplingMode mode, std::optional<int> iterations_override,
                       std::optional<double> stop_override) {
    StageTimer timer;
    const auto& cfg = ctx.cfg;
    const model::Model m = load_model(ctx);

    attack::AttackConfig ac = cfg.attack.base;
    ac.mode = mode;
    ac.y_og = cfg.class_index(cfg.dataset.central_tag);
    ac.y_tg = cfg.class_index(target);
    ac.threads = ctx.threads;
    const uint64_t base_seed = ctx.seed_override.value_or(cfg.attack.base.seed);
    ac.seed = derive_seed(base_seed, target + "/" + mode_name(mode));
    if (iterations_override) ac.iterations = *iterations_override;
    if (stop_override) ac.stop_fooling_rate = *stop_override;

    const attack::CraftResult result = attack::craft(cfg.scene, m, cfg.transforms, ac);

    const std::string label = mode_name(mode) + "_" + target;
    ensure_dir(patches_dir(ctx));
    CraftOutcome out;
    out.result = result;
    out.label = label;
    out.patch_path = join_path(patches_dir(ctx), "patch_" + label + ".ppm");
    out.sidecar_path = join_path(patches_dir(ctx), "patch_" + label + ".json");
    out.trace_path = join_path(patches_dir(ctx), "patch_" + label + "_trace.csv");
    io::write_ppm(out.patch_path, patch_to_image(result.patch));

    ordered_json sidecar;
    sidecar["config_hash"] = cfg.config_hash;
    sidecar["seed"] = ac.seed;
    sidecar["mode"] = mode_name(mode);
    sidecar["target_class"] = target;
    sidecar["original_class"] = cfg.dataset.central_tag;
    sidecar["iterations_run"] = result.iterations_run;
    sidecar["best_iteration"] = result.best_iteration;
    sidecar["best_val_fooling"] = result.best_val_fooling;
    sidecar["patch_size"] = {ac.patch_h, ac.patch_w};
    sidecar["kappa"] = ac.kappa;
    sidecar["lambda_tv"] = ac.lambda_tv;
    if (!result.trace.empty()) {
        const auto& last = result.trace.back();
        sidecar["final_loss"] = last.loss;
        sidecar["final_ce_tg"] = last.ce_tg;
        sidecar["final_ce_og"] = last.ce_og;
        sidecar["final_tv"] = last.tv;
    }
    if (mode == attack::SamplingMode::Systematic) {
        ordered_json grid;
        for (const auto& [id, count] : ac.systematic_counts) grid[id] = count;
        sidecar["grid_dims"] = grid;
        sidecar["grid_total"] = result.grid_total;
        sidecar["grid_kept"] = result.grid_kept;
    } else {
        sidecar["n_views"] = ac.n_views;
    }
    io::write_text_file(out.sidecar_path, sidecar.dump(2) + "\n");

    std::ostringstream trace;
    trace << "iteration,loss,ce_tg,ce_og,tv,val_fooling\n";
    char line[192];
    for (const auto& row : result.trace) {
        if (row.val_fooling >= 0.0) {
            std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", row.iteration,
                          row.loss, row.ce_tg, row.ce_og, row.tv, row.val_fooling);
        } else {
            std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,\n", row.iteration,
                          row.loss, row.ce_tg, row.ce_og, row.tv);
        }
        trace << line;
    }
    io::write_text_file(out.trace_path, trace.str());

    config::StageRecord rec;
    rec.seed = ac.seed;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {out.patch_path, out.sidecar_path, out.trace_path};
    config::update_manifest(ctx.out_dir, cfg.config_hash, "craft-" + label, rec);
    return out;
}

evaluate::EvalGrid build_grid(const RunContext& ctx) {
    const auto& e = ctx.cfg.eval;
    return evaluate::build_eval_grid(ctx.cfg.scene, e.azimuth.dist, e.azimuth.count,
                                     e.elevation.dist, e.elevation.count, e.distance.dist,
                                     e.distance.count, ctx.threads);
}

Image render_benign_source(const RunContext& ctx, const std::string& target) {
    const auto& cfg = ctx.cfg;
    scene::Scene variant = cfg.scene;
    const size_t central = variant.object_index_by_tag(cfg.dataset.central_tag);
    const int cls = cfg.class_index(target);
    const auto& spec = cfg.dataset.classes[static_cast<size_t>(cls)];
    variant.objects[central].mesh = spec.mesh;
    variant.objects[central].albedo = spec.albedo;
    variant.objects[central].transform = variant.objects[central].transform * spec.transform;
    variant.objects[central].class_tag = spec.name;
    variant.objects[central].smooth_shading = spec.smooth_shading;
    return raster::render_buffers(variant, scene::TransformSample{}).background;
}

EvalOutcome run_eval(const RunContext& ctx, const EvalRequest& request,
                     const evaluate::EvalGrid* grid_in) {
    StageTimer timer;
    const auto& cfg = ctx.cfg;
    const model::Model m = load_model(ctx);
    evaluate::EvalGrid local_grid;
    const evaluate::EvalGrid* grid = grid_in;
    if (!grid) {
        local_grid = build_grid(ctx);
        grid = &local_grid;
    }

    std::optional<attack::PatchTexture> patch;
    std::vector<std::string> extra_outputs;
    switch (request.kind) {
        case EvalRequest::Kind::Clean:
            break;
        case EvalRequest::Kind::Noise: {
            patch = attack::make_noise_patch(cfg.attack.base.patch_h, cfg.attack.base.patch_w,
                                             derive_seed(cfg.attack.base.seed, "noise-patch"));
            ensure_dir(patches_dir(ctx));
            const std::string noise_path = join_path(patches_dir(ctx), "noise.ppm");
            io::write_ppm(noise_path, patch_to_image(*patch));
            extra_outputs.push_back(noise_path);
            break;
        }
        case EvalRequest::Kind::Benign: {
            const Image src = io::read_ppm(request.patch_file);
            patch = attack::make_patch_from_image(src, cfg.attack.base.patch_h,
                                                  cfg.attack.base.patch_w);
            break;
        }
        case EvalRequest::Kind::PatchFile:
            patch = patch_from_file(request.patch_file);
            break;
    }

    const int y_og = cfg.class_index(cfg.dataset.central_tag);
    const auto preds =
        evaluate::predict_grid(cfg.scene, patch ? &*patch : nullptr, *grid, m, ctx.threads);

    EvalOutcome out;
    for (const auto& target : request.targets) {
        evaluate::RateReport r = evaluate::tally(preds, *grid, y_og, cfg.class_index(target));
        r.variant = request.variant_label;
        r.target_class = target;
        out.reports.push_back(std::move(r));
    }

    ensure_dir(reports_dir(ctx));
    out.report_path = join_path(reports_dir(ctx), "report_" + request.variant_label + ".csv");
    evaluate::write_report(out.reports, evaluate::ReportFormat::Csv, out.report_path);
    out.pose_log_path = join_path(reports_dir(ctx), "poses_" + request.variant_label + ".jsonl");
    evaluate::write_pose_log(out.reports.front(), cfg.class_names(), out.pose_log_path);

    config::StageRecord rec;
    rec.seed = 0;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {out.report_path, out.pose_log_path};
    for (auto& p : extra_outputs) rec.outputs.push_back(p);
    config::update_manifest(ctx.out_dir, cfg.config_hash, "eval-" + request.variant_label, rec);
    return out;
}

HoldoutOutcome run_holdout_stage(const RunContext& ctx, const std::string& patch_file,
                                 const std::string& target, const evaluate::EvalGrid* grid_in) {
    StageTimer timer;
    const auto& cfg = ctx.cfg;
    const model::Model m = load_model(ctx);
    evaluate::EvalGrid local_grid;
    const evaluate::EvalGrid* grid = grid_in;
    if (!grid) {
        local_grid = build_grid(ctx);
        grid = &local_grid;
    }
    const attack::PatchTexture patch = patch_from_file(patch_file);
    const int y_og = cfg.class_index(cfg.dataset.central_tag);
    const int y_tg = cfg.class_index(target);

    HoldoutOutcome out;
    evaluate::RateReport baseline =
        evaluate::evaluate_patch(cfg.scene, &patch, *grid, m, y_og, y_tg, ctx.threads);
    baseline.variant = "baseline";
    baseline.target_class = target;
    out.reports.push_back(std::move(baseline));

    std::vector<evaluate::Mutation> suite;
    for (const auto& name : cfg.holdout_mutations) {
        suite.push_back(evaluate::mutation_from_string(name));
    }
    auto mutation_reports = evaluate::run_holdout(cfg.scene, patch, suite, *grid, m, y_og, y_tg,
                                                  cfg.holdout, ctx.threads);
    for (auto& [name, report] : mutation_reports) {
        report.target_class = target;
        out.reports.push_back(std::move(report));
    }

    ensure_dir(reports_dir(ctx));
    out.report_path = join_path(reports_dir(ctx), "holdout_" + target + ".csv");
    evaluate::write_report(out.reports, evaluate::ReportFormat::Csv, out.report_path);

    config::StageRecord rec;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {out.report_path};
    config::update_manifest(ctx.out_dir, cfg.config_hash, "holdout-" + target, rec);
    return out;
}

std::vector<evaluate::RateReport> read_report_csv(const std::string& path) {
    if (!fs::exists(path)) throw MissingArtifactError("report file not found: " + path);
    std::istringstream in(io::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw CorruptInputError("empty report file: " + path);
    std::vector<evaluate::RateReport> reports;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw CorruptInputError("malformed report row in " + path);
        evaluate::RateReport r;
        r.variant = fields[0];
        r.target_class = fields[1];
        const long n = std::stol(fields[5]);
        // reconstruct counts from percentages (exact for our own output)
        r.og = std::lround(std::stod(fields[2]) * n / 100.0);
        r.tg = std::lround(std::stod(fields[3]) * n / 100.0);
        r.ot = n - r.og - r.tg;
        reports.push_back(std::move(r));
    }
    return reports;
}

CompareOutcome run_compare(const RunContext& ctx, const std::vector<std::string>& files_a,
                           const std::vector<std::string>& files_b) {
    StageTimer timer;
    auto collect = [](const std::vector<std::string>& files) {
        std::map<std::string, double> tg_by_target;
        for (const auto& f : files) {
            for (const auto& r : read_report_csv(f)) {
                tg_by_target[r.target_class] = r.tg_pct();
            }
        }
        return tg_by_target;
    };
    const auto a = collect(files_a);
    const auto b = collect(files_b);
    std::vector<double> va, vb;
    for (const auto& [target, tg] : a) {
        const auto it = b.find(target);
        if (it != b.end()) {
            va.push_back(tg);
            vb.push_back(it->second);
        }
    }
    if (va.size() < 2) {
        throw InvalidParameterError("compare needs at least 2 paired target classes");
    }
    CompareOutcome out;
    out.ttest = evaluate::paired_t_test(va, vb);
    out.n_pairs = va.size();
    out.path = join_path(ctx.out_dir, "compare.csv");
    char buf[160];
    std::snprintf(buf, sizeof(buf), "n_pairs,t,p\n%zu,%.9g,%.9g\n", out.n_pairs, out.ttest.t,
                  out.ttest.p);
    io::write_text_file(out.path, buf);

    config::StageRecord rec;
    rec.wall_ms = timer.elapsed_ms();
    rec.outputs = {out.path};
    config::update_manifest(ctx.out_dir, ctx.cfg.config_hash, "compare", rec);
    return out;
}

std::string run_report(const RunContext& ctx, const std::vector<std::string>& inputs,
                       evaluate::ReportFormat format, const std::string& out_path) {
    std::vector<evaluate::RateReport> all;
    for (const auto& f : inputs) {
        for (auto& r : read_report_csv(f)) all.push_back(std::move(r));
    }
    evaluate::write_report(all, format, out_path);
    config::StageRecord rec;
    rec.outputs = {out_path};
    config::update_manifest(ctx.out_dir, ctx.cfg.config_hash, "report", rec);
    return out_path;
}

void run_all(const RunContext& ctx) {
    const auto& cfg = ctx.cfg;
    std::cout << "[gen-data] rendering dataset...\n";
    const auto gen = run_gen_data(ctx);
    std::cout << "[gen-data] " << gen.n_images << " images, hash " << gen.dataset_hash << "\n";

    std::cout << "[train] training classifier...\n";
    const auto tr = run_train(ctx);
    std::cout << "[train] train acc " << tr.report.train_accuracy << ", val acc "
              << tr.report.val_accuracy << "\n";

    const evaluate::EvalGrid grid = build_grid(ctx);
    std::cout << "[eval] pose grid: " << grid.poses.size() << " poses (" << grid.dropped
              << " dropped)\n";

    std::vector<std::string> systematic_reports, random_reports, all_reports;
    std::string first_systematic_patch;
    for (const auto mode : {attack::SamplingMode::Systematic, attack::SamplingMode::Random}) {
        for (const auto& target : cfg.attack.targets) {
            std::cout << "[craft] " << mode_name(mode) << " patch for target '" << target
                      << "'...\n";
            const auto crafted = run_craft(ctx, target, mode);
            std::cout << "[craft] best val fooling " << crafted.result.best_val_fooling << " @ it "
                      << crafted.result.best_iteration << "\n";
            if (mode == attack::SamplingMode::Systematic && first_systematic_patch.empty()) {
                first_systematic_patch = crafted.patch_path;
            }
            EvalRequest req;
            req.kind = EvalRequest::Kind::PatchFile;
            req.patch_file = crafted.patch_path;
            req.variant_label = crafted.label;
            req.targets = {target};
            const auto ev = run_eval(ctx, req, &grid);
            std::cout << "[eval] " << crafted.label << ": Tg% " << ev.reports.front().tg_pct()
                      << "\n";
            (mode == attack::SamplingMode::Systematic ? systematic_reports : random_reports)
                .push_back(ev.report_path);
            all_reports.push_back(ev.report_path);
        }
    }

    EvalRequest clean_req;
    clean_req.kind = EvalRequest::Kind::Clean;
    clean_req.variant_label = "clean";
    clean_req.targets = cfg.attack.targets;
    all_reports.push_back(run_eval(ctx, clean_req, &grid).report_path);

    EvalRequest noise_req;
    noise_req.kind = EvalRequest::Kind::Noise;
    noise_req.variant_label = "noise";
    noise_req.targets = cfg.attack.targets;
    all_reports.push_back(run_eval(ctx, noise_req, &grid).report_path);

    for (const auto& target : cfg.attack.targets) {
        ensure_dir(patches_dir(ctx));
        const std::string src_path =
            join_path(patches_dir(ctx), "benign_src_" + target + ".ppm");
        io::write_ppm(src_path, render_benign_source(ctx, target));
        EvalRequest req;
        req.kind = EvalRequest::Kind::Benign;
        req.patch_file = src_path;
        req.variant_label = "benign_" + target;
        req.targets = {target};
        all_reports.push_back(run_eval(ctx, req, &grid).report_path);
    }

    if (!first_systematic_patch.empty()) {
        std::cout << "[holdout] running the mutation suite...\n";
        run_holdout_stage(ctx, first_systematic_patch, cfg.attack.targets.front(), &grid);
    }

    if (cfg.attack.targets.size() >= 2) {
        const auto cmp = run_compare(ctx, systematic_reports, random_reports);
        std::cout << "[compare] systematic vs random: t=" << cmp.ttest.t << " p=" << cmp.ttest.p
                  << " (n=" << cmp.n_pairs << ")\n";
    }

    run_report(ctx, all_reports, evaluate::ReportFormat::MarkdownTable,
               join_path(ctx.out_dir, "tables.md"));
    std::cout << "[report] wrote " << join_path(ctx.out_dir, "tables.md") << "\n";
}

}  // namespace pf::pipeline
