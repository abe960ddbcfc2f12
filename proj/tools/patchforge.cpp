#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "patchforge/pipeline.hpp"
#include "patchforge/version.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 1;
    std::optional<uint64_t> seed;
};

void add_common(CLI::App* cmd, GlobalArgs& args, std::optional<uint64_t>& seed_slot) {
    cmd->add_option("--config", args.config_path, "pipeline config JSON")->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: PATCHFORGE_OUT or config)");
    cmd->add_option("--threads", args.threads, "worker threads (default 1)");
    cmd->add_option_function<uint64_t>(
        "--seed", [&seed_slot](uint64_t v) { seed_slot = v; }, "override the stage seed");
}

pf::pipeline::RunContext make_context(const GlobalArgs& args) {
    pf::pipeline::RunContext ctx;
    ctx.cfg = pf::config::load_config(args.config_path);
    if (!args.out_dir.empty()) {
        ctx.out_dir = args.out_dir;
    } else if (const char* env = std::getenv("PATCHFORGE_OUT"); env && *env) {
        ctx.out_dir = env;
    } else {
        ctx.out_dir = ctx.cfg.output_dir;
    }
    std::filesystem::create_directories(ctx.out_dir);
    ctx.threads = args.threads;
    ctx.seed_override = args.seed;
    return ctx;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patchforge: adversarial patches for a parametric 3D scene replica"};
    app.set_version_flag("--version", pf::kVersion);
    app.require_subcommand(1);

    GlobalArgs args;
    std::optional<uint64_t> seed;

    auto* gen = app.add_subcommand("gen-data", "render the labeled classifier dataset");
    add_common(gen, args, seed);

    auto* train = app.add_subcommand("train", "train the classifier on the dataset artifacts");
    add_common(train, args, seed);

    auto* craft = app.add_subcommand("craft", "optimize an adversarial patch");
    add_common(craft, args, seed);
    std::string craft_target, craft_mode = "systematic";
    int craft_iterations = -1;
    craft->add_option("--target", craft_target, "target class")->required();
    craft->add_option("--mode", craft_mode, "random|systematic")
        ->check(CLI::IsMember({"random", "systematic"}));
    craft->add_option("--iterations", craft_iterations, "override optimizer step count");

    auto* eval = app.add_subcommand("eval", "classification rates over the pose grid");
    add_common(eval, args, seed);
    std::string eval_patch, eval_benign, eval_target, eval_variant;
    bool eval_clean = false, eval_noise = false, eval_holdout = false;
    eval->add_option("--patch", eval_patch, "patch PPM to evaluate");
    eval->add_flag("--clean", eval_clean, "evaluate the clean scene");
    eval->add_flag("--noise", eval_noise, "evaluate a seeded noise patch");
    eval->add_option("--benign", eval_benign, "benign control patch from an image file");
    eval->add_option("--target", eval_target, "restrict to one target class");
    eval->add_option("--variant", eval_variant, "variant label for the report");
    eval->add_flag("--holdout", eval_holdout, "additionally run the holdout suite");

    auto* holdout = app.add_subcommand("holdout", "unexpected-transformation suite for a patch");
    add_common(holdout, args, seed);
    std::string holdout_patch, holdout_target;
    holdout->add_option("--patch", holdout_patch, "patch PPM")->required();
    holdout->add_option("--target", holdout_target, "target class")->required();

    auto* compare = app.add_subcommand("compare", "paired t-test between two report groups");
    add_common(compare, args, seed);
    std::vector<std::string> cmp_a, cmp_b;
    compare->add_option("--a", cmp_a, "report CSVs, group A")->required();
    compare->add_option("--b", cmp_b, "report CSVs, group B")->required();

    auto* report = app.add_subcommand("report", "merge report CSVs into one table");
    add_common(report, args, seed);
    std::vector<std::string> report_inputs;
    std::string report_format = "markdown-table", report_out;
    report->add_option("inputs", report_inputs, "report CSV files")->required();
    report->add_option("--format", report_format, "csv|markdown-table")
        ->check(CLI::IsMember({"csv", "markdown-table"}));
    report->add_option("--table-out", report_out, "output file")->required();

    auto* all = app.add_subcommand("all", "run the full pipeline");
    add_common(all, args, seed);

    CLI11_PARSE(app, argc, argv);
    args.seed = seed;

    try {
        const pf::pipeline::RunContext ctx = make_context(args);
        if (gen->parsed()) {
            const auto r = pf::pipeline::run_gen_data(ctx);
            std::cout << "dataset: " << r.n_images << " images, hash " << r.dataset_hash << "\n";
        } else if (train->parsed()) {
            const auto r = pf::pipeline::run_train(ctx);
            std::cout << "train accuracy " << r.report.train_accuracy << ", val accuracy "
                      << r.report.val_accuracy << "\n";
        } else if (craft->parsed()) {
            const auto mode = craft_mode == "random" ? pf::attack::SamplingMode::Random
                                                     : pf::attack::SamplingMode::Systematic;
            std::optional<int> iters;
            if (craft_iterations >= 0) iters = craft_iterations;
            const auto r = pf::pipeline::run_craft(ctx, craft_target, mode, iters);
            std::cout << "patch " << r.patch_path << " (best val fooling "
                      << r.result.best_val_fooling << ")\n";
        } else if (eval->parsed()) {
            pf::pipeline::EvalRequest req;
            const int chosen = (eval_patch.empty() ? 0 : 1) + (eval_clean ? 1 : 0) +
                               (eval_noise ? 1 : 0) + (eval_benign.empty() ? 0 : 1);
            if (chosen != 1) {
                throw pf::ConfigError("eval needs exactly one of --patch/--clean/--noise/--benign");
            }
            if (eval_clean) {
                req.kind = pf::pipeline::EvalRequest::Kind::Clean;
                req.variant_label = "clean";
            } else if (eval_noise) {
                req.kind = pf::pipeline::EvalRequest::Kind::Noise;
                req.variant_label = "noise";
            } else if (!eval_benign.empty()) {
                req.kind = pf::pipeline::EvalRequest::Kind::Benign;
                req.patch_file = eval_benign;
                req.variant_label = "benign";
            } else {
                req.kind = pf::pipeline::EvalRequest::Kind::PatchFile;
                req.patch_file = eval_patch;
                req.variant_label = "patch";
            }
            if (!eval_variant.empty()) req.variant_label = eval_variant;
            req.targets = eval_target.empty() ? ctx.cfg.attack.targets
                                              : std::vector<std::string>{eval_target};
            const auto grid = pf::pipeline::build_grid(ctx);
            const auto r = pf::pipeline::run_eval(ctx, req, &grid);
            for (const auto& rep : r.reports) {
                std::cout << rep.variant << "/" << rep.target_class << ": Og% " << rep.og_pct()
                          << " Tg% " << rep.tg_pct() << " Ot% " << rep.ot_pct() << "\n";
            }
            if (eval_holdout) {
                if (eval_patch.empty()) {
                    throw pf::ConfigError("--holdout needs --patch");
                }
                const auto h = pf::pipeline::run_holdout_stage(ctx, eval_patch,
                                                               req.targets.front(), &grid);
                std::cout << "holdout report: " << h.report_path << "\n";
            }
        } else if (holdout->parsed()) {
            const auto r = pf::pipeline::run_holdout_stage(ctx, holdout_patch, holdout_target);
            for (const auto& rep : r.reports) {
                std::cout << rep.variant << ": Og% " << rep.og_pct() << " Tg% " << rep.tg_pct()
                          << "\n";
            }
        } else if (compare->parsed()) {
            const auto r = pf::pipeline::run_compare(ctx, cmp_a, cmp_b);
            std::cout << "paired t-test over " << r.n_pairs << " classes: t=" << r.ttest.t
                      << " p=" << r.ttest.p << "\n";
        } else if (report->parsed()) {
            const auto fmt = report_format == "csv" ? pf::evaluate::ReportFormat::Csv
                                                    : pf::evaluate::ReportFormat::MarkdownTable;
            pf::pipeline::run_report(ctx, report_inputs, fmt, report_out);
            std::cout << "wrote " << report_out << "\n";
        } else if (all->parsed()) {
            pf::pipeline::run_all(ctx);
        }
    } catch (const pf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const pf::MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 3;
    } catch (const pf::CorruptInputError& e) {
        std::cerr << "corrupt input: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
