#pragma once

#include <optional>

#include "patchforge/config.hpp"

namespace pf::pipeline {

struct RunContext {
    config::PipelineConfig cfg;
    std::string out_dir;
    int threads = 1;
    std::optional<uint64_t> seed_override;
};

std::string dataset_dir(const RunContext& ctx);
std::string checkpoint_path(const RunContext& ctx);
std::string patches_dir(const RunContext& ctx);
std::string reports_dir(const RunContext& ctx);

struct GenDataResult {
    size_t n_images = 0;
    std::string dataset_hash;
    std::string manifest_path;
};

// Renders and writes the labeled dataset; idempotent for a fixed seed.
GenDataResult run_gen_data(const RunContext& ctx);

struct TrainResult {
    model::TrainReport report;
    std::string checkpoint;
};

// Loads the dataset artifacts, trains the classifier, saves the checkpoint.
TrainResult run_train(const RunContext& ctx);

struct CraftOutcome {
    attack::CraftResult result;
    std::string patch_path;
    std::string sidecar_path;
    std::string trace_path;
    std::string label;  // "<mode>_<target>"
};

CraftOutcome run_craft(const RunContext& ctx, const std::string& target,
                       attack::SamplingMode mode, std::optional<int> iterations_override = {},
                       std::optional<double> stop_override = {});

struct EvalRequest {
    enum class Kind { Clean, Noise, Benign, PatchFile };
    Kind kind = Kind::Clean;
    std::string patch_file;          // PatchFile / Benign source override
    std::string variant_label;
    std::vector<std::string> targets;
};

struct EvalOutcome {
    std::vector<evaluate::RateReport> reports;
    std::string report_path;
    std::string pose_log_path;
};

// Evaluates one patch variant over the pose grid, one report row per target.
// Pass a prebuilt grid to share the render cache across variants.
EvalOutcome run_eval(const RunContext& ctx, const EvalRequest& request,
                     const evaluate::EvalGrid* grid = nullptr);

struct HoldoutOutcome {
    std::vector<evaluate::RateReport> reports;  // baseline + one per mutation
    std::string report_path;
};

HoldoutOutcome run_holdout_stage(const RunContext& ctx, const std::string& patch_file,
                                 const std::string& target, const evaluate::EvalGrid* grid = nullptr);

struct CompareOutcome {
    evaluate::TTestResult ttest;
    size_t n_pairs = 0;
    std::string path;
};

// Pairs rows by target class across two report-file groups and runs the
// paired t-test on the Tg percentages.
CompareOutcome run_compare(const RunContext& ctx, const std::vector<std::string>& files_a,
                           const std::vector<std::string>& files_b);

// Merges report CSVs into one table.
std::string run_report(const RunContext& ctx, const std::vector<std::string>& inputs,
                       evaluate::ReportFormat format, const std::string& out_path);

evaluate::EvalGrid build_grid(const RunContext& ctx);
model::Model load_model(const RunContext& ctx);
model::LabeledDataset load_dataset(const RunContext& ctx);

// Renders the target-class stand-in scene (no patch) at the base camera;
// source imagery for benign control patches.
Image render_benign_source(const RunContext& ctx, const std::string& target);

std::vector<evaluate::RateReport> read_report_csv(const std::string& path);

// Full pipeline: gen-data, train, craft per target/mode, eval every variant,
// holdout on the first systematic patch, compare, merged tables.
void run_all(const RunContext& ctx);

}  // namespace pf::pipeline
