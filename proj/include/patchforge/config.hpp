#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "patchforge/attack.hpp"
#include "patchforge/evaluate.hpp"
#include "patchforge/model.hpp"

namespace pf::config {

struct DatasetConfig {
    int n_per_class = 100;
    double val_fraction = 0.2;
    uint64_t seed = 11;
    std::string central_tag = "mug";
    std::vector<model::ClassObjectSpec> classes;  // sorted by name
};

struct ClassifierConfig {
    model::TrainHyper hyper;
    double min_val_accuracy = 0.98;
};

struct EvalAxis {
    scene::TransformDistribution dist;
    int count = 1;
};

struct EvalConfig {
    EvalAxis azimuth, elevation, distance;
    // Named presets overriding the per-axis counts (e.g. the full-scale
    // pose-count preset).
    std::map<std::string, std::array<int, 3>> presets;
};

struct AttackSection {
    std::vector<std::string> targets;
    attack::AttackConfig base;  // y_og/y_tg filled per target at run time
};

struct PipelineConfig {
    scene::Scene scene;
    std::vector<scene::TransformDistribution> transforms;
    DatasetConfig dataset;
    ClassifierConfig classifier;
    AttackSection attack;
    EvalConfig eval;
    evaluate::HoldoutParams holdout;
    std::vector<std::string> holdout_mutations;
    std::string output_dir = "out";
    std::string config_hash;  // FNV-1a 64 of the raw config bytes, hex

    std::vector<std::string> class_names() const;
    int class_index(const std::string& name) const;
};

// Parses and validates the pipeline config. Errors carry the JSON field
// path. The scene section is materialized into meshes here.
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& json_text, const std::string& origin);

// ---- run manifest ----------------------------------------------------------

struct StageRecord {
    uint64_t seed = 0;
    double wall_ms = 0.0;
    std::vector<std::string> outputs;
};

// Reads, updates, and rewrites <out_dir>/manifest.json. Every listed output
// must exist at write time; the config hash is recomputable from the config
// file bytes.
void update_manifest(const std::string& out_dir, const std::string& config_hash,
                     const std::string& stage, const StageRecord& record);

std::string hash_bytes_hex(const std::string& bytes);

}  // namespace pf::config
