#include "patchforge/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "patchforge/image_io.hpp"
#include "patchforge/rng.hpp"
#include "patchforge/version.hpp"

namespace pf::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing field");
    return j.at(key);
}

double require_number(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

int require_int(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::string require_string(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    return j.is_object() && j.contains(key) ? j.at(key).get<double>() : fallback;
}

int int_or(const json& j, const std::string& key, int fallback) {
    return j.is_object() && j.contains(key) ? j.at(key).get<int>() : fallback;
}

std::array<double, 3> require_triple(const json& j, const std::string& key,
                                     const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_array() || v.size() != 3) fail(path + "." + key, "expected an array of 3 numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Vec3 to_vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }
Rgb to_rgb(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

Mat4 parse_transform(const json& j, const std::string& path) {
    Vec3 translate{0, 0, 0}, scale{1, 1, 1}, rotate{0, 0, 0};
    if (j.is_object()) {
        if (j.contains("translate")) translate = to_vec3(require_triple(j, "translate", path));
        if (j.contains("scale")) scale = to_vec3(require_triple(j, "scale", path));
        if (j.contains("rotate_deg")) rotate = to_vec3(require_triple(j, "rotate_deg", path));
    }
    return Mat4::translation(translate) * Mat4::rotation_z(deg_to_rad(rotate.z)) *
           Mat4::rotation_y(deg_to_rad(rotate.y)) * Mat4::rotation_x(deg_to_rad(rotate.x)) *
           Mat4::scale(scale);
}

TriangleMesh build_mesh_for_kind(const std::string& kind, const json& params,
                                 const std::string& path) {
    if (kind == "mug") {
        return scene::build_mug_mesh(require_number(params, "radius", path),
                                     require_number(params, "height", path),
                                     int_or(params, "segments", 48),
                                     number_or(params, "handle_major_radius", 0.03),
                                     number_or(params, "handle_minor_radius", 0.009));
    }
    PrimitiveParams p;
    p.segments = int_or(params, "segments", 32);
    if (kind == "cube") {
        p.edge = require_number(params, "edge", path);
    } else if (kind == "sphere") {
        p.radius = require_number(params, "radius", path);
    } else {
        p.radius = require_number(params, "radius", path);
        p.height = require_number(params, "height", path);
    }
    return build_primitive(primitive_kind_from_string(kind), p);
}

scene::Scene parse_scene(const json& j, const std::string& path) {
    scene::Scene sc;
    sc.background_color = to_rgb(require_triple(j, "background_color", path));
    sc.cast_shadows = j.contains("cast_shadows") ? j.at("cast_shadows").get<bool>() : false;

    const json& jl = require(j, "light", path);
    sc.light.position = to_vec3(require_triple(jl, "position", path + ".light"));
    sc.light.color = to_rgb(require_triple(jl, "color", path + ".light"));
    sc.light.ambient = to_rgb(require_triple(jl, "ambient", path + ".light"));

    const json& jc = require(j, "camera", path);
    sc.camera.position = to_vec3(require_triple(jc, "position", path + ".camera"));
    sc.camera.look_at = to_vec3(require_triple(jc, "look_at", path + ".camera"));
    if (jc.contains("up")) sc.camera.up = to_vec3(require_triple(jc, "up", path + ".camera"));
    sc.camera.vertical_fov = deg_to_rad(require_number(jc, "vertical_fov_deg", path + ".camera"));
    const json& res = require(jc, "resolution", path + ".camera");
    if (!res.is_array() || res.size() != 2) fail(path + ".camera.resolution", "expected [w,h]");
    sc.camera.width = res[0].get<int>();
    sc.camera.height = res[1].get<int>();

    const json& jobjs = require(j, "objects", path);
    if (!jobjs.is_array() || jobjs.empty()) fail(path + ".objects", "expected a non-empty array");
    for (size_t i = 0; i < jobjs.size(); ++i) {
        const std::string opath = path + ".objects[" + std::to_string(i) + "]";
        const json& jo = jobjs[i];
        scene::ObjectInstance obj;
        obj.name = require_string(jo, "name", opath);
        const std::string kind = require_string(jo, "kind", opath);
        try {
            obj.mesh = build_mesh_for_kind(kind, require(jo, "params", opath), opath + ".params");
        } catch (const InvalidParameterError& e) {
            fail(opath, e.what());
        }
        obj.albedo = to_rgb(require_triple(jo, "albedo", opath));
        obj.transform = parse_transform(jo.contains("transform") ? jo.at("transform") : json{},
                                        opath + ".transform");
        obj.class_tag = jo.contains("class_tag") ? jo.at("class_tag").get<std::string>() : "";
        obj.smooth_shading =
            jo.contains("smooth_shading") ? jo.at("smooth_shading").get<bool>() : kind != "cube";
        sc.objects.push_back(std::move(obj));
    }

    const json& jp = require(j, "patch", path);
    sc.patch.radius = require_number(jp, "radius", path + ".patch");
    const json& zr = require(jp, "z_range", path + ".patch");
    sc.patch.z_lo = zr[0].get<double>();
    sc.patch.z_hi = zr[1].get<double>();
    const json& ar = require(jp, "azimuth_range_deg", path + ".patch");
    sc.patch.azimuth_lo = deg_to_rad(ar[0].get<double>());
    sc.patch.azimuth_hi = deg_to_rad(ar[1].get<double>());
    sc.patch.segments = int_or(jp, "segments", 96);
    sc.patch.transform = parse_transform(jp.contains("transform") ? jp.at("transform") : json{},
                                         path + ".patch.transform");

    try {
        sc.validate();
    } catch (const Error& e) {
        fail(path, e.what());
    }
    return sc;
}

attack::SamplingMode parse_mode(const std::string& s, const std::string& path) {
    if (s == "random") return attack::SamplingMode::Random;
    if (s == "systematic") return attack::SamplingMode::Systematic;
    fail(path, "sampling mode must be 'random' or 'systematic'");
}

}  // namespace

std::vector<std::string> PipelineConfig::class_names() const {
    std::vector<std::string> names;
    names.reserve(dataset.classes.size());
    for (const auto& c : dataset.classes) names.push_back(c.name);
    return names;
}

int PipelineConfig::class_index(const std::string& name) const {
    for (size_t i = 0; i < dataset.classes.size(); ++i) {
        if (dataset.classes[i].name == name) return static_cast<int>(i);
    }
    throw ConfigError("unknown class name: " + name);
}

PipelineConfig parse_config(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }

    PipelineConfig cfg;
    cfg.config_hash = hash_bytes_hex(json_text);
    cfg.scene = parse_scene(require(j, "scene", "scene"), "scene");

    const json& jt = require(j, "transforms", "transforms");
    if (!jt.is_array()) fail("transforms", "expected an array");
    for (size_t i = 0; i < jt.size(); ++i) {
        const std::string tpath = "transforms[" + std::to_string(i) + "]";
        scene::TransformDistribution d;
        d.id = require_string(jt[i], "id", tpath);
        if (!scene::is_known_dimension(d.id)) fail(tpath + ".id", "unknown dimension id " + d.id);
        d.lo = require_number(jt[i], "lo", tpath);
        d.hi = require_number(jt[i], "hi", tpath);
        if (!(d.lo <= d.hi)) fail(tpath, "lo must be <= hi");
        cfg.transforms.push_back(std::move(d));
    }

    const json& jd = require(j, "dataset", "dataset");
    cfg.dataset.n_per_class = require_int(jd, "n_per_class", "dataset");
    cfg.dataset.val_fraction = number_or(jd, "val_fraction", 0.2);
    cfg.dataset.seed = static_cast<uint64_t>(require_int(jd, "seed", "dataset"));
    cfg.dataset.central_tag = require_string(jd, "central_tag", "dataset");
    const json& jcl = require(jd, "classes", "dataset");
    if (!jcl.is_object() || jcl.size() < 3) fail("dataset.classes", "need at least 3 classes");
    for (auto it = jcl.begin(); it != jcl.end(); ++it) {  // nlohmann iterates keys sorted
        const std::string cpath = "dataset.classes." + it.key();
        model::ClassObjectSpec spec;
        spec.name = it.key();
        const std::string kind = require_string(it.value(), "kind", cpath);
        spec.mesh = build_mesh_for_kind(kind, require(it.value(), "params", cpath),
                                        cpath + ".params");
        spec.albedo = to_rgb(require_triple(it.value(), "albedo", cpath));
        spec.transform = parse_transform(
            it.value().contains("transform") ? it.value().at("transform") : json{},
            cpath + ".transform");
        spec.smooth_shading = it.value().contains("smooth_shading")
                                  ? it.value().at("smooth_shading").get<bool>()
                                  : kind != "cube";
        cfg.dataset.classes.push_back(std::move(spec));
    }
    cfg.class_index(cfg.dataset.central_tag);  // must exist

    const json& jc = require(j, "classifier", "classifier");
    cfg.classifier.hyper.epochs = require_int(jc, "epochs", "classifier");
    cfg.classifier.hyper.lr = require_number(jc, "lr", "classifier");
    cfg.classifier.hyper.momentum = number_or(jc, "momentum", 0.9);
    cfg.classifier.hyper.batch_size = int_or(jc, "batch_size", 16);
    cfg.classifier.hyper.seed = static_cast<uint64_t>(require_int(jc, "seed", "classifier"));
    cfg.classifier.hyper.lr_decay = number_or(jc, "lr_decay", 0.5);
    if (jc.contains("lr_decay_epochs")) {
        for (const auto& e : jc.at("lr_decay_epochs")) {
            cfg.classifier.hyper.lr_decay_epochs.push_back(e.get<int>());
        }
    }
    cfg.classifier.min_val_accuracy = number_or(jc, "min_val_accuracy", 0.98);

    const json& ja = require(j, "attack", "attack");
    for (const auto& t : require(ja, "targets", "attack")) {
        cfg.attack.targets.push_back(t.get<std::string>());
    }
    if (cfg.attack.targets.empty()) fail("attack.targets", "need at least one target class");
    auto& ab = cfg.attack.base;
    ab.kappa = require_number(ja, "kappa", "attack");
    ab.lambda_tv = require_number(ja, "lambda_tv", "attack");
    ab.mode = parse_mode(require_string(ja, "mode", "attack"), "attack.mode");
    ab.iterations = require_int(ja, "iterations", "attack");
    ab.batch_size = int_or(ja, "batch_size", 16);
    ab.n_views = int_or(ja, "random_views", 64);
    ab.seed = static_cast<uint64_t>(require_int(ja, "seed", "attack"));
    const json& jps = require(ja, "patch_size", "attack");
    ab.patch_h = jps[0].get<int>();
    ab.patch_w = jps[1].get<int>();
    const std::string init = ja.contains("init") ? ja.at("init").get<std::string>() : "gray";
    if (init == "gray") {
        ab.init = attack::PatchInit::Gray;
    } else if (init == "noise") {
        ab.init = attack::PatchInit::Noise;
    } else {
        fail("attack.init", "must be 'gray' or 'noise'");
    }
    if (ja.contains("adam")) {
        const json& jad = ja.at("adam");
        ab.adam.lr = number_or(jad, "lr", ab.adam.lr);
        ab.adam.beta1 = number_or(jad, "beta1", ab.adam.beta1);
        ab.adam.beta2 = number_or(jad, "beta2", ab.adam.beta2);
        ab.adam.eps = number_or(jad, "eps", ab.adam.eps);
    }
    ab.validation_views = int_or(ja, "validation_views", 48);
    ab.stop_fooling_rate = number_or(ja, "stop_fooling_rate", 2.0);
    const json& jsc = require(ja, "systematic_counts", "attack");
    for (auto it = jsc.begin(); it != jsc.end(); ++it) {
        if (!scene::is_known_dimension(it.key())) {
            fail("attack.systematic_counts", "unknown dimension id " + it.key());
        }
        ab.systematic_counts.emplace_back(it.key(), it.value().get<int>());
    }

    const json& je = require(j, "eval", "eval");
    auto parse_axis = [&](const char* name, const char* dim_id) {
        EvalAxis axis;
        const json& jx = require(je, name, "eval");
        axis.dist.id = dim_id;
        axis.dist.lo = require_number(jx, "lo", std::string("eval.") + name);
        axis.dist.hi = require_number(jx, "hi", std::string("eval.") + name);
        axis.count = require_int(jx, "count", std::string("eval.") + name);
        if (axis.count < 1) fail(std::string("eval.") + name + ".count", "must be >= 1");
        return axis;
    };
    cfg.eval.azimuth = parse_axis("azimuth", "camera-azimuth");
    cfg.eval.elevation = parse_axis("elevation", "camera-elevation");
    cfg.eval.distance = parse_axis("distance", "camera-distance");
    if (je.contains("presets")) {
        for (auto it = je.at("presets").begin(); it != je.at("presets").end(); ++it) {
            cfg.eval.presets[it.key()] = {
                require_int(it.value(), "azimuth_count", "eval.presets." + it.key()),
                require_int(it.value(), "elevation_count", "eval.presets." + it.key()),
                require_int(it.value(), "distance_count", "eval.presets." + it.key())};
        }
    }

    if (j.contains("holdout")) {
        const json& jh = j.at("holdout");
        cfg.holdout.central_tag = cfg.dataset.central_tag;
        cfg.holdout.desk_object = jh.contains("desk_object")
                                      ? jh.at("desk_object").get<std::string>()
                                      : "desk";
        cfg.holdout.patch_shift = number_or(jh, "patch_shift", 0.02);
        if (jh.contains("mutations")) {
            for (const auto& mname : jh.at("mutations")) {
                cfg.holdout_mutations.push_back(mname.get<std::string>());
                evaluate::mutation_from_string(cfg.holdout_mutations.back());  // validate
            }
        }
    } else {
        cfg.holdout.central_tag = cfg.dataset.central_tag;
    }
    if (cfg.holdout_mutations.empty()) {
        for (auto m : evaluate::kHoldoutSuite) cfg.holdout_mutations.push_back(mutation_name(m));
    }

    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

    // Attack targets must be valid, distinct from the original class.
    for (const auto& t : cfg.attack.targets) {
        const int idx = cfg.class_index(t);
        if (t == cfg.dataset.central_tag) fail("attack.targets", "target equals original class");
        (void)idx;
    }
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    if (!fs::exists(path)) {
        throw ConfigError("config file not found: " + path);
    }
    return parse_config(io::read_text_file(path), path);
}

std::string hash_bytes_hex(const std::string& bytes) {
    const uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void update_manifest(const std::string& out_dir, const std::string& config_hash,
                     const std::string& stage, const StageRecord& record) {
    for (const auto& out : record.outputs) {
        if (!fs::exists(out)) {
            throw IoError("manifest references a missing output: " + out);
        }
    }
    const fs::path path = fs::path(out_dir) / "manifest.json";
    nlohmann::ordered_json manifest;
    if (fs::exists(path)) {
        try {
            manifest = nlohmann::ordered_json::parse(io::read_text_file(path.string()));
        } catch (const nlohmann::json::exception&) {
            manifest = nlohmann::ordered_json::object();
        }
    }
    manifest["tool_version"] = kVersion;
    manifest["config_hash"] = config_hash;
    if (!manifest.contains("stages")) manifest["stages"] = nlohmann::ordered_json::object();
    nlohmann::ordered_json rec;
    rec["seed"] = record.seed;
    rec["wall_ms"] = record.wall_ms;
    rec["outputs"] = record.outputs;
    manifest["stages"][stage] = rec;
    io::write_text_file(path.string(), manifest.dump(2) + "\n");
}

}  // namespace pf::config
