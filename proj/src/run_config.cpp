#include "tubetrack/run_config.hpp"

#include <fstream>
#include <set>

#include "tubetrack/errors.hpp"

namespace tubetrack {

using nlohmann::json;

void LossConfig::validate() const {
    if (!(weights.alpha > 0))
        throw ConfigError("loss.alpha: must be positive");
    if (!(weights.beta > 0))
        throw ConfigError("loss.beta: must be positive");
    if (!(neg_pos_ratio >= 0))
        throw ConfigError("loss.neg_pos_ratio: must be >= 0");
}

void RunConfig::validate() const {
    if (n_frames < 2)
        throw ConfigError("n_frames: must be >= 2");
    if (n_classes < 2)
        throw ConfigError("n_classes: must be >= 2");
    anchor.validate();
    tracker.validate();
    loss.validate();
    oracle.validate();
    scene.validate();
    noise.validate();
    basis.validate();
    if (anchor.n_frames != n_frames || tracker.n_frames != n_frames ||
        oracle.n_frames != n_frames || basis.n_frames != n_frames)
        throw ConfigError("n_frames: anchor, tracker, oracle and basis frame counts must agree");
    if (scene.n_frames < n_frames)
        throw ConfigError("scene.n_frames: must cover at least one window");
}

namespace {

void reject_unknown(const json& j, const std::string& section, const std::set<std::string>& keys) {
    if (!j.is_object())
        throw ConfigError(section + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!keys.count(key))
            throw ConfigError(section + ": unknown key '" + key + "'");
}

template <typename T>
void load(const json& j, const char* key, T& out) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(key) + ": wrong type");
    }
}

std::array<double, 3> load_coeffs(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(what + ": expected [quadratic, linear, constant]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json dump_coeffs(const std::array<double, 3>& c) { return json::array({c[0], c[1], c[2]}); }

}  // namespace

json RunConfig::to_json() const {
    json j;
    j["n_frames"] = n_frames;
    j["n_classes"] = n_classes;

    json& a = j["anchor"];
    a["grid_sizes"] = anchor.grid_sizes;
    a["tubes_per_cell"] = anchor.tubes_per_cell;
    a["scales"] = anchor.scales;
    a["aspect_ratios"] = anchor.aspect_ratios;

    json& t = j["tracker"];
    t["window_stride"] = tracker.window_stride;
    t["delta_c"] = tracker.delta_c;
    t["delta_nms"] = tracker.delta_nms;
    t["delta_assoc"] = tracker.delta_assoc;
    t["max_misses"] = tracker.max_misses;
    t["vis_threshold"] = tracker.vis_threshold;

    json& l = j["loss"];
    l["alpha"] = loss.weights.alpha;
    l["beta"] = loss.weights.beta;
    l["neg_pos_ratio"] = loss.neg_pos_ratio;
    l["smooth_l1"] = loss.smooth_l1;

    json& o = j["oracle"];
    o["delta_o"] = oracle.delta_o;
    o["delta_v"] = oracle.delta_v;
    o["logit_margin"] = oracle.logit_margin;

    json& s = j["scene"];
    s["n_objects"] = scene.n_objects;
    s["n_frames"] = scene.n_frames;
    s["frame_width"] = scene.frame_width;
    s["frame_height"] = scene.frame_height;
    s["seed"] = scene.seed;
    s["segment_frames"] = scene.segment_frames;
    s["min_size"] = scene.min_size;
    s["max_size"] = scene.max_size;
    s["max_speed"] = scene.max_speed;
    s["max_accel"] = scene.max_accel;
    s["size_drift"] = scene.size_drift;
    s["spawn_prob"] = scene.spawn_prob;
    s["despawn_prob"] = scene.despawn_prob;
    s["cubic_segments"] = scene.cubic_segments;
    s["occluders"] = json::array();
    for (const OccluderRect& r : scene.occluders)
        s["occluders"].push_back(json::array({r.left, r.top, r.right, r.bottom}));
    s["objects"] = json::array();
    for (const ScriptedObject& obj : scene.objects) {
        json jo;
        jo["spawn_frame"] = obj.spawn_frame;
        jo["class_id"] = obj.class_id;
        jo["segments"] = json::array();
        for (const MotionSegment& seg : obj.segments) {
            json js;
            js["n_frames"] = seg.n_frames;
            js["cx"] = dump_coeffs(seg.cx);
            js["cy"] = dump_coeffs(seg.cy);
            js["log_w"] = dump_coeffs(seg.log_w);
            js["log_h"] = dump_coeffs(seg.log_h);
            js["cx_cubic"] = seg.cx_cubic;
            js["cy_cubic"] = seg.cy_cubic;
            jo["segments"].push_back(js);
        }
        s["objects"].push_back(jo);
    }

    json& n = j["noise"];
    n["center_sigma"] = noise.center_sigma;
    n["size_sigma"] = noise.size_sigma;
    n["fn_rate"] = noise.fn_rate;
    n["seed"] = noise.seed;

    json& b = j["basis"];
    b["tau0"] = basis.tau0;
    b["dtau"] = basis.dtau;

    json& p = j["paths"];
    p["gt"] = paths.gt;
    p["tubes"] = paths.tubes;
    p["output"] = paths.output;
    p["manifest"] = paths.manifest;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    reject_unknown(j, "config",
                   {"n_frames", "n_classes", "anchor", "tracker", "loss", "oracle", "scene",
                    "noise", "basis", "paths"});
    load(j, "n_frames", cfg.n_frames);
    load(j, "n_classes", cfg.n_classes);

    bool basis_given = j.contains("basis");
    if (j.contains("anchor")) {
        const json& a = j.at("anchor");
        reject_unknown(a, "anchor", {"grid_sizes", "tubes_per_cell", "scales", "aspect_ratios"});
        load(a, "grid_sizes", cfg.anchor.grid_sizes);
        load(a, "tubes_per_cell", cfg.anchor.tubes_per_cell);
        load(a, "scales", cfg.anchor.scales);
        load(a, "aspect_ratios", cfg.anchor.aspect_ratios);
    }
    if (j.contains("tracker")) {
        const json& t = j.at("tracker");
        reject_unknown(t, "tracker",
                       {"window_stride", "delta_c", "delta_nms", "delta_assoc", "max_misses",
                        "vis_threshold"});
        load(t, "window_stride", cfg.tracker.window_stride);
        load(t, "delta_c", cfg.tracker.delta_c);
        load(t, "delta_nms", cfg.tracker.delta_nms);
        load(t, "delta_assoc", cfg.tracker.delta_assoc);
        load(t, "max_misses", cfg.tracker.max_misses);
        load(t, "vis_threshold", cfg.tracker.vis_threshold);
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        reject_unknown(l, "loss", {"alpha", "beta", "neg_pos_ratio", "smooth_l1"});
        load(l, "alpha", cfg.loss.weights.alpha);
        load(l, "beta", cfg.loss.weights.beta);
        load(l, "neg_pos_ratio", cfg.loss.neg_pos_ratio);
        load(l, "smooth_l1", cfg.loss.smooth_l1);
    }
    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        reject_unknown(o, "oracle", {"delta_o", "delta_v", "logit_margin"});
        load(o, "delta_o", cfg.oracle.delta_o);
        load(o, "delta_v", cfg.oracle.delta_v);
        load(o, "logit_margin", cfg.oracle.logit_margin);
    }
    if (j.contains("scene")) {
        const json& s = j.at("scene");
        reject_unknown(s, "scene",
                       {"n_objects", "n_frames", "frame_width", "frame_height", "seed",
                        "segment_frames", "min_size", "max_size", "max_speed", "max_accel",
                        "size_drift", "spawn_prob", "despawn_prob", "cubic_segments", "occluders",
                        "objects"});
        load(s, "n_objects", cfg.scene.n_objects);
        load(s, "n_frames", cfg.scene.n_frames);
        load(s, "frame_width", cfg.scene.frame_width);
        load(s, "frame_height", cfg.scene.frame_height);
        load(s, "seed", cfg.scene.seed);
        load(s, "segment_frames", cfg.scene.segment_frames);
        load(s, "min_size", cfg.scene.min_size);
        load(s, "max_size", cfg.scene.max_size);
        load(s, "max_speed", cfg.scene.max_speed);
        load(s, "max_accel", cfg.scene.max_accel);
        load(s, "size_drift", cfg.scene.size_drift);
        load(s, "spawn_prob", cfg.scene.spawn_prob);
        load(s, "despawn_prob", cfg.scene.despawn_prob);
        load(s, "cubic_segments", cfg.scene.cubic_segments);
        if (s.contains("occluders")) {
            for (const json& r : s.at("occluders")) {
                if (!r.is_array() || r.size() != 4)
                    throw ConfigError("scene.occluders: expected [left, top, right, bottom]");
                cfg.scene.occluders.push_back(OccluderRect{r[0].get<double>(), r[1].get<double>(),
                                                           r[2].get<double>(), r[3].get<double>()});
            }
        }
        if (s.contains("objects")) {
            for (const json& jo : s.at("objects")) {
                reject_unknown(jo, "scene.objects[]", {"spawn_frame", "class_id", "segments"});
                ScriptedObject obj;
                load(jo, "spawn_frame", obj.spawn_frame);
                load(jo, "class_id", obj.class_id);
                if (!jo.contains("segments"))
                    throw ConfigError("scene.objects[]: missing segments");
                for (const json& js : jo.at("segments")) {
                    reject_unknown(js, "scene.objects[].segments[]",
                                   {"n_frames", "cx", "cy", "log_w", "log_h", "cx_cubic",
                                    "cy_cubic"});
                    MotionSegment seg;
                    load(js, "n_frames", seg.n_frames);
                    if (js.contains("cx")) seg.cx = load_coeffs(js.at("cx"), "segment cx");
                    if (js.contains("cy")) seg.cy = load_coeffs(js.at("cy"), "segment cy");
                    if (js.contains("log_w")) seg.log_w = load_coeffs(js.at("log_w"), "segment log_w");
                    if (js.contains("log_h")) seg.log_h = load_coeffs(js.at("log_h"), "segment log_h");
                    load(js, "cx_cubic", seg.cx_cubic);
                    load(js, "cy_cubic", seg.cy_cubic);
                    obj.segments.push_back(seg);
                }
                cfg.scene.objects.push_back(std::move(obj));
            }
        }
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        reject_unknown(n, "noise", {"center_sigma", "size_sigma", "fn_rate", "seed"});
        load(n, "center_sigma", cfg.noise.center_sigma);
        load(n, "size_sigma", cfg.noise.size_sigma);
        load(n, "fn_rate", cfg.noise.fn_rate);
        load(n, "seed", cfg.noise.seed);
    }
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        reject_unknown(p, "paths", {"gt", "tubes", "output", "manifest"});
        load(p, "gt", cfg.paths.gt);
        load(p, "tubes", cfg.paths.tubes);
        load(p, "output", cfg.paths.output);
        load(p, "manifest", cfg.paths.manifest);
    }

    // One n_frames for every window-shaped component.
    cfg.anchor.n_frames = cfg.n_frames;
    cfg.tracker.n_frames = cfg.n_frames;
    cfg.oracle.n_frames = cfg.n_frames;
    cfg.oracle.window_stride = cfg.tracker.window_stride;
    cfg.oracle.n_classes = cfg.n_classes;
    cfg.oracle.vis_threshold = cfg.tracker.vis_threshold;
    if (basis_given) {
        const json& b = j.at("basis");
        reject_unknown(b, "basis", {"tau0", "dtau"});
        load(b, "tau0", cfg.basis.tau0);
        load(b, "dtau", cfg.basis.dtau);
        cfg.basis.n_frames = cfg.n_frames;
    } else {
        cfg.basis = TimeBasis::normalized(cfg.n_frames);
    }

    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

void write_manifest(const RunConfig& cfg, const std::filesystem::path& path) {
    json j;
    j["tubetrack_manifest"] = 1;
    j["seed"] = cfg.scene.seed;
    j["config"] = cfg.to_json();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

RunConfig read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("tubetrack_manifest"))
        throw ConfigError("manifest " + path.string() + ": missing tubetrack_manifest marker");
    reject_unknown(j, "manifest", {"tubetrack_manifest", "seed", "config"});
    RunConfig cfg = RunConfig::from_json(j.at("config"));
    if (j.contains("seed"))
        cfg.scene.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace tubetrack
