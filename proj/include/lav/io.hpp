#pragma once

// File formats for the pipeline's artifacts: JSON configs and reports, PPM
// frame export, raw float dumps with a JSON sidecar, the per-step trace CSV,
// the ablation CSV, and the run manifest. JSON is the one human-writable
// format; PPM is quantized preview only, the .f32 dump preserves values.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lav/errors.hpp"
#include "lav/lightworld.hpp"
#include "lav/metrics.hpp"
#include "lav/pipeline.hpp"
#include "lav/tensor.hpp"

namespace lav {

using nlohmann::json;

// Shortest decimal form that parses back to the same double, so CSV files
// stay both exact and readable.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_json_file: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("read_json_file: " + path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("write_json_file: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write_json_file: write failed for " + path);
}

// --- enum <-> string ---------------------------------------------------

namespace detail {

inline std::string kind_name(FusionSchedule::Kind k) {
    return k == FusionSchedule::Kind::power_decay ? "power_decay" : "constant";
}

inline FusionSchedule::Kind fusion_kind(const std::string& s) {
    if (s == "power_decay") return FusionSchedule::Kind::power_decay;
    if (s == "constant") return FusionSchedule::Kind::constant;
    throw IoError("config: unknown fusion schedule kind \"" + s + "\"");
}

inline std::string kind_name(Denoiser::Kind k) {
    return k == Denoiser::Kind::oracle ? "oracle" : "smoothing";
}

inline Denoiser::Kind denoiser_kind(const std::string& s) {
    if (s == "oracle") return Denoiser::Kind::oracle;
    if (s == "smoothing") return Denoiser::Kind::smoothing;
    throw IoError("config: unknown denoiser kind \"" + s + "\"");
}

inline std::string kind_name(Codec::Kind k) {
    return k == Codec::Kind::identity ? "identity" : "downsample";
}

inline std::string mode_name(PipelineConfig::Mode m) {
    return m == PipelineConfig::Mode::standard ? "standard" : "background";
}

inline PipelineConfig::Mode run_mode(const std::string& s) {
    if (s == "standard") return PipelineConfig::Mode::standard;
    if (s == "background" || s == "background-generation")
        return PipelineConfig::Mode::background;
    throw IoError("config: unknown run mode \"" + s + "\"");
}

inline std::string coverage_name(SceneSpec::Coverage c) {
    switch (c) {
        case SceneSpec::Coverage::object: return "object";
        case SceneSpec::Coverage::full: return "full";
        default: return "empty";
    }
}

inline SceneSpec::Coverage coverage_kind(const std::string& s) {
    if (s == "object") return SceneSpec::Coverage::object;
    if (s == "full") return SceneSpec::Coverage::full;
    if (s == "empty") return SceneSpec::Coverage::empty;
    throw IoError("scene spec: unknown coverage \"" + s + "\"");
}

}  // namespace detail

// --- configs -----------------------------------------------------------

inline json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["t_m"] = cfg.t_m;
    j["start_alpha_bar"] = cfg.start_alpha_bar;
    j["master"] = {{"steps", cfg.master.steps},
                   {"beta_start", cfg.master.beta_start},
                   {"beta_end", cfg.master.beta_end}};
    j["fusion"] = {{"kind", detail::kind_name(cfg.fusion.kind)},
                   {"exponent", cfg.fusion.exponent},
                   {"constant", cfg.fusion.constant}};
    j["cla"] = {{"gamma", cfg.cla.gamma}};
    j["denoiser"] = {{"kind", detail::kind_name(cfg.denoiser.kind)},
                     {"rho", cfg.denoiser.rho},
                     {"radius", cfg.denoiser.radius},
                     {"prior", cfg.denoiser.prior}};
    j["codec"] = {{"kind", detail::kind_name(cfg.codec.kind())}, {"scale", cfg.codec.scale()}};
    j["condition"] = {{"target", cfg.condition.target.weights},
                      {"sigma", cfg.condition.sigma},
                      {"seed", cfg.condition.seed}};
    j["source_light"] = cfg.source_light.weights;
    j["noise_seed"] = cfg.noise_seed;
    j["mode"] = detail::mode_name(cfg.mode);
    j["bg_total_steps"] = cfg.bg_total_steps;
    return j;
}

// Absent keys keep their defaults, so a hand-written config may name only
// the fields it changes.
inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    try {
        cfg.t_m = j.value("t_m", cfg.t_m);
        cfg.start_alpha_bar = j.value("start_alpha_bar", cfg.start_alpha_bar);
        if (j.contains("master")) {
            const json& m = j.at("master");
            cfg.master.steps = m.value("steps", cfg.master.steps);
            cfg.master.beta_start = m.value("beta_start", cfg.master.beta_start);
            cfg.master.beta_end = m.value("beta_end", cfg.master.beta_end);
        }
        if (j.contains("fusion")) {
            const json& f = j.at("fusion");
            if (f.contains("kind")) cfg.fusion.kind = detail::fusion_kind(f.at("kind"));
            cfg.fusion.exponent = f.value("exponent", cfg.fusion.exponent);
            cfg.fusion.constant = f.value("constant", cfg.fusion.constant);
        }
        if (j.contains("cla")) cfg.cla.gamma = j.at("cla").value("gamma", cfg.cla.gamma);
        if (j.contains("denoiser")) {
            const json& d = j.at("denoiser");
            if (d.contains("kind")) cfg.denoiser.kind = detail::denoiser_kind(d.at("kind"));
            cfg.denoiser.rho = d.value("rho", cfg.denoiser.rho);
            cfg.denoiser.radius = d.value("radius", cfg.denoiser.radius);
            cfg.denoiser.prior = d.value("prior", cfg.denoiser.prior);
        }
        if (j.contains("codec")) {
            const json& c = j.at("codec");
            const std::string kind = c.value("kind", detail::kind_name(cfg.codec.kind()));
            if (kind == "identity")
                cfg.codec = Codec::identity();
            else if (kind == "downsample")
                cfg.codec = Codec::downsample(c.value("scale", 2));
            else
                throw IoError("config: unknown codec kind \"" + kind + "\"");
        }
        if (j.contains("condition")) {
            const json& c = j.at("condition");
            if (c.contains("target"))
                cfg.condition.target.weights = c.at("target").get<std::vector<double>>();
            cfg.condition.sigma = c.value("sigma", cfg.condition.sigma);
            cfg.condition.seed = c.value("seed", cfg.condition.seed);
        }
        if (j.contains("source_light"))
            cfg.source_light.weights = j.at("source_light").get<std::vector<double>>();
        cfg.noise_seed = j.value("noise_seed", cfg.noise_seed);
        if (j.contains("mode")) cfg.mode = detail::run_mode(j.at("mode"));
        cfg.bg_total_steps = j.value("bg_total_steps", cfg.bg_total_steps);
    } catch (const json::exception& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline PipelineConfig config_from_file(const std::string& path) {
    return config_from_json(read_json_file(path));
}

inline json scene_spec_to_json(const SceneSpec& spec) {
    json j;
    j["frames"] = spec.frames;
    j["channels"] = spec.channels;
    j["height"] = spec.height;
    j["width"] = spec.width;
    j["lights"] = spec.lights;
    j["object_size"] = spec.object_size;
    j["object_x"] = spec.object_x;
    j["object_y"] = spec.object_y;
    j["speed_x"] = spec.speed_x;
    j["speed_y"] = spec.speed_y;
    j["bg_albedo"] = spec.bg_albedo;
    j["bg_contrast"] = spec.bg_contrast;
    j["obj_albedo"] = spec.obj_albedo;
    j["obj_contrast"] = spec.obj_contrast;
    j["coverage"] = detail::coverage_name(spec.coverage);
    return j;
}

inline SceneSpec scene_spec_from_json(const json& j) {
    SceneSpec spec;
    try {
        spec.frames = j.value("frames", spec.frames);
        spec.channels = j.value("channels", spec.channels);
        spec.height = j.value("height", spec.height);
        spec.width = j.value("width", spec.width);
        spec.lights = j.value("lights", spec.lights);
        spec.object_size = j.value("object_size", spec.object_size);
        spec.object_x = j.value("object_x", spec.object_x);
        spec.object_y = j.value("object_y", spec.object_y);
        spec.speed_x = j.value("speed_x", spec.speed_x);
        spec.speed_y = j.value("speed_y", spec.speed_y);
        spec.bg_albedo = j.value("bg_albedo", spec.bg_albedo);
        spec.bg_contrast = j.value("bg_contrast", spec.bg_contrast);
        spec.obj_albedo = j.value("obj_albedo", spec.obj_albedo);
        spec.obj_contrast = j.value("obj_contrast", spec.obj_contrast);
        if (j.contains("coverage")) spec.coverage = detail::coverage_kind(j.at("coverage"));
    } catch (const json::exception& e) {
        throw IoError(std::string("scene spec: ") + e.what());
    }
    return spec;
}

// --- metrics report ----------------------------------------------------

// The first three metrics stand in for the perceptual scores a full-scale
// evaluation would use, so their report keys carry a _substitute suffix.
inline json report_to_json(const MetricsReport& rep) {
    json j;
    j["flicker_index_substitute"] = rep.flicker;
    j["temporal_consistency_substitute"] = rep.consistency;
    j["motion_preservation_substitute"] = rep.motion_epe;
    j["relight_rmse"] = rep.rmse;
    return j;
}

inline MetricsReport report_from_json(const json& j) {
    MetricsReport rep;
    try {
        rep.flicker = j.at("flicker_index_substitute").get<double>();
        rep.consistency = j.at("temporal_consistency_substitute").get<double>();
        rep.motion_epe = j.at("motion_preservation_substitute").get<double>();
        rep.rmse = j.at("relight_rmse").get<double>();
    } catch (const json::exception& e) {
        throw IoError(std::string("metrics report: ") + e.what());
    }
    return rep;
}

// --- ppm frames --------------------------------------------------------

// P6, 8-bit, straight clamp to [0,1] with no gamma curve. One- and
// three-channel frames only; gray replicates into all three planes.
inline void write_ppm(const std::string& path, const VideoTensor& t, int frame) {
    const Shape s = t.shape();
    if (frame < 0 || frame >= s.frames)
        throw std::invalid_argument("write_ppm: frame index out of range");
    if (s.channels != 1 && s.channels != 3)
        throw std::invalid_argument("write_ppm: need 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_ppm: cannot open " + path);
    out << "P6\n" << s.width << ' ' << s.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(s.width) * 3);
    for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = t.at(frame, s.channels == 1 ? 0 : c, y, x);
                const double q = std::clamp(v, 0.0, 1.0) * 255.0;
                row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
                    static_cast<unsigned char>(std::lround(q));
            }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write_ppm: write failed for " + path);
}

inline VideoTensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_ppm: cannot open " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || magic != "P6" || maxval != 255 || w < 1 || h < 1)
        throw IoError("read_ppm: unsupported header in " + path);
    in.get();  // the single whitespace byte after the header
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("read_ppm: truncated pixel data in " + path);
    VideoTensor t(Shape{1, 3, h, w});
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = raw[i++] / 255.0;
    return t;
}

inline std::string frame_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.ppm", index);
    return buf;
}

inline std::vector<std::string> write_frames(const std::string& dir, const VideoTensor& t) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(t.shape().frames));
    for (int f = 0; f < t.shape().frames; ++f) {
        names.push_back(frame_name(f));
        write_ppm((std::filesystem::path(dir) / names.back()).string(), t, f);
    }
    return names;
}

inline VideoTensor read_frames(const std::string& dir) {
    std::vector<VideoTensor> frames;
    for (int f = 0;; ++f) {
        const std::filesystem::path p = std::filesystem::path(dir) / frame_name(f);
        if (!std::filesystem::exists(p)) break;
        frames.push_back(read_ppm(p.string()));
    }
    if (frames.empty()) throw IoError("read_frames: no frame_0000.ppm under " + dir);
    const Shape s0 = frames.front().shape();
    VideoTensor t(Shape{static_cast<int>(frames.size()), s0.channels, s0.height, s0.width});
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].shape() != s0) throw IoError("read_frames: mixed frame sizes under " + dir);
        std::copy(frames[f].vec().begin(), frames[f].vec().end(),
                  t.vec().begin() + static_cast<std::ptrdiff_t>(f * frames[f].size()));
    }
    return t;
}

// --- raw float dump ----------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "raw .f32 dumps are written little-endian");

inline void write_f32(const std::string& path, const VideoTensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_f32: cannot open " + path);
    std::vector<float> buf(t.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(t.vec()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write_f32: write failed for " + path);
    const Shape s = t.shape();
    write_json_file(path + ".json", json{{"frames", s.frames},
                                         {"channels", s.channels},
                                         {"height", s.height},
                                         {"width", s.width},
                                         {"dtype", "float32"},
                                         {"byte_order", "little_endian"}});
}

inline VideoTensor read_f32(const std::string& path) {
    const json side = read_json_file(path + ".json");
    Shape s;
    try {
        s.frames = side.at("frames").get<int>();
        s.channels = side.at("channels").get<int>();
        s.height = side.at("height").get<int>();
        s.width = side.at("width").get<int>();
    } catch (const json::exception& e) {
        throw IoError("read_f32: bad sidecar for " + path + ": " + e.what());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_f32: cannot open " + path);
    VideoTensor t(s);
    std::vector<float> buf(t.size());
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in || in.peek() != std::ifstream::traits_type::eof())
        throw IoError("read_f32: size of " + path + " does not match its sidecar dims");
    for (std::size_t i = 0; i < buf.size(); ++i) t.vec()[i] = static_cast<double>(buf[i]);
    return t;
}

// --- trace csv ---------------------------------------------------------

inline void write_trace_csv(const std::string& path, const std::vector<StepTrace>& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_csv: cannot open " + path);
    out << "t,lambda,target_gap_rms,fusion_flicker\n";
    for (const StepTrace& s : trace)
        out << s.t << ',' << fmt_double(s.lambda) << ',' << fmt_double(s.target_gap) << ','
            << fmt_double(s.target_flicker) << '\n';
    if (!out) throw IoError("write_trace_csv: write failed for " + path);
}

// --- ablation csv ------------------------------------------------------

struct AblationRow {
    std::string id;
    double gamma = 0.0;
    std::string schedule;  // fusion schedule kind at this grid point
    double k = 1.0;        // power-decay exponent (or the constant value)
    double sigma = 0.0;
    MetricsReport report;
};

inline void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_ablation_csv: cannot open " + path);
    out << "run,gamma,schedule,k,sigma,flicker_index_substitute,"
           "temporal_consistency_substitute,motion_preservation_substitute,relight_rmse\n";
    for (const AblationRow& r : rows)
        out << r.id << ',' << fmt_double(r.gamma) << ',' << r.schedule << ',' << fmt_double(r.k)
            << ',' << fmt_double(r.sigma) << ',' << fmt_double(r.report.flicker) << ','
            << fmt_double(r.report.consistency) << ',' << fmt_double(r.report.motion_epe) << ','
            << fmt_double(r.report.rmse) << '\n';
    if (!out) throw IoError("write_ablation_csv: write failed for " + path);
}

// --- run manifest ------------------------------------------------------

// Everything needed to reproduce a run bit-exactly plus the hashes to check
// the reproduction against.
struct RunManifest {
    PipelineConfig config;
    std::string scene_path;
    std::string scene_hash;
    std::string out_dir;
    std::map<std::string, std::string> artifacts;  // relative path -> content hash
    double wall_seconds = 0.0;
};

inline bool is_run_manifest(const json& j) {
    return j.is_object() && j.value("kind", "") == "run_manifest";
}

inline json manifest_to_json(const RunManifest& man) {
    json j;
    j["kind"] = "run_manifest";
    j["scene"] = man.scene_path;
    j["scene_hash"] = man.scene_hash;
    j["out"] = man.out_dir;
    j["wall_seconds"] = man.wall_seconds;
    j["config"] = config_to_json(man.config);
    j["artifacts"] = man.artifacts;
    return j;
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest man;
    if (!is_run_manifest(j)) throw IoError("manifest: missing kind \"run_manifest\"");
    try {
        man.scene_path = j.value("scene", "");
        man.scene_hash = j.value("scene_hash", "");
        man.out_dir = j.value("out", ".");
        man.wall_seconds = j.value("wall_seconds", 0.0);
        man.config = config_from_json(j.at("config"));
        if (j.contains("artifacts"))
            man.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw IoError(std::string("manifest: ") + e.what());
    }
    return man;
}

inline void write_manifest(const std::string& path, const RunManifest& man) {
    write_json_file(path, manifest_to_json(man));
}

inline RunManifest read_manifest(const std::string& path) {
    return manifest_from_json(read_json_file(path));
}

}  // namespace lav
