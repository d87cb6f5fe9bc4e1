#pragma once

// Synthetic light-transport world with exactly linear lighting.
//
// A scene stores, per frame, K nonnegative basis images: the appearance of
// the scene under each of K unit light sources. Rendering under an
// illumination vector L is the weighted sum of basis images, so additivity
// and homogeneity in L hold by construction and relighting never moves a
// pixel. Scenes carry a textured disk moving with integer per-frame offsets
// over a static textured background, plus the per-frame object mask and
// positions, which make ground-truth optical flow exact.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "lav/errors.hpp"
#include "lav/rng.hpp"
#include "lav/tensor.hpp"

namespace lav {

struct Illumination {
    std::vector<double> weights;

    int lights() const { return static_cast<int>(weights.size()); }

    void validate() const {
        if (weights.empty()) throw std::invalid_argument("Illumination: empty weight vector");
        for (double w : weights)
            if (!std::isfinite(w) || w < 0.0)
                throw std::invalid_argument("Illumination: weights must be finite and >= 0");
    }
};

struct LightingCondition {
    Illumination target;
    double sigma = 0.0;       // per-component jitter applied frame by frame
    std::uint64_t seed = 0;   // jitter stream seed
};

struct SceneSpec {
    int frames = 16;
    int channels = 3;
    int height = 64;
    int width = 64;
    int lights = 4;

    int object_size = 12;  // disk diameter in pixels
    int object_x = 10;     // top-left of the disk bounding box at frame 0
    int object_y = 26;
    int speed_x = 1;       // integer offset per frame
    int speed_y = 0;

    double bg_albedo = 0.50;
    // Background texture amplitude. The texture is static so it adds no
    // flicker, but block matching must still find its zero displacement when
    // the illumination jitters, which takes gradients well above the
    // jitter-induced per-frame gain swing.
    double bg_contrast = 0.60;
    double obj_albedo = 0.55;
    double obj_contrast = 0.16;  // object texture is kept smooth: it moves

    enum class Coverage { object, full, empty };
    Coverage coverage = Coverage::object;
};

struct Scene {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    int lights = 0;

    std::vector<double> basis;              // [frame][light][channel][y][x]
    std::vector<std::uint8_t> masks;        // [frame][y][x], 1 = foreground
    std::vector<std::array<int, 2>> positions;  // object top-left (x, y) per frame

    std::size_t basis_index(int f, int k, int c, int y, int x) const {
        return (((static_cast<std::size_t>(f) * lights + k) * channels + c) * height + y) *
                   width + x;
    }

    double basis_at(int f, int k, int c, int y, int x) const {
        return basis[basis_index(f, k, c, y, x)];
    }

    std::uint8_t mask_at(int f, int y, int x) const {
        return masks[(static_cast<std::size_t>(f) * height + y) * width + x];
    }

    Shape frame_shape() const { return Shape{frames, channels, height, width}; }

    void check_light(const Illumination& L) const {
        L.validate();
        if (L.lights() != lights)
            throw std::invalid_argument("Scene: illumination has " +
                                        std::to_string(L.lights()) + " weights, scene has " +
                                        std::to_string(lights) + " lights");
    }

    // Accumulate frame f under illumination L into out (same video shape).
    void render_frame_into(int f, const Illumination& L, VideoTensor& out) const {
        for (int c = 0; c < channels; ++c)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    double acc = 0.0;
                    for (int k = 0; k < lights; ++k)
                        acc += L.weights[k] * basis_at(f, k, c, y, x);
                    out.at(f, c, y, x) = acc;
                }
    }
};

inline VideoTensor render(const Scene& s, const Illumination& L) {
    s.check_light(L);
    VideoTensor out(s.frame_shape());
    for (int f = 0; f < s.frames; ++f) s.render_frame_into(f, L, out);
    return out;
}

// Per-frame illumination variant used by the relighter.
inline VideoTensor render_sequence(const Scene& s, const std::vector<Illumination>& Ls) {
    if (static_cast<int>(Ls.size()) != s.frames)
        throw std::invalid_argument("render_sequence: need one illumination per frame");
    VideoTensor out(s.frame_shape());
    for (int f = 0; f < s.frames; ++f) {
        s.check_light(Ls[f]);
        s.render_frame_into(f, Ls[f], out);
    }
    return out;
}

// Exact per-pair displacement field: channel 0 = dx, channel 1 = dy, defined
// on the source frame of each adjacent pair, nonzero only on the object mask.
inline VideoTensor ground_truth_flow(const Scene& s) {
    if (s.frames < 2) throw std::invalid_argument("ground_truth_flow: need >= 2 frames");
    VideoTensor flow(Shape{s.frames - 1, 2, s.height, s.width});
    for (int f = 0; f + 1 < s.frames; ++f) {
        const double dx = s.positions[f + 1][0] - s.positions[f][0];
        const double dy = s.positions[f + 1][1] - s.positions[f][1];
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                if (s.mask_at(f, y, x)) {
                    flow.at(f, 0, y, x) = dx;
                    flow.at(f, 1, y, x) = dy;
                }
    }
    return flow;
}

namespace detail {

struct BgMode {
    double wave_x, wave_y, phase, amp;
    std::array<double, 3> channel_gain;
};

// Directional shading in [0,1]; light 0 is ambient, the rest sweep the circle.
inline double shading(int k, int lights, double u, double v) {
    if (k == 0) return 1.0;
    const double theta = 2.0 * 3.14159265358979323846 * (k - 1) / (lights - 1);
    const double g = 0.5 + std::cos(theta) * (u - 0.5) + std::sin(theta) * (v - 0.5);
    return g < 0.0 ? 0.0 : (g > 1.0 ? 1.0 : g);
}

}  // namespace detail

inline Scene generate_scene(const SceneSpec& spec, std::uint64_t seed) {
    if (spec.frames < 2 || spec.height < 16 || spec.width < 16 || spec.channels < 1 ||
        spec.channels > 3 || spec.lights < 2)
        throw std::invalid_argument(
            "generate_scene: need frames >= 2, dims >= 16, 1..3 channels, lights >= 2");

    const bool has_object = spec.coverage == SceneSpec::Coverage::object;
    if (has_object) {
        if (spec.object_size < 2)
            throw std::invalid_argument("generate_scene: object_size must be >= 2");
        for (int f = 0; f < spec.frames; ++f) {
            const int x = spec.object_x + f * spec.speed_x;
            const int y = spec.object_y + f * spec.speed_y;
            if (x < 0 || y < 0 || x + spec.object_size > spec.width ||
                y + spec.object_size > spec.height)
                throw std::invalid_argument(
                    "generate_scene: object leaves the frame at frame " + std::to_string(f));
        }
    }

    Rng rng(seed);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;

    // Static background texture: a handful of oriented waves, balanced enough
    // that 8x8 windows contain mixed gradients.
    // Wavelengths and orientations are stratified rather than drawn iid, so
    // every scene keeps short-wave energy in every direction; block matching
    // has to stay locked on the texture even on the worst jitter frame.
    const int n_modes = 8;
    std::vector<detail::BgMode> modes(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        auto& m = modes[i];
        const double wavelength =
            3.2 * std::pow(4.0, (i + rng.uniform()) / n_modes);  // 3.2..12.8 px
        const double theta = two_pi * (i + rng.uniform()) / n_modes;
        m.wave_x = std::cos(theta) / wavelength;
        m.wave_y = std::sin(theta) / wavelength;
        m.phase = rng.uniform() * two_pi;
        // Amplitude scales inversely with wavelength: equal gradient energy
        // per mode. A smooth gradient can impersonate a global gain change
        // at some displacement; short waves cannot.
        m.amp = spec.bg_contrast / n_modes * (6.4 / wavelength) *
                (0.8 + 0.4 * rng.uniform());
        for (auto& g : m.channel_gain) g = 0.7 + 0.6 * rng.uniform();
    }
    std::array<double, 3> bg_base{};
    for (auto& b : bg_base) b = spec.bg_albedo * (1.0 + 0.12 * (2.0 * rng.uniform() - 1.0));

    std::array<double, 3> obj_base{};
    for (auto& b : obj_base) b = spec.obj_albedo * (1.0 + 0.15 * (2.0 * rng.uniform() - 1.0));
    const double obj_phase = rng.uniform() * two_pi;

    Scene s;
    s.frames = spec.frames;
    s.channels = spec.channels;
    s.height = spec.height;
    s.width = spec.width;
    s.lights = spec.lights;
    s.basis.assign(static_cast<std::size_t>(spec.frames) * spec.lights * spec.channels *
                       spec.height * spec.width,
                   0.0);
    s.masks.assign(static_cast<std::size_t>(spec.frames) * spec.height * spec.width, 0);
    s.positions.resize(spec.frames);

    const double R = spec.object_size / 2.0;
    for (int f = 0; f < s.frames; ++f) {
        const int ox = has_object ? spec.object_x + f * spec.speed_x : 0;
        const int oy = has_object ? spec.object_y + f * spec.speed_y : 0;
        s.positions[f] = {ox, oy};

        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x) {
                bool inside = false;
                double albedo[3];
                double su = 0.0;  // shading coordinates, object-local inside
                double sv = 0.0;
                if (has_object) {
                    const double lx = x + 0.5 - (ox + R);
                    const double ly = y + 0.5 - (oy + R);
                    const double r = std::sqrt(lx * lx + ly * ly);
                    if (r <= R) {
                        inside = true;
                        // The shading field rides on the surface, so the
                        // whole rendered object translates with it and block
                        // matching sees the same patch under every light.
                        su = 0.5 + lx / spec.object_size;
                        sv = 0.5 + ly / spec.object_size;
                        // Smooth object texture: the object moves, so sharp
                        // texture here would turn straight into frame-to-frame
                        // flicker that has nothing to do with lighting.
                        const double ang = std::atan2(ly, lx);
                        const double tex = 1.0 + spec.obj_contrast *
                                                     (0.7 * std::cos(3.14159265358979323846 *
                                                                     r / R) +
                                                      0.3 * std::sin(ang + obj_phase));
                        for (int c = 0; c < s.channels; ++c) albedo[c] = obj_base[c] * tex;
                    }
                }
                if (!inside) {
                    for (int c = 0; c < s.channels; ++c) {
                        double a = bg_base[c];
                        for (const auto& m : modes)
                            a += m.amp * m.channel_gain[c] *
                                 std::sin(two_pi * (m.wave_x * x + m.wave_y * y) + m.phase);
                        albedo[c] = a < 0.02 ? 0.02 : a;
                    }
                    su = (x + 0.5) / s.width;
                    sv = (y + 0.5) / s.height;
                }

                const std::size_t mrow =
                    (static_cast<std::size_t>(f) * s.height + y) * s.width + x;
                s.masks[mrow] =
                    spec.coverage == SceneSpec::Coverage::full ? 1 : (inside ? 1 : 0);

                for (int k = 0; k < s.lights; ++k) {
                    const double g = detail::shading(k, s.lights, su, sv);
                    for (int c = 0; c < s.channels; ++c)
                        s.basis[s.basis_index(f, k, c, y, x)] = albedo[c] * g;
                }
            }
    }
    return s;
}

// --- scene file format -------------------------------------------------
//
// "LAVSCN1\0" | u32 frames, channels, height, width, lights
// | i32 (x, y) object position per frame | f32 basis [f][k][c][y][x]
// | u8 masks [f][y][x], all little-endian.

static_assert(std::endian::native == std::endian::little,
              "scene file I/O assumes a little-endian host");

inline void write_scene(const Scene& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_scene: cannot open " + path);
    const char magic[8] = {'L', 'A', 'V', 'S', 'C', 'N', '1', '\0'};
    out.write(magic, 8);
    const std::uint32_t dims[5] = {
        static_cast<std::uint32_t>(s.frames), static_cast<std::uint32_t>(s.channels),
        static_cast<std::uint32_t>(s.height), static_cast<std::uint32_t>(s.width),
        static_cast<std::uint32_t>(s.lights)};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    for (const auto& p : s.positions) {
        const std::int32_t xy[2] = {p[0], p[1]};
        out.write(reinterpret_cast<const char*>(xy), sizeof xy);
    }
    std::vector<float> f32(s.basis.size());
    for (std::size_t i = 0; i < s.basis.size(); ++i) f32[i] = static_cast<float>(s.basis[i]);
    out.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(s.masks.data()),
              static_cast<std::streamsize>(s.masks.size()));
    if (!out) throw IoError("write_scene: write failed for " + path);
}

inline Scene load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_scene: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 7) != "LAVSCN1" || magic[7] != '\0')
        throw IoError("load_scene: bad magic in " + path);
    std::uint32_t dims[5];
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) throw IoError("load_scene: truncated header in " + path);

    Scene s;
    s.frames = static_cast<int>(dims[0]);
    s.channels = static_cast<int>(dims[1]);
    s.height = static_cast<int>(dims[2]);
    s.width = static_cast<int>(dims[3]);
    s.lights = static_cast<int>(dims[4]);
    if (s.frames < 1 || s.channels < 1 || s.channels > 3 || s.height < 1 || s.width < 1 ||
        s.lights < 1 ||
        static_cast<std::uint64_t>(s.frames) * s.lights * s.channels * s.height * s.width >
            (1ull << 31))
        throw IoError("load_scene: implausible dimensions in " + path);

    s.positions.resize(s.frames);
    for (auto& p : s.positions) {
        std::int32_t xy[2];
        in.read(reinterpret_cast<char*>(xy), sizeof xy);
        p = {xy[0], xy[1]};
    }
    const std::size_t n = static_cast<std::size_t>(s.frames) * s.lights * s.channels *
                          s.height * s.width;
    std::vector<float> f32(n);
    in.read(reinterpret_cast<char*>(f32.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    s.basis.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.basis[i] = static_cast<double>(f32[i]);
    s.masks.resize(static_cast<std::size_t>(s.frames) * s.height * s.width);
    in.read(reinterpret_cast<char*>(s.masks.data()),
            static_cast<std::streamsize>(s.masks.size()));
    if (!in) throw IoError("load_scene: truncated data in " + path);
    return s;
}

}  // namespace lav
