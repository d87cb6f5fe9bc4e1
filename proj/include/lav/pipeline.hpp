#pragma once

// The relighting pipeline: partially noise the source video, then walk a
// short DDIM schedule where every step fuses the denoiser's temporally
// consistent target with the stabilized relight target and steps toward the
// blend. The fusion weight grows as the noise shrinks, so lighting is
// injected progressively while the denoiser keeps the video coherent.
//
// Background mode extends the schedule into the noisy regime: uncovered
// pixels first relax toward a flat prior by plain DDIM while covered pixels
// ride the forward-noised source, then both enter the standard fusion loop
// with the relight pull applied only under the coverage weight.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lav/cla.hpp"
#include "lav/codec.hpp"
#include "lav/errors.hpp"
#include "lav/lightworld.hpp"
#include "lav/metrics.hpp"
#include "lav/relighter.hpp"
#include "lav/rng.hpp"
#include "lav/schedule.hpp"
#include "lav/tensor.hpp"
#include "lav/vdm.hpp"

namespace lav {

// Per-step weight of the relight target. The power decay starts at 0 on the
// noisiest step (t equal to the step count) and rises toward 1 - (1/T)^k on
// the final step, so the strongest pull happens once the video is nearly
// clean.
struct FusionSchedule {
    enum class Kind { power_decay, constant };

    Kind kind = Kind::power_decay;
    double exponent = 1.0;  // k in lambda_t = 1 - (t/T)^k
    double constant = 1.0;  // fixed lambda for Kind::constant

    void validate() const {
        if (kind == Kind::power_decay && !(exponent > 0.0))
            throw std::invalid_argument("FusionSchedule: exponent must be > 0");
        if (kind == Kind::constant && !(constant >= 0.0 && constant <= 1.0))
            throw std::invalid_argument("FusionSchedule: constant must be in [0,1]");
    }

    double lambda_at(int t, int t_m) const {
        validate();
        if (t_m < 1 || t < 1 || t > t_m)
            throw std::invalid_argument("FusionSchedule: step " + std::to_string(t) +
                                        " outside 1.." + std::to_string(t_m));
        if (kind == Kind::constant) return constant;
        return 1.0 - std::pow(static_cast<double>(t) / t_m, exponent);
    }
};

struct MasterScheduleConfig {
    int steps = 1000;
    double beta_start = 8.5e-4;
    double beta_end = 1.2e-2;
};

struct PipelineConfig {
    enum class Mode { standard, background };

    int t_m = 25;                   // denoising steps applied to the source
    double start_alpha_bar = 0.25;  // noise level where denoising starts
    MasterScheduleConfig master;
    FusionSchedule fusion;
    ClaConfig cla;
    Denoiser denoiser;
    Codec codec = Codec::identity();
    LightingCondition condition;  // target light, per-frame jitter, jitter seed
    Illumination source_light;    // what the input footage was lit with
    std::uint64_t noise_seed = 101;
    Mode mode = Mode::standard;
    int bg_total_steps = 50;  // background mode: total steps including relaxation
    bool capture_steps = false;  // keep per-step tensors in the trace

    void validate() const {
        if (t_m < 1) throw std::invalid_argument("PipelineConfig: t_m must be >= 1");
        if (!(start_alpha_bar > 0.0 && start_alpha_bar < 1.0))
            throw std::invalid_argument("PipelineConfig: start_alpha_bar must be in (0,1)");
        fusion.validate();
        denoiser.validate();
        if (!(cla.gamma >= 0.0 && cla.gamma <= 1.0))
            throw std::invalid_argument("PipelineConfig: gamma must be in [0,1]");
        if (!(condition.sigma >= 0.0))
            throw std::invalid_argument("PipelineConfig: sigma must be >= 0");
        if (mode == Mode::background && bg_total_steps < t_m)
            throw std::invalid_argument(
                "PipelineConfig: background mode needs bg_total_steps >= t_m");
    }
};

// Pixel-space blend of the consistent and relight targets.
inline VideoTensor fuse_targets(const VideoTensor& consistent, const VideoTensor& relit,
                                double lambda) {
    return lerp(consistent, relit, lambda);
}

struct StepTrace {
    int t = 0;              // countdown index in the run schedule
    double lambda = 0.0;    // fusion weight applied this step
    double target_gap = 0.0;      // rms distance between relight and consistent targets
    double target_flicker = 0.0;  // flicker index of the fusion target
    // Populated only when PipelineConfig::capture_steps is set.
    VideoTensor z_t;            // latent entering the step
    VideoTensor fusion_latent;  // encoded fusion target the step moved toward
    VideoTensor fusion_pixel;   // the fusion target in pixel space
};

struct RunResult {
    VideoTensor output;
    VideoTensor source;  // the footage the run started from
    VideoTensor relit;   // stabilized relight target
    std::vector<Illumination> jittered;    // raw per-frame illuminations
    std::vector<Illumination> stabilized;  // after cross-light attention
    std::vector<StepTrace> trace;          // one entry per denoising step
    NoiseSchedule run_schedule;
    VideoTensor final_latent;  // populated only when capture_steps is set
};

namespace detail {

// out = a + lambda * w * (b - a), elementwise over the coverage weight. With
// w identically 1 this is the same arithmetic as lerp(), which the
// full-coverage bit-match relies on.
inline VideoTensor weighted_fuse(const VideoTensor& a, const VideoTensor& b,
                                 const VideoTensor& w, double lambda) {
    require_same_shape(a, b, "weighted_fuse");
    require_same_shape(a, w, "weighted_fuse");
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.data()[i] = a.data()[i] + lambda * w.data()[i] * (b.data()[i] - a.data()[i]);
    return out;
}

// out = w * x + (1 - w) * y elementwise.
inline VideoTensor weighted_mix(const VideoTensor& x, const VideoTensor& y,
                                const VideoTensor& w) {
    require_same_shape(x, y, "weighted_mix");
    require_same_shape(x, w, "weighted_mix");
    VideoTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        out.data()[i] = w.data()[i] * x.data()[i] + (1.0 - w.data()[i]) * y.data()[i];
    return out;
}

inline VideoTensor coverage_weight(const Scene& scene, PipelineConfig::Mode mode) {
    VideoTensor w = VideoTensor::full(scene.frame_shape(), 1.0);
    if (mode == PipelineConfig::Mode::standard) return w;
    for (int f = 0; f < scene.frames; ++f)
        for (int c = 0; c < scene.channels; ++c)
            for (int y = 0; y < scene.height; ++y)
                for (int x = 0; x < scene.width; ++x)
                    w.at(f, c, y, x) = scene.mask_at(f, y, x) ? 1.0 : 0.0;
    return w;
}

}  // namespace detail

// Run the pipeline on caller-supplied source footage. The scene provides the
// light transport for the relight target and, in background mode, the
// coverage masks.
inline RunResult run_from_source(const Scene& scene, const VideoTensor& source,
                                 const PipelineConfig& cfg) {
    cfg.validate();
    if (!(source.shape() == scene.frame_shape()))
        throw ShapeError("run_from_source: source shape " + source.shape().str() +
                         " does not match scene " + scene.frame_shape().str());
    if (!all_finite(source)) throw NumericError("run_from_source: non-finite source");
    scene.check_light(cfg.condition.target);

    const auto master =
        NoiseSchedule::linear(cfg.master.steps, cfg.master.beta_start, cfg.master.beta_end);
    const int total = cfg.mode == PipelineConfig::Mode::background ? cfg.bg_total_steps
                                                                   : cfg.t_m;
    RunResult res;
    res.run_schedule = make_run_schedule(master, cfg.t_m, cfg.start_alpha_bar, total);

    res.jittered =
        jittered_illuminations(cfg.condition, scene.frames, cfg.condition.seed);
    res.stabilized = stabilize_illuminations(res.jittered, cfg.cla);
    res.relit = render_sequence(scene, res.stabilized);

    const VideoTensor weight = detail::coverage_weight(scene, cfg.mode);
    const VideoTensor prior_pix = VideoTensor::full(scene.frame_shape(), cfg.denoiser.prior);
    res.source = detail::weighted_mix(source, prior_pix, weight);

    const VideoTensor ctx = cfg.codec.encode(res.source);
    const VideoTensor prior_lat = cfg.codec.encode(prior_pix);
    const VideoTensor weight_lat = cfg.codec.encode(weight);
    const VideoTensor implied = implied_clean_latent(cfg.denoiser, ctx);
    const VideoTensor eps = standard_normal(ctx.shape(), cfg.noise_seed);

    VideoTensor z = add_noise(ctx, total, eps, res.run_schedule);

    // Relaxation phase (background mode only): uncovered pixels step toward
    // the prior, covered pixels track the forward-noised source at each level.
    for (int t = total; t > cfg.t_m; --t) {
        const VideoTensor renoised = add_noise(ctx, t - 1, eps, res.run_schedule);
        const VideoTensor relaxed = ddim_step(z, prior_lat, t, res.run_schedule);
        z = detail::weighted_mix(renoised, relaxed, weight_lat);
        if (!all_finite(z))
            throw NumericError("pipeline: non-finite latent after relaxation step " +
                               std::to_string(t));
    }

    DetailCompensation detail_comp;
    res.trace.reserve(cfg.t_m);
    for (int t = cfg.t_m; t >= 1; --t) {
        const VideoTensor v = v_from_target(z, implied, t, res.run_schedule);
        if (t == cfg.t_m)
            detail_comp = capture_detail(predict_z0(z, v, t, res.run_schedule), ctx);
        const VideoTensor consistent_lat =
            consistent_target(v, z, t, res.run_schedule, detail_comp);
        const VideoTensor consistent_pix = cfg.codec.decode(consistent_lat);

        const double lambda = cfg.fusion.lambda_at(t, cfg.t_m);
        const VideoTensor fused =
            detail::weighted_fuse(consistent_pix, res.relit, weight, lambda);
        const VideoTensor fused_lat = cfg.codec.encode(fused);

        StepTrace st;
        st.t = t;
        st.lambda = lambda;
        st.target_gap = rms_diff(res.relit, consistent_pix);
        st.target_flicker = fused.shape().frames >= 2 ? flicker_index(fused) : 0.0;
        if (cfg.capture_steps) {
            st.z_t = z;
            st.fusion_latent = fused_lat;
            st.fusion_pixel = fused;
        }
        res.trace.push_back(std::move(st));

        z = ddim_step(z, fused_lat, t, res.run_schedule);
        if (!all_finite(z))
            throw NumericError("pipeline: non-finite latent after step " + std::to_string(t));
    }

    res.output = cfg.codec.decode(z);
    if (cfg.capture_steps) res.final_latent = std::move(z);
    return res;
}

// Render the source footage under the configured source light, then relight.
inline RunResult run(const Scene& scene, const PipelineConfig& cfg) {
    cfg.validate();
    scene.check_light(cfg.source_light);
    return run_from_source(scene, render(scene, cfg.source_light), cfg);
}

}  // namespace lav
