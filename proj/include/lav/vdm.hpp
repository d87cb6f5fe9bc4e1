#pragma once

// Video-diffusion-model stand-ins.
//
// The pipeline needs a v-prediction denoiser; at desk scale that role is
// played by two idealized models that know the clean source latent (the
// "context"): the oracle returns the velocity whose implied clean latent is
// the context itself, and the smoothing variant first blends the context
// toward its temporal box filter (z0' = (1-rho) z0 + rho * box(z0)), standing
// in for a network's bias toward temporally smooth video. Detail compensation
// captures source - implied_z0 once, at the first denoising step, and adding
// it back each step reconstructs the source's high-frequency content that the
// smoothing discards.

#include <stdexcept>

#include "lav/schedule.hpp"
#include "lav/tensor.hpp"

namespace lav {

// Mean over the temporal window [f-radius, f+radius] clamped to the frame
// range; edge windows shrink rather than replicate samples.
inline VideoTensor temporal_boxfilter(const VideoTensor& v, int radius) {
    if (radius < 0) throw std::invalid_argument("temporal_boxfilter: radius must be >= 0");
    if (radius == 0) return v;
    const Shape s = v.shape();
    VideoTensor out(s);
    const std::size_t frame_vol = static_cast<std::size_t>(s.channels) * s.height * s.width;
    for (int f = 0; f < s.frames; ++f) {
        const int lo = f - radius < 0 ? 0 : f - radius;
        const int hi = f + radius >= s.frames ? s.frames - 1 : f + radius;
        const double inv = 1.0 / (hi - lo + 1);
        double* dst = out.data() + static_cast<std::size_t>(f) * frame_vol;
        for (int g = lo; g <= hi; ++g) {
            const double* src = v.data() + static_cast<std::size_t>(g) * frame_vol;
            for (std::size_t i = 0; i < frame_vol; ++i) dst[i] += src[i];
        }
        for (std::size_t i = 0; i < frame_vol; ++i) dst[i] *= inv;
    }
    return out;
}

struct Denoiser {
    enum class Kind { oracle, smoothing };

    Kind kind = Kind::smoothing;
    double rho = 0.5;   // smoothing blend weight
    int radius = 1;     // temporal box filter radius
    double prior = 0.5; // flat background prior used by background generation

    void validate() const {
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::invalid_argument("Denoiser: rho must be in [0,1]");
        if (radius < 0) throw std::invalid_argument("Denoiser: radius must be >= 0");
        if (!(prior >= 0.0) || !std::isfinite(prior))
            throw std::invalid_argument("Denoiser: prior must be finite and >= 0");
    }
};

// The clean latent the denoiser believes in, given the run's source context.
inline VideoTensor implied_clean_latent(const Denoiser& den, const VideoTensor& context) {
    den.validate();
    if (den.kind == Denoiser::Kind::oracle || den.rho == 0.0 || den.radius == 0)
        return context;
    return lerp(context, temporal_boxfilter(context, den.radius), den.rho);
}

inline VideoTensor predict_v(const Denoiser& den, const VideoTensor& z_t, int t,
                             const NoiseSchedule& sched, const VideoTensor& context) {
    require_same_shape(z_t, context, "predict_v");
    return v_from_target(z_t, implied_clean_latent(den, context), t, sched);
}

struct DetailCompensation {
    VideoTensor delta;  // source latent minus the first step's implied clean latent
};

inline DetailCompensation capture_detail(const VideoTensor& z0_hat_first,
                                         const VideoTensor& source_latent) {
    require_same_shape(z0_hat_first, source_latent, "capture_detail");
    return DetailCompensation{sub(source_latent, z0_hat_first)};
}

inline VideoTensor consistent_target(const VideoTensor& v_t, const VideoTensor& z_t, int t,
                                     const NoiseSchedule& sched,
                                     const DetailCompensation& detail) {
    require_same_shape(v_t, detail.delta, "consistent_target");
    return add(predict_z0(z_t, v_t, t, sched), detail.delta);
}

}  // namespace lav
