#pragma once

// Relighting operator for the linear light world.
//
// Real image-space relighting models resample their light source every frame,
// which is the instability this module reproduces: the requested target
// illumination is jittered per frame (clamped at zero), then stabilized by
// routing the per-frame illumination vectors through cross-light attention as
// single-token features with identity projections, which reduces to
// L'_f = (1-gamma) L_f + gamma * mean(L). The output frame is the scene
// rendered under L'_f, so identity is preserved by construction: same
// transport, new light.

#include <cstdint>
#include <vector>

#include "lav/cla.hpp"
#include "lav/lightworld.hpp"
#include "lav/rng.hpp"
#include "lav/tensor.hpp"

namespace lav {

inline std::vector<Illumination> jittered_illuminations(const LightingCondition& cond,
                                                        int frames, std::uint64_t seed) {
    cond.target.validate();
    if (frames < 1)
        throw std::invalid_argument("jittered_illuminations: frames must be >= 1");
    if (!(cond.sigma >= 0.0))
        throw std::invalid_argument("jittered_illuminations: sigma must be >= 0");
    Rng rng(seed);
    std::vector<Illumination> out(frames);
    for (int f = 0; f < frames; ++f) {
        out[f].weights.resize(cond.target.weights.size());
        for (std::size_t k = 0; k < out[f].weights.size(); ++k) {
            const double w = cond.target.weights[k] + cond.sigma * rng.normal();
            out[f].weights[k] = w < 0.0 ? 0.0 : w;
        }
    }
    return out;
}

inline std::vector<Illumination> stabilize_illuminations(const std::vector<Illumination>& seq,
                                                         const ClaConfig& cfg) {
    if (seq.empty())
        throw std::invalid_argument("stabilize_illuminations: empty sequence");
    const int frames = static_cast<int>(seq.size());
    const int dim = seq.front().lights();
    FeatureMap h(1, frames, 1, dim);
    for (int f = 0; f < frames; ++f) {
        if (seq[f].lights() != dim)
            throw std::invalid_argument("stabilize_illuminations: ragged sequence");
        for (int k = 0; k < dim; ++k) h.at(0, f, 0, k) = seq[f].weights[k];
    }
    FeatureMap out = cla_forward(h, AttentionWeights::identity(dim), cfg);
    std::vector<Illumination> st(frames);
    for (int f = 0; f < frames; ++f) {
        st[f].weights.resize(dim);
        for (int k = 0; k < dim; ++k) st[f].weights[k] = out.at(0, f, 0, k);
    }
    return st;
}

struct RelightRequest {
    const Scene* scene = nullptr;
    const VideoTensor* appearance = nullptr;  // current video; shape is validated
    LightingCondition condition;
    ClaConfig cla;
};

inline VideoTensor relight(const RelightRequest& req) {
    if (!req.scene) throw std::invalid_argument("relight: missing scene");
    const Scene& s = *req.scene;
    if (req.appearance && !(req.appearance->shape() == s.frame_shape()))
        throw ShapeError("relight: appearance shape " + req.appearance->shape().str() +
                         " does not match scene " + s.frame_shape().str());
    auto jittered = jittered_illuminations(req.condition, s.frames, req.condition.seed);
    auto stabilized = stabilize_illuminations(jittered, req.cla);
    return render_sequence(s, stabilized);
}

}  // namespace lav
