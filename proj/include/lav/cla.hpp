#pragma once

// Cross-light attention: a two-stream temporal stabilizer.
//
// Stream one runs single-head scaled dot-product self-attention over each
// frame's tokens independently. Stream two averages the feature map across
// frames first, runs the same attention once, and broadcasts the result back.
// The output is the convex blend (1-gamma) * per_frame + gamma * averaged.
// The averaging happens before the Q/K/V projections, which is what makes the
// variance-reduction algebra exact for identity projections.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lav/rng.hpp"

namespace lav {

struct FeatureMap {
    int batch = 0;
    int frames = 0;
    int tokens = 0;
    int dim = 0;
    std::vector<double> values;  // [batch][frame][token][dim]

    FeatureMap() = default;

    FeatureMap(int b, int f, int n, int d) : batch(b), frames(f), tokens(n), dim(d) {
        if (b < 1 || f < 1 || n < 1 || d < 1)
            throw std::invalid_argument("FeatureMap: all dims must be >= 1");
        values.assign(static_cast<std::size_t>(b) * f * n * d, 0.0);
    }

    std::size_t slice_offset(int b, int f) const {
        return (static_cast<std::size_t>(b) * frames + f) * tokens * dim;
    }

    double& at(int b, int f, int n, int d_) {
        return values[slice_offset(b, f) + static_cast<std::size_t>(n) * dim + d_];
    }
    double at(int b, int f, int n, int d_) const {
        return values[slice_offset(b, f) + static_cast<std::size_t>(n) * dim + d_];
    }
};

struct AttentionWeights {
    int dim = 0;
    std::vector<double> wq, wk, wv;  // row-major d x d, bias-free
    std::uint64_t seed = 0;

    static AttentionWeights identity(int d) {
        AttentionWeights w;
        w.dim = d;
        w.wq.assign(static_cast<std::size_t>(d) * d, 0.0);
        for (int i = 0; i < d; ++i) w.wq[static_cast<std::size_t>(i) * d + i] = 1.0;
        w.wk = w.wq;
        w.wv = w.wq;
        return w;
    }

    // Random orthonormal projections via Gram-Schmidt on a Gaussian draw.
    static AttentionWeights seeded(int d, std::uint64_t seed) {
        AttentionWeights w;
        w.dim = d;
        w.seed = seed;
        Rng rng(seed);
        auto draw_orthonormal = [&] {
            std::vector<double> m(static_cast<std::size_t>(d) * d);
            for (double& v : m) v = rng.normal();
            for (int col = 0; col < d; ++col) {
                for (int prev = 0; prev < col; ++prev) {
                    double dot = 0.0;
                    for (int r = 0; r < d; ++r) dot += m[r * d + col] * m[r * d + prev];
                    for (int r = 0; r < d; ++r) m[r * d + col] -= dot * m[r * d + prev];
                }
                double norm = 0.0;
                for (int r = 0; r < d; ++r) norm += m[r * d + col] * m[r * d + col];
                norm = std::sqrt(norm);
                if (norm < 1e-12)
                    throw std::runtime_error("AttentionWeights: degenerate draw");
                for (int r = 0; r < d; ++r) m[r * d + col] /= norm;
            }
            return m;
        };
        w.wq = draw_orthonormal();
        w.wk = draw_orthonormal();
        w.wv = draw_orthonormal();
        return w;
    }
};

struct ClaConfig {
    double gamma = 0.5;  // 0 = per-frame only, 1 = fully averaged
};

// Single-head attention over one n x d token block. Row softmax subtracts the
// row max before exponentiating.
inline void self_attention(const double* x, int tokens, int dim, const AttentionWeights& w,
                           double* out) {
    if (w.dim != dim)
        throw std::invalid_argument("self_attention: weights are for dim " +
                                    std::to_string(w.dim) + ", input has dim " +
                                    std::to_string(dim));
    const int n = tokens, d = dim;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * d; ++i)
        if (!std::isfinite(x[i]))
            throw std::invalid_argument("self_attention: non-finite input");

    std::vector<double> q(static_cast<std::size_t>(n) * d, 0.0), k(q), v(q);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) {
            const double xv = x[static_cast<std::size_t>(i) * d + c];
            for (int j = 0; j < d; ++j) {
                q[i * d + j] += xv * w.wq[c * d + j];
                k[i * d + j] += xv * w.wk[c * d + j];
                v[i * d + j] += xv * w.wv[c * d + j];
            }
        }

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> logits(n);
    for (int i = 0; i < n; ++i) {
        double row_max = -1e300;
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int c = 0; c < d; ++c) dot += q[i * d + c] * k[j * d + c];
            logits[j] = dot * inv_sqrt_d;
            row_max = std::max(row_max, logits[j]);
        }
        double norm = 0.0;
        for (int j = 0; j < n; ++j) {
            logits[j] = std::exp(logits[j] - row_max);
            norm += logits[j];
        }
        double* orow = out + static_cast<std::size_t>(i) * d;
        for (int c = 0; c < d; ++c) orow[c] = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p = logits[j] / norm;
            for (int c = 0; c < d; ++c) orow[c] += p * v[j * d + c];
        }
    }
}

inline std::vector<double> self_attention(const std::vector<double>& x, int tokens, int dim,
                                          const AttentionWeights& w) {
    if (x.size() != static_cast<std::size_t>(tokens) * dim)
        throw std::invalid_argument("self_attention: token/dim count mismatch");
    std::vector<double> out(x.size());
    self_attention(x.data(), tokens, dim, w, out.data());
    return out;
}

// Mean over the frame axis, broadcast back to every frame.
inline FeatureMap temporal_average(const FeatureMap& h) {
    FeatureMap out(h.batch, h.frames, h.tokens, h.dim);
    const std::size_t slice = static_cast<std::size_t>(h.tokens) * h.dim;
    std::vector<double> mean(slice);
    for (int b = 0; b < h.batch; ++b) {
        for (std::size_t i = 0; i < slice; ++i) mean[i] = 0.0;
        for (int f = 0; f < h.frames; ++f) {
            const double* src = h.values.data() + h.slice_offset(b, f);
            for (std::size_t i = 0; i < slice; ++i) mean[i] += src[i];
        }
        for (std::size_t i = 0; i < slice; ++i) mean[i] /= h.frames;
        for (int f = 0; f < h.frames; ++f) {
            double* dst = out.values.data() + out.slice_offset(b, f);
            for (std::size_t i = 0; i < slice; ++i) dst[i] = mean[i];
        }
    }
    return out;
}

inline FeatureMap cla_forward(const FeatureMap& h, const AttentionWeights& w,
                              const ClaConfig& cfg) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
        throw std::invalid_argument("cla_forward: gamma must be in [0,1]");
    if (w.dim != h.dim)
        throw std::invalid_argument("cla_forward: weight/feature dim mismatch");

    FeatureMap out(h.batch, h.frames, h.tokens, h.dim);
    const std::size_t slice = static_cast<std::size_t>(h.tokens) * h.dim;
    FeatureMap avg = temporal_average(h);
    std::vector<double> stream1(slice), stream2(slice);
    for (int b = 0; b < h.batch; ++b) {
        // The averaged stream is identical for every frame; run it once.
        self_attention(avg.values.data() + avg.slice_offset(b, 0), h.tokens, h.dim, w,
                       stream2.data());
        for (int f = 0; f < h.frames; ++f) {
            self_attention(h.values.data() + h.slice_offset(b, f), h.tokens, h.dim, w,
                           stream1.data());
            double* dst = out.values.data() + out.slice_offset(b, f);
            for (std::size_t i = 0; i < slice; ++i)
                dst[i] = (1.0 - cfg.gamma) * stream1[i] + cfg.gamma * stream2[i];
        }
    }
    return out;
}

}  // namespace lav
