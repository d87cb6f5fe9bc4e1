#pragma once

// Scalar quality metrics for relit video. These are deliberately simple,
// deterministic stand-ins for the perceptual metrics used on real footage:
// a mean adjacent-frame difference for flicker, a mean-removed cosine for
// temporal consistency, and exhaustive block matching for motion.

#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "lav/tensor.hpp"

namespace lav {

// Mean absolute difference between adjacent frames, averaged over all pairs
// and pixels. Zero for a static video; scales linearly with the signal.
inline double flicker_index(const VideoTensor& video) {
    const Shape s = video.shape();
    if (s.frames < 2) throw ShapeError("flicker_index: need at least 2 frames");
    const std::size_t per_frame =
        static_cast<std::size_t>(s.channels) * s.height * s.width;
    double total = 0.0;
    for (int f = 0; f + 1 < s.frames; ++f) {
        const double* a = video.data() + static_cast<std::size_t>(f) * per_frame;
        const double* b = a + per_frame;
        for (std::size_t i = 0; i < per_frame; ++i) total += std::abs(b[i] - a[i]);
    }
    return total / (static_cast<double>(s.frames - 1) * static_cast<double>(per_frame));
}

// Mean cosine similarity between adjacent frames after removing each frame's
// mean. A pair where either frame has zero variance scores 1 if the frames
// are identical and is skipped otherwise; if every pair is skipped the video
// carries no usable structure and the score is 0.
inline double temporal_consistency(const VideoTensor& video) {
    const Shape s = video.shape();
    if (s.frames < 2) throw ShapeError("temporal_consistency: need at least 2 frames");
    const std::size_t per_frame =
        static_cast<std::size_t>(s.channels) * s.height * s.width;
    double total = 0.0;
    int scored = 0;
    for (int f = 0; f + 1 < s.frames; ++f) {
        const double* a = video.data() + static_cast<std::size_t>(f) * per_frame;
        const double* b = a + per_frame;
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (std::size_t i = 0; i < per_frame; ++i) {
            mean_a += a[i];
            mean_b += b[i];
        }
        mean_a /= static_cast<double>(per_frame);
        mean_b /= static_cast<double>(per_frame);
        double dot = 0.0;
        double na = 0.0;
        double nb = 0.0;
        bool equal = true;
        for (std::size_t i = 0; i < per_frame; ++i) {
            const double da = a[i] - mean_a;
            const double db = b[i] - mean_b;
            dot += da * db;
            na += da * da;
            nb += db * db;
            equal = equal && a[i] == b[i];
        }
        if (na == 0.0 || nb == 0.0) {
            if (equal) {
                total += 1.0;
                ++scored;
            }
            continue;
        }
        total += dot / std::sqrt(na * nb);
        ++scored;
    }
    return scored == 0 ? 0.0 : total / scored;
}

// Integer displacement of one block, in pixels. dx > 0 means the block's
// content moved right between the two frames.
struct BlockFlow {
    int dx = 0;
    int dy = 0;
};

// Dense grid of per-block displacements.
struct FlowField {
    int blocks_y = 0;
    int blocks_x = 0;
    std::vector<BlockFlow> flows;

    const BlockFlow& at(int by, int bx) const {
        return flows[static_cast<std::size_t>(by) * blocks_x + bx];
    }
};

// Exhaustive block matching between two single-frame tensors. Each
// block-aligned patch of `a` is compared against every displacement of up to
// `radius` pixels whose window stays inside `b`; the winner has the lowest
// sum of absolute differences, with ties broken by smaller |d|^2 and then by
// lexicographic (dy, dx). The zero displacement is always a candidate, so
// featureless regions report no motion.
inline FlowField block_flow(const VideoTensor& a, const VideoTensor& b, int block = 8,
                            int radius = 4) {
    require_same_shape(a, b, "block_flow");
    const Shape s = a.shape();
    if (s.frames != 1) throw ShapeError("block_flow: expects single-frame tensors");
    if (block < 1) throw ShapeError("block_flow: block size must be positive");
    if (radius < 0) throw ShapeError("block_flow: radius must be non-negative");
    if (block > s.height || block > s.width)
        throw ShapeError("block_flow: block larger than the frame");

    FlowField field;
    field.blocks_y = s.height / block;
    field.blocks_x = s.width / block;
    field.flows.resize(static_cast<std::size_t>(field.blocks_y) * field.blocks_x);

    for (int by = 0; by < field.blocks_y; ++by)
        for (int bx = 0; bx < field.blocks_x; ++bx) {
            const int oy = by * block;
            const int ox = bx * block;
            bool have = false;
            double best_cost = 0.0;
            BlockFlow best{0, 0};
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (oy + dy < 0 || ox + dx < 0 || oy + dy + block > s.height ||
                        ox + dx + block > s.width)
                        continue;
                    double cost = 0.0;
                    for (int c = 0; c < s.channels; ++c)
                        for (int i = 0; i < block; ++i)
                            for (int j = 0; j < block; ++j)
                                cost += std::abs(a.at(0, c, oy + i, ox + j) -
                                                 b.at(0, c, oy + dy + i, ox + dx + j));
                    const int mag = dx * dx + dy * dy;
                    const int bmag = best.dx * best.dx + best.dy * best.dy;
                    const bool better =
                        !have || cost < best_cost ||
                        (cost == best_cost &&
                         (mag < bmag ||
                          (mag == bmag &&
                           (dy < best.dy || (dy == best.dy && dx < best.dx)))));
                    if (better) {
                        have = true;
                        best_cost = cost;
                        best = {dx, dy};
                    }
                }
            field.flows[static_cast<std::size_t>(by) * field.blocks_x + bx] = best;
        }
    return field;
}

// Mean endpoint error between the block flow of `video` and of `reference`,
// over all adjacent frame pairs and blocks. Zero means the relit video moves
// exactly like the source.
inline double motion_preservation(const VideoTensor& video, const VideoTensor& reference,
                                  int block = 8, int radius = 4) {
    require_same_shape(video, reference, "motion_preservation");
    const Shape s = video.shape();
    if (s.frames < 2) throw ShapeError("motion_preservation: need at least 2 frames");
    double total = 0.0;
    std::size_t count = 0;
    for (int f = 0; f + 1 < s.frames; ++f) {
        auto fv = block_flow(video.frame(f), video.frame(f + 1), block, radius);
        auto fr = block_flow(reference.frame(f), reference.frame(f + 1), block, radius);
        for (std::size_t i = 0; i < fv.flows.size(); ++i) {
            const double dx = fv.flows[i].dx - fr.flows[i].dx;
            const double dy = fv.flows[i].dy - fr.flows[i].dy;
            total += std::sqrt(dx * dx + dy * dy);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

// RMS distance to a reference rendering under the target light.
inline double relight_rmse(const VideoTensor& video, const VideoTensor& reference) {
    return rms_diff(video, reference);
}

// Bundle of every metric for one relit video, against the source footage and
// the exact target-light rendering.
struct MetricsReport {
    double flicker = 0.0;
    double consistency = 0.0;
    double motion_epe = 0.0;
    double rmse = 0.0;
};

inline MetricsReport compute_report(const VideoTensor& output, const VideoTensor& source,
                                    const VideoTensor& ground_truth) {
    MetricsReport r;
    r.flicker = flicker_index(output);
    r.consistency = temporal_consistency(output);
    r.motion_epe = motion_preservation(output, source);
    r.rmse = relight_rmse(output, ground_truth);
    return r;
}

}  // namespace lav
