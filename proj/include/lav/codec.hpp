#pragma once

// Pixel <-> latent codec. Two variants: identity, and an exactly linear
// spatial downsampler (s x s block mean down, nearest-neighbour up). Both are
// linear maps, which is what lets pixel-space target fusion commute with
// encoding.

#include <stdexcept>
#include <string>

#include "lav/tensor.hpp"

namespace lav {

class Codec {
public:
    enum class Kind { identity, downsample };

    static Codec identity() { return Codec(Kind::identity, 1); }

    static Codec downsample(int scale) {
        if (scale < 1) throw std::invalid_argument("Codec::downsample: scale must be >= 1");
        return Codec(Kind::downsample, scale);
    }

    Kind kind() const { return kind_; }
    int scale() const { return scale_; }

    Shape latent_shape(const Shape& pixel) const {
        if (kind_ == Kind::identity) return pixel;
        check_divisible(pixel);
        return Shape{pixel.frames, pixel.channels, pixel.height / scale_, pixel.width / scale_};
    }

    VideoTensor encode(const VideoTensor& x) const {
        if (kind_ == Kind::identity) return x;
        check_divisible(x.shape());
        const Shape ls = latent_shape(x.shape());
        VideoTensor z(ls);
        const double inv = 1.0 / (static_cast<double>(scale_) * scale_);
        for (int f = 0; f < ls.frames; ++f)
            for (int c = 0; c < ls.channels; ++c)
                for (int y = 0; y < ls.height; ++y)
                    for (int x2 = 0; x2 < ls.width; ++x2) {
                        double acc = 0.0;
                        for (int dy = 0; dy < scale_; ++dy)
                            for (int dx = 0; dx < scale_; ++dx)
                                acc += x.at(f, c, y * scale_ + dy, x2 * scale_ + dx);
                        z.at(f, c, y, x2) = acc * inv;
                    }
        return z;
    }

    VideoTensor decode(const VideoTensor& z) const {
        if (kind_ == Kind::identity) return z;
        const Shape zs = z.shape();
        const Shape ps{zs.frames, zs.channels, zs.height * scale_, zs.width * scale_};
        VideoTensor x(ps);
        for (int f = 0; f < ps.frames; ++f)
            for (int c = 0; c < ps.channels; ++c)
                for (int y = 0; y < ps.height; ++y)
                    for (int x2 = 0; x2 < ps.width; ++x2)
                        x.at(f, c, y, x2) = z.at(f, c, y / scale_, x2 / scale_);
        return x;
    }

private:
    Codec(Kind k, int s) : kind_(k), scale_(s) {}

    void check_divisible(const Shape& s) const {
        if (s.height % scale_ != 0 || s.width % scale_ != 0)
            throw ShapeError("Codec: dims " + s.str() + " not divisible by scale " +
                             std::to_string(scale_));
    }

    Kind kind_;
    int scale_;
};

}  // namespace lav
