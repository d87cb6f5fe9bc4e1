#pragma once

// Dense frames x channels x height x width video tensor, double precision.
// Values are linear radiance in [0, inf); nothing here clamps or gamma-maps,
// that happens only at image export.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lav {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Shape {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;

    bool operator==(const Shape&) const = default;

    std::size_t volume() const {
        return static_cast<std::size_t>(frames) * channels * height * width;
    }

    std::string str() const {
        return "[" + std::to_string(frames) + "," + std::to_string(channels) + "," +
               std::to_string(height) + "," + std::to_string(width) + "]";
    }
};

class VideoTensor {
public:
    VideoTensor() = default;

    explicit VideoTensor(Shape s) : shape_(s) {
        if (s.frames < 0 || s.channels < 0 || s.height < 0 || s.width < 0)
            throw ShapeError("VideoTensor: negative dimension " + s.str());
        data_.assign(s.volume(), 0.0);
    }

    static VideoTensor full(Shape s, double value) {
        VideoTensor t(s);
        for (double& x : t.data_) x = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    std::size_t index(int f, int c, int y, int x) const {
        return ((static_cast<std::size_t>(f) * shape_.channels + c) * shape_.height + y) *
                   shape_.width + x;
    }

    double& at(int f, int c, int y, int x) { return data_[index(f, c, y, x)]; }
    double at(int f, int c, int y, int x) const { return data_[index(f, c, y, x)]; }

    VideoTensor frame(int f) const {
        Shape s{1, shape_.channels, shape_.height, shape_.width};
        VideoTensor out(s);
        const std::size_t n = s.volume();
        const double* src = data_.data() + static_cast<std::size_t>(f) * n;
        for (std::size_t i = 0; i < n; ++i) out.data_[i] = src[i];
        return out;
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

inline void require_same_shape(const VideoTensor& a, const VideoTensor& b, const char* what) {
    if (!(a.shape() == b.shape()))
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

inline VideoTensor add(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "add");
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

inline VideoTensor sub(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "sub");
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return out;
}

inline VideoTensor scale(const VideoTensor& a, double s) {
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
    return out;
}

// a + s*b, the workhorse of every schedule update.
inline VideoTensor axpy(const VideoTensor& a, double s, const VideoTensor& b) {
    require_same_shape(a, b, "axpy");
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + s * b.data()[i];
    return out;
}

// a + lambda*(b - a); lambda=0 gives a, lambda=1 gives b.
inline VideoTensor lerp(const VideoTensor& a, const VideoTensor& b, double lambda) {
    require_same_shape(a, b, "lerp");
    VideoTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.data()[i] = a.data()[i] + lambda * (b.data()[i] - a.data()[i]);
    return out;
}

inline double max_abs_diff(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double rms(const VideoTensor& a) {
    if (a.size() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double rms_diff(const VideoTensor& a, const VideoTensor& b) {
    require_same_shape(a, b, "rms_diff");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return a.size() ? std::sqrt(acc / static_cast<double>(a.size())) : 0.0;
}

inline bool all_finite(const VideoTensor& a) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a.data()[i])) return false;
    return true;
}

}  // namespace lav
