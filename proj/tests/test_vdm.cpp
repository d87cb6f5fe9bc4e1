#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lav/rng.hpp"
#include "lav/schedule.hpp"
#include "lav/vdm.hpp"

using namespace lav;

namespace {

// Per-pixel temporal total variation summed over the tensor.
double temporal_tv(const VideoTensor& v) {
    const Shape s = v.shape();
    double tv = 0.0;
    for (int f = 0; f + 1 < s.frames; ++f)
        for (int c = 0; c < s.channels; ++c)
            for (int y = 0; y < s.height; ++y)
                for (int x = 0; x < s.width; ++x)
                    tv += std::abs(v.at(f + 1, c, y, x) - v.at(f, c, y, x));
    return tv;
}

VideoTensor three_frame_impulse() {
    VideoTensor v(Shape{3, 1, 1, 1});
    v.at(0, 0, 0, 0) = 0.0;
    v.at(1, 0, 0, 0) = 1.0;
    v.at(2, 0, 0, 0) = 0.0;
    return v;
}

}  // namespace

TEST_CASE("temporal box filter hand case with clamped windows", "[vdm]") {
    // radius 1 on frames (0,1,0): edge windows shrink to the in-range
    // samples, giving (1/2, 1/3, 1/2).
    auto v = three_frame_impulse();
    auto filtered = temporal_boxfilter(v, 1);
    CHECK(filtered.at(0, 0, 0, 0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(filtered.at(1, 0, 0, 0) == Catch::Approx(1.0 / 3.0).margin(1e-15));
    CHECK(filtered.at(2, 0, 0, 0) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("box filter leaves static video unchanged for any radius", "[vdm]") {
    auto v = VideoTensor::full(Shape{5, 2, 3, 3}, 1.7);
    for (int r : {0, 1, 2, 10}) REQUIRE(max_abs_diff(temporal_boxfilter(v, r), v) < 1e-14);
}

TEST_CASE("box filter contracts temporal total variation", "[vdm]") {
    for (int rep = 0; rep < 20; ++rep) {
        auto v = standard_normal(Shape{7, 1, 4, 4}, 500 + rep);
        for (int r : {1, 2, 3})
            REQUIRE(temporal_tv(temporal_boxfilter(v, r)) <= temporal_tv(v) + 1e-12);
    }
}

TEST_CASE("oracle denoiser inverts to the context exactly", "[vdm]") {
    auto sched = NoiseSchedule::linear(20, 1e-3, 0.05);
    auto ctx = standard_normal(Shape{4, 1, 4, 4}, 11);
    auto eps = standard_normal(Shape{4, 1, 4, 4}, 12);
    Denoiser den{Denoiser::Kind::oracle};
    for (int t : {1, 7, 20}) {
        auto z_t = add_noise(ctx, t, eps, sched);
        auto v = predict_v(den, z_t, t, sched, ctx);
        auto rec = predict_z0(z_t, v, t, sched);
        REQUIRE(max_abs_diff(rec, ctx) < 1e-12);
    }
}

TEST_CASE("smoothing denoiser blends toward the box filtered context", "[vdm]") {
    auto sched = NoiseSchedule::linear(10, 1e-3, 0.05);
    auto ctx = three_frame_impulse();
    auto eps = standard_normal(ctx.shape(), 13);
    auto z_t = add_noise(ctx, 5, eps, sched);

    Denoiser den{Denoiser::Kind::smoothing, /*rho=*/1.0, /*radius=*/1};
    auto v = predict_v(den, z_t, 5, sched, ctx);
    auto implied = predict_z0(z_t, v, 5, sched);
    CHECK(implied.at(0, 0, 0, 0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(implied.at(1, 0, 0, 0) == Catch::Approx(1.0 / 3.0).margin(1e-12));
    CHECK(implied.at(2, 0, 0, 0) == Catch::Approx(0.5).margin(1e-12));

    SECTION("rho=0 collapses to the oracle") {
        Denoiser flat{Denoiser::Kind::smoothing, 0.0, 3};
        auto v0 = predict_v(flat, z_t, 5, sched, ctx);
        auto v1 = predict_v(Denoiser{Denoiser::Kind::oracle}, z_t, 5, sched, ctx);
        REQUIRE(max_abs_diff(v0, v1) < 1e-12);
    }
}

TEST_CASE("detail compensation hand case and the consistent-target lock", "[vdm]") {
    // rho=1, r=1 on the (0,1,0) impulse: implied clean video (1/2,1/3,1/2),
    // so the captured detail is (-1/2, 2/3, -1/2) and adding it back
    // reconstructs the source exactly at every later step.
    auto sched = NoiseSchedule::linear(10, 1e-3, 0.05);
    auto ctx = three_frame_impulse();
    auto eps = standard_normal(ctx.shape(), 14);
    Denoiser den{Denoiser::Kind::smoothing, 1.0, 1};

    const int t_first = 10;
    auto z_first = add_noise(ctx, t_first, eps, sched);
    auto v_first = predict_v(den, z_first, t_first, sched, ctx);
    auto z0_hat = predict_z0(z_first, v_first, t_first, sched);
    auto detail = capture_detail(z0_hat, ctx);
    CHECK(detail.delta.at(0, 0, 0, 0) == Catch::Approx(-0.5).margin(1e-12));
    CHECK(detail.delta.at(1, 0, 0, 0) == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(detail.delta.at(2, 0, 0, 0) == Catch::Approx(-0.5).margin(1e-12));

    for (int t : {10, 6, 1}) {
        auto z_t = add_noise(ctx, t, standard_normal(ctx.shape(), 20 + t), sched);
        auto v = predict_v(den, z_t, t, sched, ctx);
        auto target = consistent_target(v, z_t, t, sched, detail);
        REQUIRE(max_abs_diff(target, ctx) < 1e-12);
    }
}

TEST_CASE("vdm inputs are validated", "[vdm]") {
    auto sched = NoiseSchedule::linear(5, 1e-3, 0.05);
    auto a = standard_normal(Shape{2, 1, 2, 2}, 1);
    auto b = standard_normal(Shape{2, 1, 2, 3}, 2);
    CHECK_THROWS(temporal_boxfilter(a, -1));
    CHECK_THROWS(predict_v(Denoiser{Denoiser::Kind::smoothing, 1.5, 1}, a, 1, sched, a));
    CHECK_THROWS(predict_v(Denoiser{Denoiser::Kind::oracle}, a, 1, sched, b));
    CHECK_THROWS(capture_detail(a, b));
    auto d = capture_detail(a, a);
    CHECK_THROWS(consistent_target(b, a, 1, sched, d));
}
