#include <catch2/catch_amalgamated.hpp>

#include "lav/codec.hpp"
#include "lav/rng.hpp"
#include "lav/tensor.hpp"

using namespace lav;

TEST_CASE("identity codec is a bitwise passthrough", "[codec]") {
    Codec c = Codec::identity();
    auto x = standard_normal(Shape{2, 3, 4, 4}, 11);
    auto z = c.encode(x);
    REQUIRE(max_abs_diff(z, x) == 0.0);
    REQUIRE(max_abs_diff(c.decode(z), x) == 0.0);
    REQUIRE(c.latent_shape(x.shape()) == x.shape());
}

TEST_CASE("downsample codec averages 2x2 blocks, hand case", "[codec]") {
    // Block [0,1;2,3] -> mean 1.5.
    Codec c = Codec::downsample(2);
    VideoTensor x(Shape{1, 1, 2, 2});
    x.at(0, 0, 0, 0) = 0.0;
    x.at(0, 0, 0, 1) = 1.0;
    x.at(0, 0, 1, 0) = 2.0;
    x.at(0, 0, 1, 1) = 3.0;
    auto z = c.encode(x);
    REQUIRE(z.shape() == Shape{1, 1, 1, 1});
    CHECK(z.at(0, 0, 0, 0) == Catch::Approx(1.5).margin(1e-15));

    // Nearest-neighbour decode paints the mean back over the block.
    auto y = c.decode(z);
    REQUIRE(y.shape() == x.shape());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(y.at(0, 0, i, j) == Catch::Approx(1.5).margin(1e-15));
}

TEST_CASE("both codecs are linear maps", "[codec]") {
    auto x = standard_normal(Shape{3, 2, 8, 8}, 21);
    auto y = standard_normal(Shape{3, 2, 8, 8}, 22);
    const double a = 0.37, b = -1.25;
    for (Codec c : {Codec::identity(), Codec::downsample(2)}) {
        auto combo = add(scale(x, a), scale(y, b));
        auto lhs = c.encode(combo);
        auto rhs = add(scale(c.encode(x), a), scale(c.encode(y), b));
        REQUIRE(max_abs_diff(lhs, rhs) < 1e-10);

        auto zl = c.encode(x);
        auto zr = c.encode(y);
        auto dl = c.decode(add(scale(zl, a), scale(zr, b)));
        auto dr = add(scale(c.decode(zl), a), scale(c.decode(zr), b));
        REQUIRE(max_abs_diff(dl, dr) < 1e-10);
    }
}

TEST_CASE("downsample then decode then encode is idempotent", "[codec]") {
    // decode produces block-constant frames, which encode maps back exactly.
    Codec c = Codec::downsample(2);
    auto x = standard_normal(Shape{2, 3, 16, 16}, 31);
    auto z = c.encode(x);
    auto z2 = c.encode(c.decode(z));
    REQUIRE(max_abs_diff(z, z2) < 1e-12);
}

TEST_CASE("downsample codec validates divisibility and scale", "[codec]") {
    CHECK_THROWS(Codec::downsample(0));
    Codec c = Codec::downsample(2);
    CHECK_THROWS(c.encode(VideoTensor(Shape{1, 1, 3, 4})));
    CHECK_THROWS(c.encode(VideoTensor(Shape{1, 1, 4, 5})));
    CHECK_THROWS(c.latent_shape(Shape{1, 1, 5, 4}));
}
