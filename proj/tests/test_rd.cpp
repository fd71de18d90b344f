#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fixtures.hpp"

using namespace mismatch;
using namespace fixtures;

namespace {

struct Bern {
    Vec pi = (Vec(2) << 2. / 3, 1. / 3).finished();
    Vec q = (Vec(2) << .8, .2).finished();
    Mat d = (Mat(2, 2) << 0, 1, 1, 0).finished();
};

Mat hamming3() { return (Mat(3, 3) << 0, 1, 1, 1, 0, 1, 1, 1, 0).finished(); }
Mat skewed3() { return (Mat(3, 3) << 0, 1, 1, 1, 0, 1, 0, 0, 0).finished(); }

}  // namespace

TEST_SUITE("rd") {

TEST_CASE("coupling floor for a Bernoulli source") {
    Bern b;
    CHECK(near(rd_coupling_floor(b.pi, b.d, b.q), 2. / 15, 1e-9));
    CHECK(rd_cc_rate(b.pi, b.d, b.q, 0.12).infinite);
}

TEST_CASE("codebook at the matched output distribution achieves the matched curve") {
    Bern b;
    const double D = 2. / 9;
    const double target = to_bits(binary_entropy(1. / 3) - binary_entropy(D));
    auto a = rd_iid_rate(b.pi, b.d, b.q, D), c = rd_cc_rate(b.pi, b.d, b.q, D);
    CHECK(near(a.bits(), target, 1e-7));
    CHECK(near(c.bits(), target, 1e-7));
    CHECK(near(to_bits(matched_rd(b.pi, b.d, D)), target, 1e-7));
}

TEST_CASE("iid and constant-composition rates separate below the matched point") {
    Bern b;
    auto a = rd_iid_rate(b.pi, b.d, b.q, 0.15), c = rd_cc_rate(b.pi, b.d, b.q, 0.15);
    CHECK(near(a.bits(), 0.31662, 1e-5));
    CHECK(near(c.bits(), 0.32940, 1e-5));
    CHECK(c.value >= a.value);
}

TEST_CASE("two-stage distortion on a ternary source") {
    Vec p3 = Vec::Constant(3, 1. / 3);
    const double R = 0.3;
    auto r = mismatched_distortion(RdProblem(InputDist(p3), hamming3(), skewed3(), InputDist(p3)), R);
    CHECK(near(r.value, 0.191509, 1e-5));
    CHECK(near(r.stage1, 0.287147, 1e-6));
    Vec half(3);
    half << .5, .5, 0;
    auto r2 = mismatched_distortion(RdProblem(InputDist(p3), hamming3(), skewed3(), InputDist(half)), R);
    CHECK(near(r2.value, 0.043995, 1e-5));
    auto r3 = mismatched_distortion(RdProblem(InputDist(p3), hamming3(), hamming3(), InputDist(p3)), R);
    CHECK(near(r3.value, 0.287147, 1e-6));
    CHECK(near(rd_cc_rate(p3, hamming3(), p3, r3.value).value, R, 1e-6));
    CHECK_THROWS_AS(mismatched_distortion(RdProblem(InputDist(p3), hamming3(), skewed3(), InputDist(p3)), -1.0), Error);
}

TEST_CASE("Gaussian rate-distortion") {
    CHECK(near(gaussian_rd_rate(1.0, 0.25).rate, std::log(2.0), 1e-12));
}

}  // TEST_SUITE
