#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fixtures.hpp"

using namespace mismatch;
using namespace fixtures;

namespace {

struct Ternary {
    Dmc w;
    Metric m;
    InputDist q{0.1, 0.3, 0.6};

    Ternary() {
        const double d0 = .01, d1 = .05, d2 = .25, d = .1;
        Mat wm(3, 3), qm(3, 3);
        wm << 1 - 2 * d0, d0, d0, d1, 1 - 2 * d1, d1, d2, d2, 1 - 2 * d2;
        qm << 1 - 2 * d, d, d, d, 1 - 2 * d, d, d, d, 1 - 2 * d;
        w = Dmc(wm);
        m = Metric(qm);
    }
};

}  // namespace

TEST_SUITE("exponents") {

TEST_CASE("random-coding exponents vanish at GMI and LM") {
    Ternary t;
    CHECK(near(gmi(t.q, t.w, t.m).bits(), 0.38684665, 1e-7));
    CHECK(near(lm(t.q, t.w, t.m).bits(), 0.44905235, 1e-7));
    double zi = exponent_zero_crossing([&](double R) { return er_iid(t.q, t.w, t.m, R).value; }, 0, 1, 1e-9, 1e-6);
    double zc = exponent_zero_crossing([&](double R) { return er_cc(t.q, t.w, t.m, R).value; }, 0, 1, 1e-9, 1e-6);
    CHECK(near(to_bits(zi), 0.38680, 2e-4));
    CHECK(near(to_bits(zc), 0.44901, 2e-4));
    CHECK(to_bits(zi) <= gmi(t.q, t.w, t.m).bits() + 1e-5);
    CHECK(to_bits(zc) <= lm(t.q, t.w, t.m).bits() + 1e-5);
}

TEST_CASE("expurgated exponent at zero rate") {
    Ternary t;
    CHECK(near(eex_cc(t.q, t.w, t.m, 0).value, 0.1992435, 1e-6));
    CHECK(near(eex_iid(t.q, t.w, t.m, 0).value, 0.1992434, 1e-6));
    const double R = 0.01;
    CHECK(near(eex_cc(t.q, t.w, t.m, R).value, 0.17641094, 1e-6));
    CHECK(near(er_cc(t.q, t.w, t.m, R).value, 0.17609861, 1e-6));
    CHECK(near(er_iid(t.q, t.w, t.m, R).value, 0.13132278, 1e-6));
}

TEST_CASE("ensemble ordering") {
    Ternary t;
    for (double R : {0.0, 0.02, 0.1, 0.2}) CHECK(er_cc(t.q, t.w, t.m, R).value >= er_iid(t.q, t.w, t.m, R).value - 1e-8);
    for (double R : {0.0, 0.01}) CHECK(eex_cc(t.q, t.w, t.m, R).value > er_cc(t.q, t.w, t.m, R).value);
}

TEST_CASE("zero distance threshold reproduces the constant-composition exponent") {
    Ternary t;
    RgvSpec sp{Mat::Zero(3, 3), -1.0};
    auto r = rgv_exponent(t.q, t.w, t.m, sp, 0.05);
    CHECK(near(r.exponent, 0.13609861, 1e-6));
    CHECK(near(r.exponent, er_cc(t.q, t.w, t.m, 0.05).value, 1e-7));
    CHECK(r.rate_condition_ok);
}

TEST_CASE("exponent curve is nonincreasing") {
    Ternary t;
    auto c = exponent_curve(t.q, t.w, t.m, Ensemble::cc, {0.0, 0.05, 0.1, 0.2, 0.3});
    for (std::size_t k = 1; k < c.samples.size(); ++k) CHECK(c.samples[k].exponent <= c.samples[k - 1].exponent + 1e-9);
    CHECK_THROWS_AS(exponent_curve(t.q, t.w, t.m, Ensemble::cc, {0.2, 0.1}), Error);
    CHECK_THROWS_AS(exponent_curve(t.q, t.w, t.m, Ensemble::rgv, {0.1}), Error);
}

TEST_CASE("Gallager function at rho = 0 is zero") {
    Ternary t;
    CHECK(near(e0_iid(t.q, t.w, t.m, 0.0).value, 0.0, 1e-10));
    CHECK(near(e0_cc(t.q, t.w, t.m, 0.0).value, 0.0, 1e-10));
}

}  // TEST_SUITE
