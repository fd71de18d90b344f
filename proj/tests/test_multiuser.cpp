#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fixtures.hpp"

using namespace mismatch;
using namespace fixtures;

namespace {

MacProblem adder_mac() {
    const double e0 = .25, e1 = .01, dl = .1;
    Mat w(4, 3), q(4, 3);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int y = 0; y < 3; ++y) {
                double de = b ? e1 : e0;
                w(a * 2 + b, y) = y == a + b ? 1 - 2 * de : de;
                q(a * 2 + b, y) = y == a + b ? 1 - 2 * dl : dl;
            }
    return MacProblem(2, 2, Dmc(w), Metric(q), InputDist{.5, .5}, InputDist{.5, .5});
}

Mat four_input_w() {
    Mat w(4, 4);
    w << .99, .01, 0, 0, .01, .99, 0, 0, .1, .1, .7, .1, .1, .1, .1, .7;
    return w;
}

Mat four_input_q() {
    Mat q(4, 4);
    q << 1, .5, 0, 0, .5, 1, 0, 0, .05, .15, 1, .05, .15, .05, .5, 1;
    return q;
}

}  // namespace

TEST_SUITE("multiuser") {

TEST_CASE("parallel BSC MAC: single-user bounds and the weakened sum") {
    const double d1 = .11, d2 = .2;
    auto p = parallel_bsc_mac(d1, d2);
    auto r1 = mac_single_bound(p, 1), r2 = mac_single_bound(p, 2);
    CHECK(near(r1.bits(), 1 - h2_bits(d1), 1e-8));
    CHECK(near(r2.bits(), 1 - h2_bits(d2), 1e-8));
    CHECK(*r1.gap <= 1e-9);
    auto wk = mac_weakened_sum_bound(p);
    CHECK(near(wk.bits(), 2 * (1 - h2_bits((d1 + d2) / 2)), 1e-8));
    auto c = mac_sum_condition(p, to_nats(1 - h2_bits(d1)), to_nats(1 - h2_bits(d2)));
    CHECK(c.holds);
    CHECK(near(c.margin, 0.0, 1e-9));
}

TEST_CASE("two-user adder region boundary") {
    auto bd = mac_region_boundary(adder_mac(), 16);
    CHECK(near(to_bits(bd.i1), 0.34069181, 1e-6));
    CHECK(near(to_bits(bd.i2), 0.473854, 1e-6));
    CHECK(near(to_bits(bd.weakened_sum), 0.48800283, 1e-6));
    REQUIRE(bd.constrained.size() == bd.weakened.size());
    for (const auto& pt : bd.constrained) {
        CHECK(pt.r1 <= bd.i1 + 1e-9);
        CHECK(pt.r2 <= bd.i2 + 1e-9);
    }
    // near the R2 corner the constrained boundary sits outside the pentagon
    const auto& c = bd.constrained[14];
    const auto& w = bd.weakened[14];
    CHECK(near(to_bits(c.r1), 0.049804062, 1e-5));
    CHECK(std::hypot(c.r1, c.r2) > std::hypot(w.r1, w.r2));
}

TEST_CASE("superposition rates on the cyclic channel") {
    Vec qu(2);
    qu << .645, .355;
    Mat qx(2, 3);
    qx << .3, .7, 0, 0, 0, 1;
    auto sc = ScInput::from_parts(qu, qx);
    Dmc w(zuec_w());
    Metric m(zuec_q());
    auto r = sc_rate(w, m, sc);
    CHECK(near(to_bits(r.total), 0.6946463, 1e-6));
    CHECK(near(to_bits(r.r1), 0.3580732, 1e-6));
    CHECK(*sc_r1_bound(w, m, sc).gap <= 1e-9);
    CHECK(near(to_bits(rsc_rate(w, m, sc).total), to_bits(r.total), 1e-6));
    CHECK(to_bits(r.total) > 0.599240219);
}

TEST_CASE("refined superposition on the four-input channel") {
    Dmc w(four_input_w());
    Metric m(four_input_q());
    Vec qu(2);
    qu << .698, .302;
    Mat qx(2, 4);
    qx << .5, .5, 0, 0, 0, 0, .528, .472;
    auto sc = ScInput::from_parts(qu, qx);
    auto s = sc_rate(w, m, sc);
    auto rs = rsc_rate(w, m, sc);
    CHECK(near(to_bits(s.total), 1.059846, 1e-5));
    CHECK(near(to_bits(rs.total), 1.313436, 1e-5));
    CHECK(rs.total >= s.total - 1e-9);
}

TEST_CASE("four-input channel: LM and GMI at their quoted inputs") {
    Dmc w(four_input_w());
    Metric m(four_input_q());
    CHECK(near(lm(InputDist{.403, .418, 0, .179}, w, m).bits(), 1.110896, 1e-5));
    CHECK(near(gmi(InputDist{.330, .331, .155, .184}, w, m).bits(), 0.9536364, 1e-5));
}

TEST_CASE("sum of two channels") {
    auto s = sum_channel_rate(std::log(2.0), std::log(2.0));
    CHECK(near(s.rate, std::log(4.0), 1e-12));
}

}  // TEST_SUITE
