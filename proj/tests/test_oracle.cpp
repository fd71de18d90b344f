#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "checks.hpp"
#include "fixtures.hpp"

using namespace mismatch;
using namespace fixtures;

TEST_SUITE("oracle") {

TEST_CASE("grid primal on the reduced cyclic channel") {
    Mat w = zuec_w().topRows(2), q = zuec_q().topRows(2);
    InputDist in{0.449, 0.551};
    const double dual = lm(in, Dmc(w), Metric(q)).bits();
    for (int n : {20, 40, 60}) CHECK(near(to_bits(grid_lm_primal(in, Dmc(w), Metric(q), n)), dual, 1e-5));
    const double g = gmi(in, Dmc(w), Metric(q)).bits();
    double prev = kInf;
    for (int n : {20, 40, 60}) {
        double v = to_bits(grid_gmi_primal(in, Dmc(w), Metric(q), n));
        CHECK(v >= g - 1e-9);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK(near(prev, g, 5e-4));
}

TEST_CASE("inputs without mass do not change the grid primal") {
    InputDist full{0.449, 0.551, 0.0}, reduced{0.449, 0.551};
    Mat w = zuec_w(), q = zuec_q();
    CHECK(near(grid_lm_primal(full, Dmc(w), Metric(q), 40), grid_lm_primal(reduced, Dmc(w.topRows(2)), Metric(q.topRows(2)), 40),
               1e-12));
    CHECK(near(grid_gmi_primal(full, Dmc(w), Metric(q), 40),
               grid_gmi_primal(reduced, Dmc(w.topRows(2)), Metric(q.topRows(2)), 40), 1e-12));
}

TEST_CASE("grid exponents track the dual forms") {
    Mat wm(2, 2), qm(2, 2);
    wm << .9, .1, .2, .8;
    qm << 1, .3, .5, 1;
    Dmc w(wm);
    Metric m(qm);
    InputDist q{.5, .5};
    for (double R : {0.0, 0.05, 0.1}) {
        CHECK(near(grid_exponent_primal(q, w, m, R, PrimalExponent::er_iid, 40), er_iid(q, w, m, R).value, 5e-3));
        CHECK(near(grid_exponent_primal(q, w, m, R, PrimalExponent::er_cc, 40), er_cc(q, w, m, R).value, 5e-3));
        CHECK(near(grid_exponent_primal(q, w, m, R, PrimalExponent::ex_cc, 40), eex_cc(q, w, m, R).value, 5e-3));
    }
}

TEST_CASE("grid rate-distortion") {
    Vec pi(2), qh(2);
    pi << 2. / 3, 1. / 3;
    qh << .8, .2;
    Mat d(2, 2);
    d << 0, 1, 1, 0;
    CHECK(near(grid_rd_iid(pi, d, qh, 0.15, 60), rd_iid_rate(pi, d, qh, 0.15).value, 5e-3));
    CHECK(near(grid_rd_cc(pi, d, qh, 0.15, 60), rd_cc_rate(pi, d, qh, 0.15).value, 5e-3));
}

TEST_CASE("closest type sums to n") {
    Vec q(3);
    q << .449, .551, 0;
    auto t = closest_type(q, 17);
    CHECK(t[0] + t[1] + t[2] == 17);
    CHECK(t[2] == 0);
}

TEST_CASE("Monte Carlo error falls with block length below capacity") {
    Mat b(2, 2);
    b << .89, .11, .11, .89;
    const double ref[] = {0.1524, 0.1121, 0.0848, 0.0663};
    int i = 0;
    double prev = 1.0;
    for (int n : {4, 8, 12, 16}) {
        int M = static_cast<int>(std::floor(std::pow(2.0, 0.25 * n)));
        auto e = monte_carlo_error(Dmc(b), Metric(b), InputDist{.5, .5}, McEnsemble::iid, n, M, 20000, 1);
        CHECK(near(e.estimate, ref[i++], 1e-4));
        CHECK(e.lo <= e.estimate);
        CHECK(e.estimate <= e.hi);
        CHECK(e.estimate < prev);
        prev = e.estimate;
    }
}

TEST_CASE("single codeword never errs") {
    Mat b(2, 2);
    b << .89, .11, .11, .89;
    auto e = monte_carlo_error(Dmc(b), Metric(b), InputDist{.5, .5}, McEnsemble::iid, 8, 1, 500, 3);
    CHECK(e.estimate == 0.0);
}

TEST_CASE("Wilson interval") {
    auto w = wilson_interval(0, 100);
    CHECK(near(w.lo, 0.0, 1e-15));
    CHECK(w.hi > 0.0);
    auto h = wilson_interval(50, 100);
    CHECK(near(h.estimate, 0.5, 1e-12));
    CHECK(near(h.lo + h.hi, 1.0, 1e-12));
}

}  // TEST_SUITE
