#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fixtures.hpp"

using namespace mismatch;
using namespace fixtures;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::domain;
}

// Quadratic ||x - c||^2 over two stacked simplices of size 3.
struct TwoBlockQuadratic {
    Vec c = (Vec(6) << .6, .4, .1, .1, .1, .1).finished();
    double operator()(const Vec& x) const { return (x - c).squaredNorm(); }
    Vec grad(const Vec& x) const { return 2.0 * (x - c); }
    Vec solution() const {
        Vec s(6);
        s << .6 - 1. / 30, .4 - 1. / 30, .1 - 1. / 30, 1. / 3, 1. / 3, 1. / 3;
        return s;
    }
};

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("simplex projection") {
    Vec v(3);
    v << .9, .4, -.2;
    Vec p = project_simplex(v);
    CHECK(near(p(0), .75, 1e-12));
    CHECK(near(p(1), .25, 1e-12));
    CHECK(p(2) == 0.0);
    Vec u(3);
    u << .2, .3, .5;
    CHECK((project_simplex(u) - u).norm() < 1e-15);
}

TEST_CASE("projected gradient over a product of simplices") {
    TwoBlockQuadratic f;
    Vec x0 = Vec::Constant(6, 1. / 3);
    auto r = simplex_spg_min([&](const Vec& x) { return f(x); }, [&](const Vec& x) { return f.grad(x); }, {{0, 3}, {3, 3}},
                             x0, 1e-12);
    CHECK(r.report.converged);
    CHECK((r.x - f.solution()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("conditional gradient with line search") {
    TwoBlockQuadratic f;
    auto oracle = [](const Vec& g) {
        Vec s = Vec::Zero(6);
        for (int b = 0; b < 2; ++b) {
            Eigen::Index i;
            g.segment(3 * b, 3).minCoeff(&i);
            s(3 * b + i) = 1.0;
        }
        return s;
    };
    Vec x0 = Vec::Constant(6, 1. / 3);
    auto r = frank_wolfe_min([&](const Vec& x) { return f(x); }, [&](const Vec& x) { return f.grad(x); }, oracle, x0, 1e-6,
                             20000, true);
    CHECK(r.report.converged);
    CHECK(r.gap <= 1e-6);
    CHECK(near(r.value, f(f.solution()), 1e-6));
}

TEST_CASE("one-dimensional concave maximization") {
    auto r = maximize_concave_1d([](double x) { return std::log1p(x) - 0.25 * x; });
    CHECK(near(r.x, 3.0, 1e-6));
    auto b = maximize_on_interval([](double x) { return -(x - 2.0) * (x - 2.0); }, 0.0, 1.0);
    CHECK(near(b.x, 1.0, 1e-9));
    CHECK_THROWS_AS(maximize_on_interval([](double) { return std::nan(""); }, 0.0, 1.0), Error);
}

TEST_CASE("channel capacity") {
    Mat b(2, 2);
    b << .89, .11, .11, .89;
    auto c = blahut_arimoto_capacity(b);
    CHECK(near(to_bits(c.capacity), 1 - h2_bits(.11), 1e-10));
    CHECK(c.upper - c.lower <= 1e-12);
    auto t = blahut_arimoto_capacity(zuec_w());
    CHECK(near(to_bits(t.capacity), std::log2(3.0) - h2_bits(.25), 1e-9));
}

}  // TEST_SUITE

TEST_SUITE("io") {

TEST_CASE("channel file") {
    auto pf = parse_problem(R"({"kind":"dmc","X":2,"Y":3,"W":[[0.97,0.03,0],[0.1,0.1,0.8]],"q":[[1,1,1],[1,0.5,1.36]]})");
    CHECK(pf.kind == "dmc");
    REQUIRE(pf.w);
    CHECK(pf.w->w(1, 2) == 0.8);
    CHECK(pf.q->q(1, 1) == 0.5);
    CHECK_FALSE(pf.input);
}

TEST_CASE("metric defaults to the channel") {
    auto pf = parse_problem(R"({"kind":"dmc","X":2,"Y":2,"W":[[0.9,0.1],[0.2,0.8]],"Q":[0.5,0.5]})");
    CHECK(pf.q->q == pf.w->w);
    REQUIRE(pf.input);
    CHECK(pf.input->p(0) == 0.5);
}

TEST_CASE("MAC and rate-distortion files fill defaults") {
    auto mac = parse_problem(
        R"({"kind":"mac","X1":2,"X2":2,"Y":2,"W":[[[1,0],[0,1]],[[0,1],[1,0]]]})");
    REQUIRE(mac.mac);
    CHECK(mac.mac->q1.p(0) == 0.5);
    auto rd = parse_problem(R"({"kind":"rd","X":2,"Xhat":3,"source":[0.5,0.5],"d0":[[0,1,1],[1,0,1]]})");
    REQUIRE(rd.rd);
    CHECK(rd.rd->q_hat.p(2) == doctest::Approx(1. / 3));
    CHECK(rd.rd->d1 == rd.rd->d0);
}

TEST_CASE("rejected inputs") {
    CHECK(kind_of([] { parse_problem("{"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"X":2})"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"kind":"tree"})"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"kind":"dmc","X":2,"Y":2,"W":[[0.9,0.1],[0.3,0.8]]})"); }) ==
          ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"kind":"dmc","X":2,"Y":2,"W":[[0.9,0.1]]})"); }) == ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"kind":"dmc","X":2,"Y":2,"W":[[1,0],[0,1]],"q":[[0,0],[1,1]]})"); }) ==
          ErrorKind::validation);
    CHECK(kind_of([] { parse_problem(R"({"kind":"sc","U":2,"Qux":[[0.5,0.2],[0.1,0.1]]})"); }) == ErrorKind::validation);
    CHECK(kind_of([] { (void)InputDist{0.5, 0.6}; }) == ErrorKind::validation);
    CHECK(kind_of([] { bsc(1.5); }) == ErrorKind::domain);
}

TEST_CASE("comma separated vectors") {
    Vec v = parse_csv_vector("0.2, 0.3,0.5");
    REQUIRE(v.size() == 3);
    CHECK(v(1) == 0.3);
    CHECK_THROWS_AS(parse_csv_vector(""), Error);
    CHECK_THROWS_AS(parse_csv_vector("0.2,x"), Error);
}

TEST_CASE("result records round-trip through validation") {
    auto r = lm(InputDist{.5, .5}, Dmc(bsc(.1)), Metric(bsc(.1)));
    json j = result_json(r);
    CHECK_NOTHROW(validate_result(j));
    CHECK(j["value_bits"].get<double>() == doctest::Approx(1 - h2_bits(.1)).epsilon(1e-9));
    j["value_bits"] = 0.1;
    CHECK_THROWS_AS(validate_result(j), Error);
}

}  // TEST_SUITE
