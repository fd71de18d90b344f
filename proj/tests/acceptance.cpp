// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "checks.hpp"
#include "mismatch/oracle.hpp"

#include <boost/math/tools/roots.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace mismatch;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records one sub-check; a failing sub-check fails the criterion.
    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (detail.tellp() > 0) detail << "; ";
        detail << what << (ok ? "" : " [x]");
    }

    // Context that does not affect the verdict.
    void info(const std::string& what) {
        if (detail.tellp() > 0) detail << "; ";
        detail << "(" << what << ")";
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool near(double got, double want, double tol) { return std::abs(got - want) <= tol; }

double h2_bits(double p) { return to_bits(binary_entropy(p)); }

Mat example_w() {
    Mat w(3, 3);
    w << 0.75, 0.25, 0.0, 0.0, 0.75, 0.25, 0.25, 0.0, 0.75;
    return w;
}

Mat example_q() {
    Mat q(3, 3);
    q << 1, 1, 0, 0, 1, 1, 1, 0, 1;
    return q;
}

Mat cnv_w() {
    Mat w(2, 3);
    w << 0.97, 0.03, 0.0, 0.1, 0.1, 0.8;
    return w;
}

Mat cnv_q(double q22) {
    Mat q(2, 3);
    q << 1.0, 1.0, 1.0, 1.0, q22, 1.36;
    return q;
}

double best_binary_lm(const Dmc& w, const Metric& m, double step) {
    double best = 0.0;
    const int n = static_cast<int>(std::lround(1.0 / step));
    for (int k = 0; k <= n; ++k) {
        double q0 = static_cast<double>(k) / n;
        best = std::max(best, lm(InputDist{q0, 1.0 - q0}, w, m).value);
    }
    return best;
}

// ---- criteria

void c1(Outcome& o) {
    Dmc w(example_w());
    Metric m(example_q());
    InputDist u{1.0 / 3, 1.0 / 3, 1.0 / 3}, q{0.449, 0.551, 0.0};
    double gu = gmi(u, w, m).bits(), lu = lm(u, w, m).bits();
    double gq = gmi(q, w, m).bits(), lq = lm(q, w, m).bits();
    o.check(near(gu, 0.585, 2e-3) && near(lu, 0.585, 2e-3), fmt("uniform gmi %.5f lm %.5f (0.585)", gu, lu));
    o.check(near(gq, 0.502, 2e-3), fmt("Q2 gmi %.5f (0.502)", gq));
    o.check(near(lq, 0.596, 2e-3), fmt("Q2 lm %.5f (0.596)", lq));
}

void c2(Outcome& o) {
    const double delta = 0.11;
    Dmc w(bsc(delta));
    InputDist q{0.5, 0.5};
    const double matched = 1.0 - h2_bits(delta);
    double worst_low = 0.0, worst_high = 0.0, gmi_off = kInf;
    bool gmi_at_one = false;
    for (int k = -12; k <= 12; ++k) {
        double lam = 0.25 * k;
        if (k == -4) continue;  // lambda = -1 is the transition point
        Metric m = binary_log_metric(lam);
        double l = lm(q, w, m).bits(), g = gmi(q, w, m).bits();
        if (lam < -1.0)
            worst_low = std::max(worst_low, std::abs(l));
        else
            worst_high = std::max(worst_high, std::abs(l - matched));
        if (k == 4)
            gmi_at_one = near(g, matched, 2e-3);
        else
            gmi_off = std::min(gmi_off, std::abs(g - matched));
    }
    o.check(worst_low <= 2e-3, fmt("max |lm| for lambda<-1: %.2e", worst_low));
    o.check(worst_high <= 2e-3, fmt("max |lm-matched| for lambda>-1: %.2e", worst_high));
    o.check(gmi_at_one, "gmi = matched at lambda=1");
    o.check(gmi_off > 2e-3, fmt("closest gmi elsewhere %.2e from matched", gmi_off));
}

void c3(Outcome& o) {
    const double d = 0.11;
    Metric m(parallel_bsc(d, d));
    InputDist q(Vec::Constant(4, 0.25));
    double worst = 0.0;
    int points = 0;
    for (double d1 : {0.01, 0.05, 0.11, 0.2, 0.3, 0.45})
        for (double d2 : {0.02, 0.08, 0.15, 0.25, 0.4}) {
            double cf = 2.0 * (1.0 - h2_bits(0.5 * (d1 + d2)));
            worst = std::max(worst, std::abs(lm(q, Dmc(parallel_bsc(d1, d2)), m).bits() - cf));
            ++points;
        }
    o.check(worst <= 1e-3, fmt("%g grid points, max deviation %.2e bits", points, worst));
}

void c4(Outcome& o) {
    checks::Tally pd = checks::primal_dual(500, 101, 1e-5);
    o.check(pd.ok(), fmt("primal-dual %g instances, %g failures, worst %.2e nats", pd.cases, pd.failures, pd.worst));
    checks::Gen g(102);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        checks::Instance in = checks::interior_2x2(g);
        worst = std::max(worst, std::abs(to_bits(grid_lm_primal(in.q, in.w, in.m, 60)) - lm(in.q, in.w, in.m).bits()));
        worst = std::max(worst, std::abs(to_bits(grid_gmi_primal(in.q, in.w, in.m, 60)) - gmi(in.q, in.w, in.m).bits()));
    }
    o.check(worst <= 2e-3, fmt("2x2 grid oracle max deviation %.2e bits", worst));
}

void c5(Outcome& o) {
    Dmc w(example_w());
    Metric m(example_q());
    Vec q2(9);
    q2 << 0, 0.250, 0, 0.319, 0, 0, 0, 0.181, 0.250;
    double clm2 = multiletter_rate(w, m, 2, InputDist(q2), Which::lm).bits();
    o.check(near(clm2, 0.616, 2e-3), fmt("C_lm^(2) %.5f (0.616)", clm2));
    auto [we, me] = product_extension(w, m, 2);
    InputSearch local = optimize_input([&](const Vec& x) { return lm(InputDist(x, 1e-9), we, me).value / 2.0; }, 9, 30, std::nullopt, 1);
    o.info(fmt("multi-start optimum %.5f", to_bits(local.value)));

    Dmc cw(cnv_w());
    Metric cm(cnv_q(0.5));
    double best = to_bits(best_binary_lm(cw, cm, 1e-3));
    o.check(best >= 0.19746 - 2e-3 && best <= 0.19751 + 2e-3, fmt("grid LM max %.5f", best));
    auto [w2, m2] = product_extension(cw, cm, 2);
    double sc2 = to_bits(sc_rate(w2, m2, cnv_two_letter_input(0.749)).total / 2.0);
    o.check(sc2 >= 0.19908 - 2e-3, fmt("SC^(2) at Q0=0.749: %.5f", sc2));
    o.check(sc2 > best, "SC^(2) exceeds the LM maximum");
}

void c6(Outcome& o) {
    Mat W(4, 4), Q(4, 4);
    W << .99, .01, 0, 0, .01, .99, 0, 0, .1, .1, .7, .1, .1, .1, .1, .7;
    Q << 1, .5, 0, 0, .5, 1, 0, 0, .05, .15, 1, .05, .15, .05, .5, 1;
    Dmc w(W);
    Metric m(Q);
    Vec qu(2);
    Mat qx(2, 4);
    qu << .698, .302;
    qx << .5, .5, 0, 0, 0, 0, .528, .472;
    ScInput s1 = ScInput::from_parts(qu, qx);
    qu << .83, .17;
    qx << .435, .45, .115, 0, 0, 0, 0, 1;
    ScInput s2 = ScInput::from_parts(qu, qx);
    double rsc1 = to_bits(rsc_rate(w, m, s1).total), sc1 = to_bits(sc_rate(w, m, s1).total);
    double rsc2 = to_bits(rsc_rate(w, m, s2).total), sc2 = to_bits(sc_rate(w, m, s2).total);
    o.check(near(rsc1, 1.313, 3e-3) && near(sc1, 1.060, 3e-3), fmt("Q1 RSC %.4f SC %.4f", rsc1, sc1));
    o.check(near(rsc2, 1.236, 3e-3) && near(sc2, 1.236, 3e-3), fmt("Q2 RSC %.4f SC %.4f", rsc2, sc2));
    double clm = lm(InputDist{.403, .418, 0, .179}, w, m).bits(), cg = gmi(InputDist{.330, .331, .155, .184}, w, m).bits();
    o.check(near(clm, 1.111, 2e-3) && near(cg, 0.954, 2e-3), fmt("C_lm %.4f C_gmi %.4f", clm, cg));
}

void c7(Outcome& o) {
    Vec qu(2);
    Mat qx(2, 3);
    qu << .645, .355;
    qx << .3, .7, 0, 0, 0, 1;
    double r = to_bits(sc_rate(Dmc(example_w()), Metric(example_q()), ScInput::from_parts(qu, qx)).total);
    o.check(near(r, 0.695, 3e-3), fmt("SC %.5f (0.695)", r));
}

void c8(Outcome& o) {
    const double d1 = 0.11, d2 = 0.2;
    MacProblem p = parallel_bsc_mac(d1, d2);
    MacSumCheck c = mac_sum_condition(p, to_nats(1.0 - h2_bits(d1)), to_nats(1.0 - h2_bits(d2)));
    o.check(c.margin >= -1e-4, fmt("corner sum-condition margin %.2e", c.margin));
    double r1 = mac_single_bound(p, 1).bits(), r2 = mac_single_bound(p, 2).bits();
    o.check(near(r1, 1.0 - h2_bits(d1), 1e-4) && near(r2, 1.0 - h2_bits(d2), 1e-4), fmt("single bounds %.5f %.5f", r1, r2));
    double wk = mac_weakened_sum_bound(p).bits(), want = 2.0 * (1.0 - h2_bits(0.5 * (d1 + d2)));
    o.check(near(wk, want, 2e-3), fmt("weakened sum %.5f vs %.5f", wk, want));

    Mat W(4, 3), Q(4, 3);
    const double e0 = 0.25, e1 = 0.01, dl = 0.1;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int y = 0; y < 3; ++y) {
                double e = b ? e1 : e0;
                W(2 * a + b, y) = y == a + b ? 1.0 - 2.0 * e : e;
                Q(2 * a + b, y) = y == a + b ? 1.0 - 2.0 * dl : dl;
            }
    MacBoundary bd = mac_region_boundary(MacProblem(2, 2, Dmc(W), Metric(Q), InputDist{.5, .5}, InputDist{.5, .5}), 24);
    double below = -kInf, above = -kInf;
    for (std::size_t k = 0; k < bd.constrained.size(); ++k) {
        double rc = std::hypot(bd.constrained[k].r1, bd.constrained[k].r2);
        double rw = std::hypot(bd.weakened[k].r1, bd.weakened[k].r2);
        below = std::max(below, to_bits(rw - rc));
        above = std::max(above, to_bits(rc - rw));
    }
    o.check(below >= 1e-3, fmt("largest gap of constrained boundary below weakened pentagon %.2e bits", below));
    o.info(fmt("largest excess above it %.2e bits", above));
}

void c9(Outcome& o) {
    double d0 = .01, d1 = .05, d2 = .25, d = .1;
    Mat W(3, 3), Q(3, 3);
    W << 1 - 2 * d0, d0, d0, d1, 1 - 2 * d1, d1, d2, d2, 1 - 2 * d2;
    Q << 1 - 2 * d, d, d, d, 1 - 2 * d, d, d, d, 1 - 2 * d;
    Dmc w(W);
    Metric m(Q);
    InputDist q{0.1, 0.3, 0.6};
    double zi = to_bits(exponent_zero_crossing([&](double R) { return er_iid(q, w, m, R).value; }, 0, 1, 1e-9, 1e-6));
    double zc = to_bits(exponent_zero_crossing([&](double R) { return er_cc(q, w, m, R).value; }, 0, 1, 1e-9, 1e-6));
    o.check(near(zi, 0.387, 3e-3), fmt("iid zero crossing %.5f", zi));
    o.check(near(zc, 0.449, 3e-3), fmt("cc zero crossing %.5f", zc));
    double worst = kInf;
    for (int k = 0; k <= 30; ++k) {
        double R = 0.01 * k;
        worst = std::min(worst, er_cc(q, w, m, R).value - er_iid(q, w, m, R).value);
    }
    o.check(worst >= -1e-9, fmt("min er_cc - er_iid %.2e", worst));
    double xc = eex_cc(q, w, m, 0.0).value, xi = eex_iid(q, w, m, 0.0).value;
    o.check(near(xc, xi, 1e-4), fmt("eex at 0: cc %.6f iid %.6f", xc, xi));
    double ex = eex_cc(q, w, m, 0.01).value, er = er_cc(q, w, m, 0.01).value;
    o.check(ex > er, fmt("at R=0.01: eex_cc %.6f er_cc %.6f", ex, er));
}

void c10(Outcome& o) {
    Dmc w(cnv_w());
    ConverseResult r = single_letter_upper_bound(w, Metric(cnv_q(0.5)));
    double c = to_bits(blahut_arimoto_capacity(w.w).capacity);
    o.check(near(to_bits(r.value), 0.61823, 5e-4), fmt("R %.6f", to_bits(r.value)));
    o.check(near(c, 0.71329, 1e-4), fmt("C %.6f", c));
    Metric mod(cnv_q(1.0));
    double rm = to_bits(single_letter_upper_bound(w, mod).value), lmm = to_bits(best_binary_lm(w, mod, 1e-3));
    o.check(near(lmm, 0.61823, 1e-3) && near(rm, 0.61823, 1e-3), fmt("modified: LM %.6f R %.6f", lmm, rm));

    Mat W2(3, 4);
    W2 << .25, 0, .05, .7, .3, .55, 0, .15, .05, .5, .45, 0;
    Dmc w2(W2);
    Metric e = erasures_only_metric(w2);
    double r2 = to_bits(single_letter_upper_bound(w2, e).value), c2 = to_bits(blahut_arimoto_capacity(W2).capacity);
    o.check(near(r2, 0.62318, 5e-4), fmt("ternary R %.6f", r2));
    o.check(near(c2, 0.78537, 1e-4), fmt("ternary C %.6f", c2));
    InputSearch s = optimize_input([&](const Vec& x) { return lm(InputDist(x), w2, e).value; }, 3, 8, 0.01);
    o.check(near(to_bits(s.value), 0.42922, 2e-3), fmt("ternary optimized LM %.6f (0.42922)", to_bits(s.value)));

    checks::Gen g(110);
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
        Dmc wb(g.stochastic(2, 2));
        Metric mb(g.stochastic(2, 2));
        worst = std::max(worst, std::abs(single_letter_upper_bound(wb, mb).value - binary_mismatch_capacity(wb, mb)));
    }
    o.check(worst <= 1e-6, fmt("2x2 instances vs binary formula: max deviation %.2e nats", worst));
    MultiletterCheck k2 = multiletter_bound_check(w, Metric(cnv_q(0.5)), 2);
    o.check(to_bits(std::abs(k2.difference)) <= 2e-3, fmt("k=2 difference %.2e bits", to_bits(std::abs(k2.difference))));
}

void c11(Outcome& o) {
    Vec pi(2), qh(2);
    pi << 2.0 / 3, 1.0 / 3;
    qh << 0.8, 0.2;
    Mat d(2, 2);
    d << 0, 1, 1, 0;
    const double want = h2_bits(1.0 / 3) - h2_bits(2.0 / 9);
    double ri = rd_iid_rate(pi, d, qh, 2.0 / 9).bits(), rc = rd_cc_rate(pi, d, qh, 2.0 / 9).bits();
    o.check(near(ri, want, 2e-3) && near(rc, want, 2e-3), fmt("iid %.5f cc %.5f target %.5f", ri, rc, want));
    double floor = rd_coupling_floor(pi, d, qh);
    o.check(rd_cc_rate(pi, d, qh, floor - 0.01).infinite, fmt("cc infinite below floor %.5f", floor));

    Vec p3 = Vec::Constant(3, 1.0 / 3);
    Mat d0(3, 3), d1(3, 3);
    d0 << 0, 1, 1, 1, 0, 1, 1, 1, 0;
    d1 << 0, 1, 1, 1, 0, 1, 0, 0, 0;
    const double R = 0.3;
    auto root = [](const std::function<double(double)>& f, double lo, double hi) {
        auto [a, b] = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(50));
        return 0.5 * (a + b);
    };
    double dl = root([&](double x) { Vec v(3); v << 1 - 2 * x, x, x; return std::log(3.0) - entropy(v) - R; }, 1e-12, 1.0 / 3);
    double got = mismatched_distortion(RdProblem(InputDist(p3), d0, d1, InputDist(p3)), R).value;
    o.check(near(got, (4.0 / 3) * dl, 1e-3), fmt("uniform reproduction %.5f formula %.5f", got, (4.0 / 3) * dl));
    Vec half(3);
    half << 0.5, 0.5, 0.0;
    double dh = root([&](double x) { return (2.0 / 3) * (std::log(2.0) - binary_entropy(x)) - R; }, 1e-12, 0.5);
    double goth = mismatched_distortion(RdProblem(InputDist(p3), d0, d1, InputDist(half)), R).value;
    o.check(near(goth, (2.0 / 3) * dh, 1e-3), fmt("two-letter reproduction %.5f formula %.5f", goth, (2.0 / 3) * dh));
    double same = mismatched_distortion(RdProblem(InputDist(p3), d0, d0, InputDist(p3)), R).value;
    double inv = root([&](double D) { return matched_rd(p3, d0, D) - R; }, 1e-9, 2.0 / 3 - 1e-9);
    o.check(near(same, inv, 1e-3), fmt("d0=d1: %.5f matched inversion %.5f", same, inv));
}

void c12(Outcome& o) {
    GaussParams p;
    p.gamma = 1.0;
    p.sigma2 = 1.0;
    p.alpha = 1.0;
    double g1 = gmi_signal_level(p).value, l1 = lm_signal_level(p);
    o.check(near(g1, l1, 1e-9) && near(g1, awgn_capacity(1.0, 1.0), 1e-9), fmt("alpha=1 gmi %.8f lm %.8f", g1, l1));
    p.alpha = 5.0;
    double g5 = gmi_signal_level(p).value, l5 = lm_signal_level(p);
    p.alpha = 50.0;
    double g50 = gmi_signal_level(p).value, l50 = lm_signal_level(p);
    o.check(g5 < l5 && g50 < g5 && l50 > l5 && g50 > 0.5 * std::log(2.0) - 1e-3,
            fmt("alpha=5 gmi %.4f < lm %.4f; alpha=50 gmi %.4f", g5, l5, g50));
    p.alpha = 1.0;
    p.mu = 0.0;
    double gz = gmi_nn_noise(p).value, lz = lm_fixed_cost_noise(p).value;
    o.check(near(gz, lz, 1e-8), fmt("mu=0 gmi %.8f lm %.8f", gz, lz));
    p.mu = 1.0;
    GaussRate gn = gmi_nn_noise(p);
    auto ln = lm_fixed_cost_noise(p);
    o.check(near(gn.value, 0.5 * std::log(1.5), 1e-8) && near(ln.value, 0.5 * std::log(2.0), 1e-8),
            fmt("mu=1 gmi %.8f lm %.8f", gn.value, ln.value));
    o.check(near(gn.s, gn.s_numeric, 1e-6) && near(ln.s, ln.s_numeric, 1e-6) && near(ln.r, ln.r_numeric, 1e-6),
            fmt("optimizers s %.2e s %.2e r %.2e", std::abs(gn.s - gn.s_numeric), std::abs(ln.s - ln.s_numeric),
                std::abs(ln.r - ln.r_numeric)));
    GaussParams f;
    f.gamma = 1.0;
    f.sigma2 = 1.0;
    f.alpha = 1.0;
    f.fading = {{1.0, 1.0, 1.0}};
    FadingRate fr = gmi_fading(f);
    o.check(near(fr.value, std::log(1.5), 1e-8) && near(fr.s[0], fr.s_numeric[0], 1e-6), fmt("fading %.8f", fr.value));
    f.gamma = 1e9;
    double lim = gmi_fading(f).value;
    o.check(near(lim, std::log(2.0), 1e-6), fmt("large-SNR fading %.8f", lim));
}

void c13(Outcome& o) {
    auto add = [&](const char* name, const checks::Tally& t) {
        o.check(t.ok(), std::string(name) + fmt(" %g/%g", t.cases - t.failures, t.cases));
    };
    add("transform", checks::transform_invariance(100, 131));
    checks::PositivityTally pos = checks::positivity_equivalence(100, 132);
    add("positivity", pos.t);
    add("ordering", checks::rate_ordering(200, 133));
    add("symmetry", checks::symmetry_collapse(50, 134));
    add("superposition", checks::superposition_chain(10, 135));
    add("sandwich", checks::converse_sandwich(20, 136));
    add("gradients", checks::gradient_checks(30, 137));
}

struct Criterion {
    int id;
    const char* name;
    void (*run)(Outcome&);
};

}  // namespace

int main() {
    const std::vector<Criterion> all{
        {1, "single-user GMI/LM example", c1},   {2, "binary lambda sweep", c2},
        {3, "parallel BSC closed form", c3},     {4, "primal-dual and grid agreement", c4},
        {5, "multi-letter and 2-letter SC", c5}, {6, "superposition table", c6},
        {7, "superposition example", c7},        {8, "MAC", c8},
        {9, "error exponents", c9},              {10, "single-letter converse", c10},
        {11, "rate-distortion", c11},            {12, "Gaussian closed forms", c12},
        {13, "property suites", c13},
    };
    int failed = 0;
    for (const auto& c : all) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2d %-32s %6.1fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.str().c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
