#pragma once

// Randomized property checks shared by the doctest suite and the acceptance runner.

#include "mismatch/mismatch.hpp"

#include <random>

namespace checks {

using namespace mismatch;

struct Instance {
    Dmc w;
    Metric m;
    InputDist q;
};

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng_); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

    // Random point of the simplex; each entry is zeroed with probability p0 (at least one survives).
    Vec simplex(int n, double p0 = 0.0) {
        Vec v(n);
        std::exponential_distribution<double> e(1.0);
        for (int i = 0; i < n; ++i) v(i) = uniform() < p0 ? 0.0 : e(rng_);
        if (v.sum() == 0.0) v(integer(0, n - 1)) = 1.0;
        return v / v.sum();
    }

    Mat stochastic(int r, int c, double p0 = 0.0) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i) m.row(i) = simplex(c, p0).transpose();
        return m;
    }

    Instance instance(int max_x = 5, int max_y = 5, double zero_w = 0.2, double zero_q = 0.1, double zero_in = 0.1) {
        int nx = integer(2, max_x), ny = integer(2, max_y);
        Mat q(nx, ny);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) q(i, j) = uniform() < zero_q ? 0.0 : std::exp(uniform(-2.0, 2.0));
        for (int i = 0; i < nx; ++i)
            if (q.row(i).maxCoeff() == 0.0) q(i, integer(0, ny - 1)) = 1.0;
        return {Dmc(stochastic(nx, ny, zero_w)), Metric(q), InputDist(simplex(nx, zero_in))};
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

// 2x2 instance with every probability in [lo, 1 - lo]; suits oracles whose resolution is a fixed grid.
inline Instance interior_2x2(Gen& g, double lo = 0.05) {
    Mat w(2, 2), q(2, 2);
    for (int x = 0; x < 2; ++x) {
        double a = g.uniform(lo, 1.0 - lo);
        w.row(x) << a, 1.0 - a;
        q.row(x) << g.uniform(lo, 1.0), g.uniform(lo, 1.0);
    }
    double q0 = g.uniform(0.2, 0.8);
    return {Dmc(w), Metric(q), InputDist{q0, 1.0 - q0}};
}

struct Tally {
    int cases = 0;
    int failures = 0;
    double worst = 0.0;

    void add(double err, double tol) {
        ++cases;
        worst = std::max(worst, err);
        if (!(err <= tol)) ++failures;
    }
    bool ok() const { return failures == 0 && cases > 0; }
};

// |primal - dual| in nats for GMI and LM.
inline Tally primal_dual(int n, std::uint64_t seed, double tol = 1e-5) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        Instance in = g.instance();
        t.add(std::abs(gmi_primal(in.q, in.w, in.m).value - gmi_dual(in.q, in.w, in.m).value), tol);
        t.add(std::abs(lm_primal(in.q, in.w, in.m).value - lm_dual(in.q, in.w, in.m).value), tol);
    }
    return t;
}

// GMI is unchanged by q -> q^s e^{b(y)}; the LM rate additionally by e^{a(x)}.
inline Tally transform_invariance(int n, std::uint64_t seed, double tol = 1e-6) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        Instance in = g.instance(4, 4);
        double s = g.uniform(0.2, 5.0);
        Vec a(in.w.nx()), b(in.w.ny());
        for (int k = 0; k < a.size(); ++k) a(k) = g.uniform(-3.0, 3.0);
        for (int k = 0; k < b.size(); ++k) b(k) = g.uniform(-3.0, 3.0);
        Metric mb = transform_metric(in.m, s, nullptr, &b), mab = transform_metric(in.m, s, &a, &b);
        t.add(std::abs(gmi(in.q, in.w, mb).value - gmi(in.q, in.w, in.m).value), tol);
        t.add(std::abs(lm(in.q, in.w, mab).value - lm(in.q, in.w, in.m).value), tol);
    }
    return t;
}

// Unshortcut LM dual value; used to test the positivity condition independently of the early exit.
inline double raw_lm(const InputDist& q, const Dmc& w, const Metric& m) {
    Reduced r = reduce(q, w, m);
    if (r.metric_blind) return 0.0;
    NestedDual d = lm_dual_objective(r);
    Vec t0 = Vec::Zero(d.dim());
    t0(0) = 1.0;
    return std::max(0.0, ascend_concave(d.fn(), t0, nonneg_box(d.dim(), {0})).value);
}

struct PositivityTally {
    Tally t;
    int positive = 0, zero = 0;
    bool ok() const { return t.ok() && positive > 0 && zero > 0; }
};

// positivity_check(Q) holds iff the LM rate is strictly positive.
inline PositivityTally positivity_equivalence(int n, std::uint64_t seed) {
    Gen g(seed);
    PositivityTally out;
    for (int i = 0; i < n; ++i) {
        Instance in = g.instance(4, 4, 0.2, 0.1, 0.0);
        if (i % 2) {
            // anti-aligned metric: reward the least likely outputs
            Mat q = in.w.w;
            for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = std::exp(-4.0 * q.data()[k] + g.uniform(0.0, 0.3));
            in.m = Metric(q);
        }
        bool pos = positivity_check(in.q, in.w, in.m);
        double v = raw_lm(in.q, in.w, in.m);
        pos ? ++out.positive : ++out.zero;
        out.t.add((pos == (v > 1e-9)) ? 0.0 : v, 1e-7);
    }
    return out;
}

// 0 <= GMI <= LM <= I(X;Y).
inline Tally rate_ordering(int n, std::uint64_t seed, double tol = 1e-7) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        Instance in = g.instance();
        double a = gmi(in.q, in.w, in.m).value, b = lm(in.q, in.w, in.m).value, c = mutual_information(in.q, in.w);
        t.add(std::max({-a, a - b, b - c, 0.0}), tol);
    }
    return t;
}

// Circulant channel and metric: symmetry is detected and GMI = LM at the uniform input.
inline Tally symmetry_collapse(int n, std::uint64_t seed, double tol = 1e-6) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        int k = g.integer(2, 5);
        Vec wr = g.simplex(k), qr(k);
        for (int j = 0; j < k; ++j) qr(j) = std::exp(g.uniform(-2.0, 2.0));
        Mat w(k, k), q(k, k);
        for (int x = 0; x < k; ++x)
            for (int y = 0; y < k; ++y) {
                w(x, y) = wr((y - x + k) % k);
                q(x, y) = qr((y - x + k) % k);
            }
        Dmc dw(w);
        Metric dm(q);
        InputDist u(Vec::Constant(k, 1.0 / k));
        bool sym = detect_output_symmetry(dw, dm).has_value();
        t.add(sym ? std::abs(gmi(u, dw, dm).value - lm(u, dw, dm).value) : 1.0, tol);
    }
    return t;
}

// RSC >= SC >= the superposition reduction of expurgated parallel coding (both orders).
inline Tally superposition_chain(int n, std::uint64_t seed, double tol = 1e-6) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        int nx = g.integer(2, 4), ny = g.integer(2, 4);
        Dmc w(g.stochastic(nx, ny, 0.1));
        Mat q(nx, ny);
        for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = std::exp(g.uniform(-2.0, 2.0));
        Metric m(q);
        ScInput sc(Mat(g.stochastic(1, 2 * nx).reshaped(2, nx)));
        double s = sc_rate(w, m, sc).total, r = rsc_rate(w, m, sc).total;
        t.add(std::max(0.0, s - r), tol);
        ExpParSpec sp;
        sp.n1 = 2;
        sp.n2 = 2;
        sp.q1 = InputDist(g.simplex(2));
        sp.q2 = InputDist(g.simplex(2));
        sp.psi = {{g.integer(0, nx - 1), g.integer(0, nx - 1)}, {g.integer(0, nx - 1), g.integer(0, nx - 1)}};
        ExpParRate e = expurgated_parallel_rate(w, m, sp);
        for (int u = 1; u <= 2; ++u) {
            double sc_u = sc_rate(w, m, exppar_sc_input(sp, nx, u)).total;
            double eu = u == 1 ? e.total_u1 : e.total_u2;
            t.add(std::max(0.0, eu - sc_u), tol);
        }
    }
    return t;
}

// max_Q LM (grid) <= single-letter bound <= matched capacity.
inline Tally converse_sandwich(int n, std::uint64_t seed, double tol = 1e-6) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        int nx = 2, ny = g.integer(2, 3);
        Dmc w(g.stochastic(nx, ny, 0.15));
        Mat q(nx, ny);
        for (Eigen::Index k = 0; k < q.size(); ++k) q.data()[k] = std::exp(g.uniform(-1.5, 1.5));
        Metric m(q);
        double ub = single_letter_upper_bound(w, m).value;
        double cap = blahut_arimoto_capacity(w.w).capacity;
        double best = 0.0;
        for (int k = 1; k < 100; ++k) best = std::max(best, lm(InputDist{k / 100.0, 1.0 - k / 100.0}, w, m).value);
        t.add(std::max({0.0, best - ub, ub - cap}), tol);
    }
    return t;
}

// Relative error of analytic gradients against central differences.
inline double fd_gradient_error(const ConcaveFn& f, const Vec& x, double h = 1e-6) {
    Vec g;
    f(x, &g, nullptr);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec a = x, b = x;
        a(i) += h;
        b(i) -= h;
        double fd = (f(a, nullptr, nullptr) - f(b, nullptr, nullptr)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - g(i)) / (1.0 + std::abs(fd)));
    }
    return worst;
}

inline double fd_hessian_error(const ConcaveFn& f, const Vec& x, double h = 1e-5) {
    Vec g;
    Mat hs;
    f(x, &g, &hs);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Vec a = x, b = x, ga, gb;
        a(i) += h;
        b(i) -= h;
        f(a, &ga, nullptr);
        f(b, &gb, nullptr);
        Vec col = (ga - gb) / (2.0 * h);
        worst = std::max(worst, (col - hs.col(i)).cwiseAbs().maxCoeff() / (1.0 + col.cwiseAbs().maxCoeff()));
    }
    return worst;
}

// LM dual objective gradient/Hessian, and the capacity gradient used by the converse solver.
inline Tally gradient_checks(int n, std::uint64_t seed, double tol = 1e-5) {
    Gen g(seed);
    Tally t;
    for (int i = 0; i < n; ++i) {
        Instance in = g.instance(4, 4, 0.1, 0.0, 0.0);
        Reduced r = reduce(in.q, in.w, in.m);
        NestedDual d = lm_dual_objective(r);
        Vec x(d.dim());
        x(0) = g.uniform(0.1, 3.0);
        for (int k = 1; k < d.dim(); ++k) x(k) = g.uniform(-1.0, 1.0);
        t.add(fd_gradient_error(d.fn(), x), tol);
        t.add(fd_hessian_error(d.fn(), x), 1e-4);

        Mat v = g.stochastic(3, 3, 0.0);
        CapacityResult c = blahut_arimoto_capacity(v, 1e-14);
        Mat grad = detail::capacity_gradient(v, c.input);
        double h = 1e-6, worst = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                Mat vp = v, vm = v;
                vp(a, b) += h;
                vm(a, b) -= h;
                double fd = (blahut_arimoto_capacity(vp, 1e-15).capacity - blahut_arimoto_capacity(vm, 1e-15).capacity) / (2.0 * h);
                worst = std::max(worst, std::abs(fd - grad(a, b)));
            }
        t.add(worst, 1e-4);
    }
    return t;
}

}  // namespace checks
