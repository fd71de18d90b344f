#pragma once

#include "iproj.hpp"
#include "logpart.hpp"
#include "problems.hpp"
#include "su_rates.hpp"

namespace mismatch {

namespace detail {

struct MacReduced {
    std::vector<int> s1, s2, ys;
    Vec q1, q2;
    std::vector<double> p, lq;  // indexed [a][b][y] over the reduced alphabets
    bool blind = false;

    int n1() const { return static_cast<int>(s1.size()); }
    int n2() const { return static_cast<int>(s2.size()); }
    int ny() const { return static_cast<int>(ys.size()); }
    std::size_t at(int a, int b, int y) const { return (static_cast<std::size_t>(a) * n2() + b) * ny() + y; }
    bool ok(int a, int b, int y) const { return std::isfinite(lq[at(a, b, y)]); }
    double py(int y) const {
        double s = 0.0;
        for (int a = 0; a < n1(); ++a)
            for (int b = 0; b < n2(); ++b) s += p[at(a, b, y)];
        return s;
    }
    double mean_logq() const {
        double e = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k)
            if (p[k] > 0.0) e += p[k] * lq[k];
        return e;
    }
};

inline MacReduced mac_reduce(const MacProblem& pr) {
    MacReduced r;
    for (int a = 0; a < pr.n1; ++a)
        if (pr.q1.p(a) > 0.0) r.s1.push_back(a);
    for (int b = 0; b < pr.n2; ++b)
        if (pr.q2.p(b) > 0.0) r.s2.push_back(b);
    for (int y = 0; y < pr.ny(); ++y) {
        double s = 0.0;
        for (int a : r.s1)
            for (int b : r.s2) s += pr.p(a, b, y);
        if (s > 0.0) r.ys.push_back(y);
    }
    r.q1.resize(r.n1());
    r.q2.resize(r.n2());
    for (int a = 0; a < r.n1(); ++a) r.q1(a) = pr.q1.p(r.s1[a]);
    for (int b = 0; b < r.n2(); ++b) r.q2(b) = pr.q2.p(r.s2[b]);
    r.p.assign(static_cast<std::size_t>(r.n1()) * r.n2() * r.ny(), 0.0);
    r.lq.assign(r.p.size(), -kInf);
    for (int a = 0; a < r.n1(); ++a)
        for (int b = 0; b < r.n2(); ++b)
            for (int y = 0; y < r.ny(); ++y) {
                int row = pr.row(r.s1[a], r.s2[b]);
                std::size_t k = r.at(a, b, y);
                r.p[k] = pr.p(r.s1[a], r.s2[b], r.ys[y]);
                r.lq[k] = pr.q.logq(row, r.ys[y]);
                if (r.p[k] > 0.0 && !std::isfinite(r.lq[k])) r.blind = true;
            }
    return r;
}

}  // namespace detail

// Dual of the user-1 condition over t = (s, a1).
inline NestedDual mac_single_dual_objective(const detail::MacReduced& r) {
    const int dim = 1 + r.n1();
    NestedDual d(dim);
    for (int b = 0; b < r.n2(); ++b)
        for (int y = 0; y < r.ny(); ++y) {
            double pby = 0.0, mx = -kInf;
            for (int a = 0; a < r.n1(); ++a) {
                pby += r.p[r.at(a, b, y)];
                if (r.ok(a, b, y)) mx = std::max(mx, r.lq[r.at(a, b, y)]);
            }
            if (pby <= 0.0) continue;
            auto feat = [&](int a) {
                Vec f = Vec::Zero(dim);
                f(0) = r.lq[r.at(a, b, y)] - mx;
                f(1 + a) = 1.0;
                return f;
            };
            Vec c = Vec::Zero(dim);
            for (int a = 0; a < r.n1(); ++a)
                if (r.p[r.at(a, b, y)] > 0.0) c += (r.p[r.at(a, b, y)] / pby) * feat(a);
            DualGroup& g = d.add_group(pby, c);
            OuterTerm t;
            for (int a = 0; a < r.n1(); ++a)
                if (r.ok(a, b, y)) t.inner.push_back({std::log(r.q1(a)), feat(a)});
            g.terms.push_back(std::move(t));
        }
    return d;
}

namespace detail {

inline std::pair<RateResult, RateResult> mac_single_impl(const MacProblem& pr, int user) {
    if (user != 1 && user != 2) throw Error(ErrorKind::domain, "mac_single_bound: user must be 1 or 2");
    MacProblem p = user == 1 ? pr : pr.swapped();
    MacReduced r = mac_reduce(p);
    if (r.blind) return {zero_rate(Form::dual), zero_rate(Form::primal)};
    NestedDual d = mac_single_dual_objective(r);
    AscentResult a = ascend_concave(d.fn(), one_hot(d.dim(), {{0, 1.0}}), nonneg_box(d.dim(), {0}));

    JointDist base({r.n1(), r.n2(), r.ny()});
    std::vector<double> pby(static_cast<std::size_t>(r.n2()) * r.ny(), 0.0);
    for (int a1 = 0; a1 < r.n1(); ++a1)
        for (int b = 0; b < r.n2(); ++b)
            for (int y = 0; y < r.ny(); ++y) pby[b * r.ny() + y] += r.p[r.at(a1, b, y)];
    for (int a1 = 0; a1 < r.n1(); ++a1)
        for (int b = 0; b < r.n2(); ++b)
            for (int y = 0; y < r.ny(); ++y) base.p[r.at(a1, b, y)] = r.q1(a1) * pby[b * r.ny() + y];
    std::vector<MarginalConstraint> cons{{{0}, std::vector<double>(r.q1.data(), r.q1.data() + r.n1())}, {{1, 2}, pby}};
    IProjResult ip = i_projection(base, r.lq, r.mean_logq(), cons);

    RateResult dual;
    dual.form = Form::dual;
    dual.value = std::max(0.0, a.value);
    dual.gap = std::abs(a.value - ip.value);
    dual.report = a.report;
    DualParams dp;
    dp.s = a.x(0);
    dp.a = expand(a.x.tail(r.n1()), r.s1, p.n1);
    dual.certificate.dual = dp;
    dual.certificate.joint = ip.p;

    RateResult primal = dual;
    primal.form = Form::primal;
    primal.value = std::max(0.0, ip.value);
    primal.report = ip.report;
    primal.certificate.dual->s = ip.s;
    return {dual, primal};
}

}  // namespace detail

// Bound on R_user; both forms are solved and the gap between them reported.
inline RateResult mac_single_bound(const MacProblem& pr, int user) { return detail::mac_single_impl(pr, user).first; }

inline RateResult mac_single_bound_primal(const MacProblem& pr, int user) {
    return detail::mac_single_impl(pr, user).second;
}

// Objective of the first split condition at fixed rho2 over t = (s, a1, a2), without the -rho2 R2 term.
inline NestedDual mac_sum_dual_objective(const detail::MacReduced& r, double rho) {
    const int n1 = r.n1(), n2 = r.n2();
    const int dim = 1 + n1 + n2;
    NestedDual d(dim);
    for (int y = 0; y < r.ny(); ++y) {
        double mx = -kInf, py = r.py(y);
        if (py <= 0.0) continue;
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n2; ++b)
                if (r.ok(a, b, y)) mx = std::max(mx, r.lq[r.at(a, b, y)]);
        Vec c = Vec::Zero(dim);
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n2; ++b) {
                double pk = r.p[r.at(a, b, y)];
                if (pk <= 0.0) continue;
                double wgt = pk / py;
                c(0) += wgt * rho * (r.lq[r.at(a, b, y)] - mx);
                c(1 + a) += wgt;
                c(1 + n1 + b) += wgt * rho;
            }
        DualGroup& g = d.add_group(py, c);
        for (int a = 0; a < n1; ++a) {
            OuterTerm t;
            t.logb = std::log(r.q1(a));
            t.alpha = Vec::Zero(dim);
            t.alpha(1 + a) = 1.0;
            t.rho = rho;
            for (int b = 0; b < n2; ++b) {
                if (!r.ok(a, b, y)) continue;
                Vec f = Vec::Zero(dim);
                f(0) = r.lq[r.at(a, b, y)] - mx;
                f(1 + n1 + b) = 1.0;
                t.inner.push_back({std::log(r.q2(b)), f});
            }
            if (!t.inner.empty()) g.terms.push_back(std::move(t));
        }
    }
    return d;
}

struct MacSumDual {
    double value = 0.0;  // sup over rho of G(rho) - rho * R_other
    double rho = 1.0;
    double g_at_rho = 0.0;
};

inline double mac_sum_g(const detail::MacReduced& r, double rho, Vec* warm = nullptr) {
    if (rho <= 0.0) return 0.0;
    NestedDual d = mac_sum_dual_objective(r, rho);
    Vec t0 = (warm && warm->size() == d.dim()) ? *warm : one_hot(d.dim(), {{0, 1.0}});
    AscentResult a = ascend_concave(d.fn(), t0, nonneg_box(d.dim(), {0}));
    if (warm) *warm = a.x;
    return a.value;
}

// sup over rho in [0,1] of G(rho) - rho * r_other: 33-point grid, then Brent around the best point.
inline MacSumDual mac_sum_dual(const detail::MacReduced& r, double r_other, int grid = 33) {
    MacSumDual best{0.0, 0.0, 0.0};
    Vec warm;
    std::vector<double> vals(grid);
    int ib = 0;
    for (int k = 0; k < grid; ++k) {
        double rho = static_cast<double>(k) / (grid - 1);
        double g = mac_sum_g(r, rho, &warm);
        vals[k] = g - rho * r_other;
        if (vals[k] > vals[ib]) ib = k;
    }
    double lo = static_cast<double>(std::max(0, ib - 1)) / (grid - 1);
    double hi = static_cast<double>(std::min(grid - 1, ib + 1)) / (grid - 1);
    best = {vals[ib], static_cast<double>(ib) / (grid - 1), vals[ib] + r_other * ib / (grid - 1)};
    if (hi > lo) {
        Vec w2 = warm;
        Optimum1d o = maximize_on_interval([&](double rho) { return mac_sum_g(r, rho, &w2) - rho * r_other; }, lo, hi, 1e-9);
        if (o.value > best.value) best = {o.value, o.x, o.value + o.x * r_other};
    }
    return best;
}

struct MacSumCheck {
    bool holds = false;
    double margin = 0.0;
    double margin1 = 0.0, margin2 = 0.0;
    double rho1 = 0.0, rho2 = 0.0;
};

inline MacSumCheck mac_sum_condition(const MacProblem& pr, double R1, double R2) {
    if (R1 < 0.0 || R2 < 0.0) throw Error(ErrorKind::domain, "mac_sum_condition: rates must be nonnegative");
    detail::MacReduced r1 = detail::mac_reduce(pr);
    detail::MacReduced r2 = detail::mac_reduce(pr.swapped());
    MacSumCheck c;
    if (r1.blind) {
        c.margin = -(R1 + R2);
        c.holds = R1 + R2 <= 0.0;
        return c;
    }
    MacSumDual d1 = mac_sum_dual(r1, R2);
    MacSumDual d2 = mac_sum_dual(r2, R1);
    c.margin1 = d1.value - R1;
    c.margin2 = d2.value - R2;
    c.rho2 = d1.rho;
    c.rho1 = d2.rho;
    c.margin = std::max(c.margin1, c.margin2);
    c.holds = c.margin >= 0.0;
    return c;
}

// Sum-rate bound with the two mutual-information constraints removed.
inline RateResult mac_weakened_sum_bound(const MacProblem& pr) {
    detail::MacReduced r = detail::mac_reduce(pr);
    if (r.blind) return detail::zero_rate(Form::primal);
    JointDist base({r.n1(), r.n2(), r.ny()});
    std::vector<double> py(r.ny());
    for (int y = 0; y < r.ny(); ++y) py[y] = r.py(y);
    for (int a = 0; a < r.n1(); ++a)
        for (int b = 0; b < r.n2(); ++b)
            for (int y = 0; y < r.ny(); ++y) base.p[r.at(a, b, y)] = r.q1(a) * r.q2(b) * py[y];
    std::vector<MarginalConstraint> cons{{{0}, std::vector<double>(r.q1.data(), r.q1.data() + r.n1())},
                                         {{1}, std::vector<double>(r.q2.data(), r.q2.data() + r.n2())},
                                         {{2}, py}};
    IProjResult ip = i_projection(base, r.lq, r.mean_logq(), cons);
    RateResult res;
    res.form = Form::primal;
    res.value = std::max(0.0, ip.value);
    res.report = ip.report;
    res.certificate.joint = ip.p;
    DualParams dp;
    dp.s = ip.s;
    res.certificate.dual = dp;
    double g1 = mac_sum_g(r, 1.0);
    res.gap = std::abs(g1 - ip.value);
    return res;
}

struct RatePair {
    double r1, r2;
};

struct MacBoundary {
    std::vector<RatePair> constrained;
    std::vector<RatePair> weakened;
    double i1 = 0.0, i2 = 0.0, weakened_sum = 0.0;
};

inline bool mac_contains(const MacProblem& pr, double i1, double i2, double R1, double R2) {
    if (R1 > i1 || R2 > i2) return false;
    return mac_sum_condition(pr, R1, R2).holds;
}

// Ray-wise boundary of the region and of its weakened pentagon, angles spanning [0, pi/2].
inline MacBoundary mac_region_boundary(const MacProblem& pr, int n_angles, double tol = 1e-7) {
    if (n_angles < 8) throw Error(ErrorKind::domain, "mac_region_boundary: n_angles must be at least 8");
    MacBoundary out;
    out.i1 = mac_single_bound(pr, 1).value;
    out.i2 = mac_single_bound(pr, 2).value;
    out.weakened_sum = mac_weakened_sum_bound(pr).value;
    const double half_pi = std::acos(0.0);
    for (int k = 0; k < n_angles; ++k) {
        double th = half_pi * k / (n_angles - 1);
        double c = std::max(std::cos(th), 0.0), s = std::max(std::sin(th), 0.0);
        if (k == n_angles - 1) c = 0.0;
        double tmax = kInf;
        if (c > 0.0) tmax = std::min(tmax, out.i1 / c);
        if (s > 0.0) tmax = std::min(tmax, out.i2 / s);
        double tw = std::min(tmax, out.weakened_sum / (c + s));
        out.weakened.push_back({tw * c, tw * s});
        double lo = 0.0, hi = tmax;
        if (mac_contains(pr, out.i1, out.i2, hi * c, hi * s))
            lo = hi;
        else
            while (hi - lo > tol) {
                double mid = 0.5 * (lo + hi);
                if (mac_contains(pr, out.i1, out.i2, mid * c, mid * s))
                    lo = mid;
                else
                    hi = mid;
            }
        out.constrained.push_back({lo * c, lo * s});
    }
    return out;
}

// Time-sharing post-processing: upper concave hull of sampled boundary points (plus the origin axes).
inline std::vector<RatePair> time_sharing_hull(std::vector<RatePair> pts) {
    std::sort(pts.begin(), pts.end(), [](const RatePair& a, const RatePair& b) { return a.r1 < b.r1 || (a.r1 == b.r1 && a.r2 > b.r2); });
    std::vector<RatePair> h;
    for (const auto& p : pts) {
        while (h.size() >= 2) {
            const RatePair& a = h[h.size() - 2];
            const RatePair& b = h.back();
            double cross = (b.r1 - a.r1) * (p.r2 - a.r2) - (b.r2 - a.r2) * (p.r1 - a.r1);
            if (cross >= 0.0)
                h.pop_back();
            else
                break;
        }
        h.push_back(p);
    }
    return h;
}

}  // namespace mismatch
