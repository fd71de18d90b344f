#pragma once

#include "su_rates.hpp"

namespace mismatch {

struct RgvSpec {
    Mat d;
    double delta = 0.0;
};

enum class Ensemble { iid, cc, ex_cc, rgv };

inline const char* ensemble_name(Ensemble e) {
    switch (e) {
        case Ensemble::iid: return "iid";
        case Ensemble::cc: return "cc";
        case Ensemble::ex_cc: return "ex_cc";
        default: return "rgv";
    }
}

struct ExponentValue {
    double value = 0.0;
    double rho = 0.0;
    Vec params;
    SolveReport report;
};

inline constexpr double kRhoCapEx = 1048576.0;  // 2^20

namespace detail {

inline ExponentValue maximize_dual(const NestedDual& d, const std::vector<int>& nonneg, Vec t0) {
    AscentResult a = ascend_concave(d.fn(), std::move(t0), nonneg_box(d.dim(), nonneg, 1e-11));
    return {a.value, 0.0, a.x, a.report};
}

inline Vec start_vec(int dim, std::initializer_list<std::pair<int, double>> e) { return one_hot(dim, e); }

}  // namespace detail

inline ExponentValue e0_iid(const InputDist& qin, const Dmc& w, const Metric& m, double rho) {
    if (rho < 0.0 || rho > 1.0) throw Error(ErrorKind::domain, "e0_iid: rho must lie in [0,1]");
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind || rho == 0.0) return {};
    Vec cmax = detail::column_max(r);
    NestedDual d(1);
    DualGroup& g = d.add_group(1.0, Vec::Zero(1));
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) {
            if (r.w(i, j) <= 0.0) continue;
            OuterTerm t;
            t.logb = std::log(r.p(i, j));
            t.alpha = Vec::Constant(1, -rho * (r.logq(i, j) - cmax(j)));
            t.rho = rho;
            for (int k = 0; k < r.nx(); ++k)
                if (r.ok(k, j)) t.inner.push_back({std::log(r.q(k)), Vec::Constant(1, r.logq(k, j) - cmax(j))});
            g.terms.push_back(std::move(t));
        }
    ExponentValue v = detail::maximize_dual(d, {0}, Vec::Constant(1, 1.0 / (1.0 + rho)));
    v.rho = rho;
    v.value = std::max(0.0, v.value);
    return v;
}

inline NestedDual e0_cc_objective(const Reduced& r, double rho, const RgvSpec* rgv = nullptr) {
    const int nx = r.nx();
    const int off = rgv ? 2 : 1;
    const int dim = off + nx;
    Vec cmax = detail::column_max(r);
    NestedDual d(dim);
    for (int i = 0; i < nx; ++i) {
        DualGroup& g = d.add_group(r.q(i), Vec::Zero(dim));
        for (int j = 0; j < r.ny(); ++j) {
            if (r.w(i, j) <= 0.0) continue;
            OuterTerm t;
            t.logb = std::log(r.w(i, j));
            t.alpha = Vec::Zero(dim);
            t.alpha(0) = -rho * (r.logq(i, j) - cmax(j));
            t.alpha(off + i) = -rho;
            t.rho = rho;
            for (int k = 0; k < nx; ++k) {
                if (!r.ok(k, j)) continue;
                Vec b = Vec::Zero(dim);
                b(0) = r.logq(k, j) - cmax(j);
                b(off + k) = 1.0;
                if (rgv) b(1) = rgv->d(r.xs[i], r.xs[k]) - rgv->delta;
                t.inner.push_back({std::log(r.q(k)), b});
            }
            g.terms.push_back(std::move(t));
        }
    }
    return d;
}

inline ExponentValue e0_cc(const InputDist& qin, const Dmc& w, const Metric& m, double rho) {
    if (rho < 0.0 || rho > 1.0) throw Error(ErrorKind::domain, "e0_cc: rho must lie in [0,1]");
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind || rho == 0.0) return {};
    NestedDual d = e0_cc_objective(r, rho);
    ExponentValue v = detail::maximize_dual(d, {0}, detail::start_vec(d.dim(), {{0, 1.0 / (1.0 + rho)}}));
    v.rho = rho;
    v.value = std::max(0.0, v.value);
    return v;
}

namespace detail {

inline ExponentValue outer_rho_unit(const std::function<ExponentValue(double)>& e0, double R) {
    ExponentValue best;
    auto f = [&](double rho) {
        ExponentValue v = e0(rho);
        double val = v.value - rho * R;
        if (val > best.value) {
            best = v;
            best.value = val;
        }
        return val;
    };
    Optimum1d o = maximize_on_interval(f, 0.0, 1.0, 1e-9);
    best.value = std::max(0.0, best.value);
    best.report.converged = true;
    (void)o;
    return best;
}

}  // namespace detail

inline ExponentValue er_iid(const InputDist& qin, const Dmc& w, const Metric& m, double R) {
    return detail::outer_rho_unit([&](double rho) { return e0_iid(qin, w, m, rho); }, R);
}

inline ExponentValue er_cc(const InputDist& qin, const Dmc& w, const Metric& m, double R) {
    return detail::outer_rho_unit([&](double rho) { return e0_cc(qin, w, m, rho); }, R);
}

inline NestedDual ex_objective(const Reduced& r, double rho, bool cc) {
    const int nx = r.nx();
    const int dim = cc ? 1 + nx : 1;
    NestedDual d(dim);
    auto add_pair_term = [&](DualGroup& g, int i, int k, double logb) {
        OuterTerm t;
        t.logb = logb;
        t.rho = 1.0 / rho;
        for (int j = 0; j < r.ny(); ++j) {
            if (r.w(i, j) <= 0.0 || !r.ok(k, j)) continue;
            Vec b = Vec::Zero(dim);
            b(0) = r.logq(k, j) - r.logq(i, j);
            if (cc) {
                b(1 + k) += 1.0;
                b(1 + i) -= 1.0;
            }
            t.inner.push_back({std::log(r.w(i, j)), b});
        }
        if (!t.inner.empty()) g.terms.push_back(std::move(t));
    };
    if (cc) {
        for (int i = 0; i < nx; ++i) {
            DualGroup& g = d.add_group(rho * r.q(i), Vec::Zero(dim));
            for (int k = 0; k < nx; ++k) add_pair_term(g, i, k, std::log(r.q(k)));
        }
    } else {
        DualGroup& g = d.add_group(rho, Vec::Zero(dim));
        for (int i = 0; i < nx; ++i)
            for (int k = 0; k < nx; ++k) add_pair_term(g, i, k, std::log(r.q(i)) + std::log(r.q(k)));
    }
    return d;
}

inline ExponentValue ex_cc(const InputDist& qin, const Dmc& w, const Metric& m, double rho) {
    if (rho < 1.0) throw Error(ErrorKind::domain, "ex_cc: rho must be at least 1");
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind) return {};
    NestedDual d = ex_objective(r, rho, true);
    ExponentValue v = detail::maximize_dual(d, {0}, detail::start_vec(d.dim(), {{0, 0.5}}));
    v.rho = rho;
    v.value = std::max(0.0, v.value);
    return v;
}

inline ExponentValue ex_iid(const InputDist& qin, const Dmc& w, const Metric& m, double rho) {
    if (rho < 1.0) throw Error(ErrorKind::domain, "ex_iid: rho must be at least 1");
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind) return {};
    NestedDual d = ex_objective(r, rho, false);
    ExponentValue v = detail::maximize_dual(d, {0}, Vec::Constant(1, 0.5));
    v.rho = rho;
    v.value = std::max(0.0, v.value);
    return v;
}

namespace detail {

inline ExponentValue outer_rho_ex(const std::function<ExponentValue(double)>& ex, double R) {
    ExponentValue best;
    best.value = -kInf;
    auto f = [&](double rho) {
        ExponentValue v = ex(rho);
        double val = v.value - rho * R;
        if (val > best.value) {
            best = v;
            best.value = val;
        }
        return val;
    };
    Optimum1d o = maximize_concave_1d(f, 1.0, 1e-9, kRhoCapEx);
    best.value = std::max(0.0, best.value);
    best.report.boundary = o.report.boundary;
    best.report.converged = true;
    return best;
}

}  // namespace detail

inline ExponentValue eex_cc(const InputDist& qin, const Dmc& w, const Metric& m, double R) {
    return detail::outer_rho_ex([&](double rho) { return ex_cc(qin, w, m, rho); }, R);
}

inline ExponentValue eex_iid(const InputDist& qin, const Dmc& w, const Metric& m, double R) {
    return detail::outer_rho_ex([&](double rho) { return ex_iid(qin, w, m, rho); }, R);
}

inline ExponentValue e0_rgv(const InputDist& qin, const Dmc& w, const Metric& m, const RgvSpec& spec, double rho) {
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind || rho == 0.0) return {};
    NestedDual d = e0_cc_objective(r, rho, &spec);
    ExponentValue v = detail::maximize_dual(d, {0, 1}, detail::start_vec(d.dim(), {{0, 1.0 / (1.0 + rho)}}));
    v.rho = rho;
    v.value = std::max(0.0, v.value);
    return v;
}

// sup over (r >= 0, a) of -sum_x Q log sum_xbar Q e^{a(xbar) - E_Q a} e^{-r(d(x,xbar) - delta)}.
inline double rgv_rate_bound(const InputDist& qin, const RgvSpec& spec) {
    std::vector<int> xs;
    for (int x = 0; x < qin.size(); ++x)
        if (qin.p(x) > 0.0) xs.push_back(x);
    const int nx = static_cast<int>(xs.size());
    const int dim = 1 + nx;
    Vec c = Vec::Zero(dim);
    for (int i = 0; i < nx; ++i) c(1 + i) = qin.p(xs[i]);
    NestedDual d(dim);
    for (int i = 0; i < nx; ++i) {
        DualGroup& g = d.add_group(qin.p(xs[i]), c);
        OuterTerm t;
        for (int k = 0; k < nx; ++k) {
            Vec b = Vec::Zero(dim);
            b(0) = -(spec.d(xs[i], xs[k]) - spec.delta);
            b(1 + k) = 1.0;
            t.inner.push_back({std::log(qin.p(xs[k])), b});
        }
        g.terms.push_back(std::move(t));
    }
    AscentResult a = ascend_concave(d.fn(), Vec::Zero(dim), nonneg_box(dim, {0}));
    return a.value;
}

struct RgvResult {
    double exponent = 0.0;
    bool rate_condition_ok = false;
    double rate_bound = 0.0;
    ExponentValue detail;
};

inline RgvResult rgv_exponent(const InputDist& qin, const Dmc& w, const Metric& m, const RgvSpec& spec, double R) {
    RgvResult out;
    out.detail = detail::outer_rho_unit([&](double rho) { return e0_rgv(qin, w, m, spec, rho); }, R);
    out.exponent = out.detail.value;
    out.rate_bound = rgv_rate_bound(qin, spec);
    out.rate_condition_ok = R <= out.rate_bound - 1e-6;
    return out;
}

// Additive Bhattacharyya-style distance -log sum_y W(y|x) (q(xbar,y)/q(x,y))^s.
inline Mat bhattacharyya_distance(const Dmc& w, const Metric& m, double s) {
    Mat d(w.nx(), w.nx());
    for (int x = 0; x < w.nx(); ++x)
        for (int xb = 0; xb < w.nx(); ++xb) {
            double sum = 0.0;
            for (int y = 0; y < w.ny(); ++y)
                if (w.w(x, y) > 0.0 && m.q(xb, y) > 0.0) sum += w.w(x, y) * std::pow(m.q(xb, y) / m.q(x, y), s);
            d(x, xb) = sum > 0.0 ? -std::log(sum) : 1e300;
        }
    return d;
}

struct CurvePoint {
    double rate;
    double exponent;
};

struct ExponentCurve {
    Ensemble ensemble;
    std::vector<CurvePoint> samples;
};

inline ExponentCurve exponent_curve(const InputDist& qin, const Dmc& w, const Metric& m, Ensemble ens,
                                    const std::vector<double>& grid, const RgvSpec* spec = nullptr) {
    if (!std::is_sorted(grid.begin(), grid.end())) throw Error(ErrorKind::domain, "exponent_curve: grid must be sorted");
    ExponentCurve c{ens, {}};
    for (double R : grid) {
        double e = 0.0;
        switch (ens) {
            case Ensemble::iid: e = er_iid(qin, w, m, R).value; break;
            case Ensemble::cc: e = er_cc(qin, w, m, R).value; break;
            case Ensemble::ex_cc: e = eex_cc(qin, w, m, R).value; break;
            case Ensemble::rgv:
                if (!spec) throw Error(ErrorKind::domain, "exponent_curve: rgv requires a distance matrix");
                e = rgv_exponent(qin, w, m, *spec, R).exponent;
                break;
        }
        c.samples.push_back({R, e});
    }
    return c;
}

// Smallest rate at which the exponent vanishes, by bisection on [lo, hi].
inline double exponent_zero_crossing(const std::function<double(double)>& er, double lo, double hi, double thresh = 1e-9,
                                     double tol = 1e-7) {
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (er(mid) > thresh)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mismatch
