#pragma once

#include "info.hpp"
#include "iproj.hpp"
#include "logpart.hpp"
#include "metric_ops.hpp"
#include "opt.hpp"

#include <random>

namespace mismatch {

// Channel restricted to inputs with Q(x) > 0 and outputs with P_Y(y) > 0.
struct Reduced {
    std::vector<int> xs, ys;
    Vec q, py;
    Mat w, logq;
    bool metric_blind = false;  // E_P[log q] = -inf

    int nx() const { return static_cast<int>(xs.size()); }
    int ny() const { return static_cast<int>(ys.size()); }
    double p(int i, int j) const { return q(i) * w(i, j); }
    bool ok(int i, int j) const { return std::isfinite(logq(i, j)); }
};

inline Reduced reduce(const InputDist& qin, const Dmc& w, const Metric& m) {
    if (qin.size() != w.nx() || m.nx() != w.nx() || m.ny() != w.ny())
        throw Error(ErrorKind::domain, "dimension mismatch between input, channel and metric");
    Reduced r;
    Vec py = output_marginal(qin, w);
    for (int x = 0; x < w.nx(); ++x)
        if (qin.p(x) > 0.0) r.xs.push_back(x);
    for (int y = 0; y < w.ny(); ++y)
        if (py(y) > 0.0) r.ys.push_back(y);
    r.q.resize(r.nx());
    r.py.resize(r.ny());
    r.w.resize(r.nx(), r.ny());
    r.logq.resize(r.nx(), r.ny());
    for (int i = 0; i < r.nx(); ++i) r.q(i) = qin.p(r.xs[i]);
    r.q /= r.q.sum();
    for (int j = 0; j < r.ny(); ++j) r.py(j) = py(r.ys[j]);
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) {
            r.w(i, j) = w.w(r.xs[i], r.ys[j]);
            r.logq(i, j) = m.logq(r.xs[i], r.ys[j]);
            if (r.w(i, j) > 0.0 && !r.ok(i, j)) r.metric_blind = true;
        }
    return r;
}

inline double metric_mean_true(const Reduced& r) {
    if (r.metric_blind) return -kInf;
    double e = 0.0;
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j)
            if (r.w(i, j) > 0.0) e += r.p(i, j) * r.logq(i, j);
    return e;
}

inline bool positivity_check(const InputDist& qin, const Dmc& w, const Metric& m) {
    Reduced r = reduce(qin, w, m);
    if (r.metric_blind) return false;
    double ep = metric_mean_true(r);
    double eprod = 0.0;
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) {
            if (!r.ok(i, j)) return true;
            eprod += r.q(i) * r.py(j) * r.logq(i, j);
        }
    return ep > eprod + 1e-12;
}

namespace detail {

inline RateResult zero_rate(Form f) {
    RateResult res;
    res.form = f;
    res.zero_by_positivity = true;
    res.report.converged = true;
    res.report.note = "zero by positivity test";
    return res;
}

// Per-output max of log q over the reduced inputs; used to center the tilt.
inline Vec column_max(const Reduced& r) {
    Vec mx = Vec::Constant(r.ny(), -kInf);
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j)
            if (r.ok(i, j)) mx(j) = std::max(mx(j), r.logq(i, j));
    return mx;
}

inline Vec expand(const Vec& a, const std::vector<int>& idx, int n) {
    Vec out = Vec::Zero(n);
    for (std::size_t i = 0; i < idx.size(); ++i) out(idx[i]) = a(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace detail

// Dual objective of the LM rate over t = (s, a(x)) for the reduced alphabet; also the
// auxiliary-cost version when `costs` has columns a_l(x) and `free_shift` is false.
inline NestedDual lm_dual_objective(const Reduced& r, const Mat* costs = nullptr, bool free_shift = true) {
    int extra = free_shift ? r.nx() : (costs ? static_cast<int>(costs->cols()) : 0);
    int dim = 1 + extra;
    NestedDual d(dim);
    Vec cmax = detail::column_max(r);
    auto feat = [&](int i, int j) {
        Vec f = Vec::Zero(dim);
        f(0) = r.logq(i, j) - cmax(j);
        if (free_shift)
            f(1 + i) = 1.0;
        else
            for (int l = 0; l < extra; ++l) f(1 + l) = (*costs)(i, l);
        return f;
    };
    for (int j = 0; j < r.ny(); ++j) {
        Vec c = Vec::Zero(dim);
        for (int i = 0; i < r.nx(); ++i)
            if (r.w(i, j) > 0.0) c += (r.p(i, j) / r.py(j)) * feat(i, j);
        DualGroup& g = d.add_group(r.py(j), c);
        OuterTerm t;
        for (int i = 0; i < r.nx(); ++i)
            if (r.ok(i, j)) t.inner.push_back({std::log(r.q(i)), feat(i, j)});
        g.terms.push_back(std::move(t));
    }
    return d;
}

inline RateResult gmi_dual(const InputDist& qin, const Dmc& w, const Metric& m) {
    if (!positivity_check(qin, w, m)) return detail::zero_rate(Form::dual);
    Reduced r = reduce(qin, w, m);
    Vec cmax = detail::column_max(r);
    auto f = [&](double s) {
        double v = 0.0;
        for (int j = 0; j < r.ny(); ++j) {
            double mx = -kInf;
            std::vector<double> e;
            for (int i = 0; i < r.nx(); ++i)
                if (r.ok(i, j)) {
                    e.push_back(std::log(r.q(i)) + s * (r.logq(i, j) - cmax(j)));
                    mx = std::max(mx, e.back());
                }
            double sum = 0.0;
            for (double x : e) sum += std::exp(x - mx);
            double lse = mx + std::log(sum);
            for (int i = 0; i < r.nx(); ++i)
                if (r.w(i, j) > 0.0) v += r.p(i, j) * (s * (r.logq(i, j) - cmax(j)) - lse);
        }
        return v;
    };
    Optimum1d o = maximize_concave_1d(f, 0.0, 1e-12);
    RateResult res;
    res.form = Form::dual;
    res.value = std::max(0.0, o.value);
    res.report = o.report;
    DualParams dp;
    dp.s = o.x;
    res.certificate.dual = dp;
    return res;
}

inline RateResult lm_dual(const InputDist& qin, const Dmc& w, const Metric& m) {
    if (!positivity_check(qin, w, m)) return detail::zero_rate(Form::dual);
    Reduced r = reduce(qin, w, m);
    NestedDual d = lm_dual_objective(r);
    Vec t0 = Vec::Zero(d.dim());
    t0(0) = 1.0;
    AscentResult a = ascend_concave(d.fn(), t0, nonneg_box(d.dim(), {0}));
    RateResult res;
    res.form = Form::dual;
    res.value = std::max(0.0, a.value);
    res.report = a.report;
    DualParams dp;
    dp.s = a.x(0);
    Vec av = a.x.tail(r.nx());
    av.array() -= r.q.dot(av);
    dp.a = detail::expand(av, r.xs, w.nx());
    res.certificate.dual = dp;
    return res;
}

// Y-shift form: sup over (s, b) of E[log(q^s e^{b(Y)} / sum_y' P_Y(y') q(X,y')^s e^{b(y')})].
inline RateResult lm_dual_b_form(const InputDist& qin, const Dmc& w, const Metric& m) {
    if (!positivity_check(qin, w, m)) return detail::zero_rate(Form::dual);
    Reduced r = reduce(qin, w, m);
    int dim = 1 + r.ny();
    NestedDual d(dim);
    Vec rmax = Vec::Constant(r.nx(), -kInf);
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j)
            if (r.ok(i, j)) rmax(i) = std::max(rmax(i), r.logq(i, j));
    auto feat = [&](int i, int j) {
        Vec f = Vec::Zero(dim);
        f(0) = r.logq(i, j) - rmax(i);
        f(1 + j) = 1.0;
        return f;
    };
    for (int i = 0; i < r.nx(); ++i) {
        Vec c = Vec::Zero(dim);
        for (int j = 0; j < r.ny(); ++j)
            if (r.w(i, j) > 0.0) c += r.w(i, j) * feat(i, j);
        DualGroup& g = d.add_group(r.q(i), c);
        OuterTerm t;
        for (int j = 0; j < r.ny(); ++j)
            if (r.ok(i, j)) t.inner.push_back({std::log(r.py(j)), feat(i, j)});
        g.terms.push_back(std::move(t));
    }
    Vec t0 = Vec::Zero(dim);
    t0(0) = 1.0;
    AscentResult a = ascend_concave(d.fn(), t0, nonneg_box(dim, {0}));
    RateResult res;
    res.form = Form::dual;
    res.value = std::max(0.0, a.value);
    res.report = a.report;
    DualParams dp;
    dp.s = a.x(0);
    Vec bv = a.x.tail(r.ny());
    bv.array() -= r.py.dot(bv);
    dp.b = detail::expand(bv, r.ys, w.ny());
    res.certificate.dual = dp;
    return res;
}

namespace detail {

inline RateResult su_primal(const InputDist& qin, const Dmc& w, const Metric& m, bool fix_x) {
    Reduced r = reduce(qin, w, m);
    JointDist base({r.nx(), r.ny()});
    std::vector<double> lq(base.size());
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) {
            base.p[i * r.ny() + j] = r.q(i) * r.py(j);
            lq[i * r.ny() + j] = r.logq(i, j);
        }
    std::vector<MarginalConstraint> cons;
    if (fix_x) cons.push_back({{0}, std::vector<double>(r.q.data(), r.q.data() + r.nx())});
    cons.push_back({{1}, std::vector<double>(r.py.data(), r.py.data() + r.ny())});
    RateResult res;
    res.form = Form::primal;
    if (!positivity_check(qin, w, m)) {
        res = zero_rate(Form::primal);
        return res;
    }
    IProjResult ip = i_projection(base, lq, metric_mean_true(r), cons);
    res.value = std::max(0.0, ip.value);
    res.report = ip.report;
    JointDist full({w.nx(), w.ny()});
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) full.p[r.xs[i] * w.ny() + r.ys[j]] = ip.p.p[i * r.ny() + j];
    res.certificate.joint = full;
    DualParams dp;
    dp.s = ip.s;
    res.certificate.dual = dp;
    return res;
}

}  // namespace detail

inline RateResult gmi_primal(const InputDist& qin, const Dmc& w, const Metric& m) {
    return detail::su_primal(qin, w, m, false);
}

inline RateResult lm_primal(const InputDist& qin, const Dmc& w, const Metric& m) {
    return detail::su_primal(qin, w, m, true);
}

inline RateResult gmi(const InputDist& qin, const Dmc& w, const Metric& m) { return gmi_dual(qin, w, m); }
inline RateResult lm(const InputDist& qin, const Dmc& w, const Metric& m) { return lm_dual(qin, w, m); }

// Auxiliary costs as columns of `costs` (|X| x L); L = 0 gives the GMI.
inline RateResult fixed_cost_lm(const InputDist& qin, const Dmc& w, const Metric& m, const Mat& costs) {
    if (!positivity_check(qin, w, m)) return detail::zero_rate(Form::dual);
    Reduced r = reduce(qin, w, m);
    Mat rc(r.nx(), costs.cols());
    for (int i = 0; i < r.nx(); ++i) rc.row(i) = costs.row(r.xs[i]);
    NestedDual d = lm_dual_objective(r, &rc, false);
    Vec t0 = Vec::Zero(d.dim());
    t0(0) = 1.0;
    AscentResult a = ascend_concave(d.fn(), t0, nonneg_box(d.dim(), {0}));
    RateResult res;
    res.form = Form::dual;
    res.value = std::max(0.0, a.value);
    res.report = a.report;
    DualParams dp;
    dp.s = a.x(0);
    dp.r = a.x.tail(costs.cols());
    res.certificate.dual = dp;
    return res;
}

enum class Verdict { exact, boundary, no };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::exact: return "exact";
        case Verdict::boundary: return "boundary";
        default: return "no";
    }
}

struct MatchedCheck {
    Verdict verdict = Verdict::no;
    double s = 0.0;
    double residual = kInf;
};

namespace detail {

// Least squares fit of target(i,j) = s*lq(i,j) + a(i) + b(j) over the listed cells.
inline std::pair<Vec, double> affine_fit(const std::vector<std::pair<int, int>>& cells, const Mat& target, const Mat* lq,
                                         int nx, int ny, bool with_a) {
    int cols = (lq ? 1 : 0) + (with_a ? nx : 0) + ny;
    Mat A = Mat::Zero(static_cast<Eigen::Index>(cells.size()), cols);
    Vec rhs(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k) {
        auto [i, j] = cells[k];
        int c = 0;
        if (lq) A(k, c++) = (*lq)(i, j);
        if (with_a) A(k, c + i) = 1.0;
        c += with_a ? nx : 0;
        A(k, c + j) = 1.0;
        rhs(k) = target(i, j);
    }
    Vec sol = A.completeOrthogonalDecomposition().solve(rhs);
    double res = cells.empty() ? 0.0 : (A * sol - rhs).cwiseAbs().maxCoeff();
    return {sol, res};
}

}  // namespace detail

inline MatchedCheck matched_equivalence_check(const InputDist& qin, const Dmc& w, const Metric& m, bool gmi_variant = false) {
    Reduced r = reduce(qin, w, m);
    MatchedCheck out;
    if (r.metric_blind) return out;
    std::vector<std::pair<int, int>> pos, zero;
    Mat lw = Mat::Zero(r.nx(), r.ny());
    for (int i = 0; i < r.nx(); ++i)
        for (int j = 0; j < r.ny(); ++j) {
            if (r.w(i, j) > 0.0) {
                pos.emplace_back(i, j);
                lw(i, j) = std::log(r.w(i, j));
            } else {
                zero.emplace_back(i, j);
            }
        }
    Mat lqf = r.logq;
    for (auto [i, j] : zero)
        if (!r.ok(i, j)) lqf(i, j) = 0.0;
    const bool with_a = !gmi_variant;
    auto [sol, res] = detail::affine_fit(pos, lw, &lqf, r.nx(), r.ny(), with_a);
    out.s = sol(0);
    out.residual = res;
    bool zeros_consistent = true;
    for (auto [i, j] : zero)
        if (r.ok(i, j)) zeros_consistent = false;
    if (res <= 1e-9 && out.s >= -1e-12 && zeros_consistent) {
        out.verdict = Verdict::exact;
        return out;
    }
    // s -> infinity: log q additive on the support of W and strictly below that surface on zeros of W.
    auto [qa, qres] = detail::affine_fit(pos, lqf, nullptr, r.nx(), r.ny(), with_a);
    auto [wa, wres] = detail::affine_fit(pos, lw, nullptr, r.nx(), r.ny(), with_a);
    if (qres > 1e-9 || wres > 1e-9 || zeros_consistent) return out;
    for (auto [i, j] : zero) {
        if (!r.ok(i, j)) continue;
        double surf = (with_a ? qa(i) : 0.0) + qa((with_a ? r.nx() : 0) + j);
        if (!(r.logq(i, j) < surf - 1e-9)) return out;
    }
    out.verdict = Verdict::boundary;
    out.s = kInf;
    out.residual = wres;
    return out;
}

// C if the log cross-ratios of q and W share a strict sign, else 0.
inline double binary_mismatch_capacity(const Dmc& w, const Metric& m) {
    if (w.nx() != 2 || w.ny() != 2) throw Error(ErrorKind::domain, "binary_mismatch_capacity: 2x2 channel required");
    auto sgn = [](double v) { return (v > 0.0) - (v < 0.0); };
    int sw = sgn(w.w(0, 0) * w.w(1, 1) - w.w(0, 1) * w.w(1, 0));
    int sq = sgn(m.q(0, 0) * m.q(1, 1) - m.q(0, 1) * m.q(1, 0));
    if (sw == 0 || sw != sq) return 0.0;
    return blahut_arimoto_capacity(w.w).capacity;
}

enum class Which { gmi, lm };

inline RateResult multiletter_rate(const Dmc& w, const Metric& m, int k, const InputDist& qk, Which which) {
    auto [wk, mk] = product_extension(w, m, k);
    RateResult r = which == Which::gmi ? gmi_dual(qk, wk, mk) : lm_dual(qk, wk, mk);
    r.value /= k;
    return r;
}

struct InputSearch {
    Vec q;
    double value = -kInf;
};

// Multi-start local search over the simplex plus an optional grid scan; not certified global.
inline InputSearch optimize_input(const std::function<double(const Vec&)>& rate_fn, int dim, int n_starts,
                                  std::optional<double> grid_step = std::nullopt, unsigned seed = 0) {
    InputSearch best;
    auto consider = [&](const Vec& q) {
        double v = rate_fn(q);
        if (v > best.value) best = {q, v};
        return v;
    };
    if (grid_step) {
        int n = static_cast<int>(std::llround(1.0 / *grid_step));
        std::vector<int> c(dim, 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == dim - 1) {
                c[pos] = left;
                Vec q(dim);
                for (int i = 0; i < dim; ++i) q(i) = static_cast<double>(c[i]) / n;
                consider(q);
                return;
            }
            for (int k = 0; k <= left; ++k) {
                c[pos] = k;
                rec(pos + 1, left - k);
            }
        };
        rec(0, n);
    }
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gam(1.0, 1.0);
    for (int st = 0; st < n_starts; ++st) {
        Vec q(dim);
        if (st == 0 && !grid_step) {
            q.setConstant(1.0 / dim);
        } else if (st == 0 && best.q.size() == dim) {
            q = best.q;
        } else {
            for (int i = 0; i < dim; ++i) q(i) = gam(rng);
            q /= q.sum();
        }
        double fq = consider(q);
        double step = 0.1;
        for (int it = 0; it < 300 && step > 1e-9; ++it) {
            Vec g(dim);
            const double h = 1e-6;
            for (int i = 0; i < dim; ++i) {
                Vec e = Vec::Constant(dim, -1.0 / dim);
                e(i) += 1.0;
                g(i) = (rate_fn(project_simplex(q + h * e)) - rate_fn(project_simplex(q - h * e))) / (2.0 * h);
            }
            g.array() -= g.mean();
            if (g.norm() < 1e-10) break;
            bool moved = false;
            while (step > 1e-9) {
                Vec qn = project_simplex(q + step * g / g.norm());
                double fn = consider(qn);
                if (fn > fq + 1e-13) {
                    q = qn;
                    fq = fn;
                    step *= 1.5;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }
    return best;
}

}  // namespace mismatch
