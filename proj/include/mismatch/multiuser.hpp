#pragma once

#include "iproj.hpp"
#include "logpart.hpp"
#include "problems.hpp"
#include "su_rates.hpp"

namespace mismatch {

namespace detail {

// Superposition data on the support of Q_UX and P_Y.
struct ScData {
    int nu = 0, nx = 0;
    std::vector<int> ys;
    Mat qux;
    Vec qu;
    std::vector<std::pair<int, int>> cells;  // (u, x) with Q_UX > 0
    std::vector<std::vector<int>> cell_of;   // [u][x] -> cell index or -1
    Mat w, lq;                               // restricted to ys columns
    bool blind = false;

    int ny() const { return static_cast<int>(ys.size()); }
    int ncells() const { return static_cast<int>(cells.size()); }
    double p(int c, int y) const { return qux(cells[c].first, cells[c].second) * w(cells[c].second, y); }
    bool ok(int x, int y) const { return std::isfinite(lq(x, y)); }
    double qxu(int c) const { return qux(cells[c].first, cells[c].second) / qu(cells[c].first); }
};

inline ScData sc_data(const Dmc& w, const Metric& m, const ScInput& sc) {
    if (sc.nx() != w.nx() || m.nx() != w.nx() || m.ny() != w.ny())
        throw Error(ErrorKind::domain, "superposition: Q_UX, channel and metric disagree on |X|");
    ScData d;
    d.nu = sc.nu();
    d.nx = sc.nx();
    d.qux = sc.qux;
    d.qu = d.qux.rowwise().sum();
    d.cell_of.assign(d.nu, std::vector<int>(d.nx, -1));
    for (int u = 0; u < d.nu; ++u)
        for (int x = 0; x < d.nx; ++x)
            if (d.qux(u, x) > 0.0) {
                d.cell_of[u][x] = static_cast<int>(d.cells.size());
                d.cells.push_back({u, x});
            }
    Vec qx = d.qux.colwise().sum().transpose();
    for (int y = 0; y < w.ny(); ++y) {
        double s = 0.0;
        for (int x = 0; x < d.nx; ++x) s += qx(x) * w.w(x, y);
        if (s > 0.0) d.ys.push_back(y);
    }
    d.w.resize(d.nx, d.ny());
    d.lq.resize(d.nx, d.ny());
    for (int x = 0; x < d.nx; ++x)
        for (int j = 0; j < d.ny(); ++j) {
            d.w(x, j) = w.w(x, d.ys[j]);
            d.lq(x, j) = m.logq(x, d.ys[j]);
            if (qx(x) > 0.0 && d.w(x, j) > 0.0 && !d.ok(x, j)) d.blind = true;
        }
    return d;
}

inline double sc_mean_logq(const ScData& d) {
    double e = 0.0;
    for (int c = 0; c < d.ncells(); ++c)
        for (int j = 0; j < d.ny(); ++j)
            if (d.p(c, j) > 0.0) e += d.p(c, j) * d.lq(d.cells[c].second, j);
    return e;
}

}  // namespace detail

// Dual of the satellite condition over t = (s, a(u,x)).
inline NestedDual sc_r1_dual_objective(const detail::ScData& d) {
    const int dim = 1 + d.ncells();
    NestedDual nd(dim);
    for (int u = 0; u < d.nu; ++u)
        for (int j = 0; j < d.ny(); ++j) {
            double puy = 0.0, mx = -kInf;
            for (int x = 0; x < d.nx; ++x) {
                int c = d.cell_of[u][x];
                if (c < 0) continue;
                puy += d.p(c, j);
                if (d.ok(x, j)) mx = std::max(mx, d.lq(x, j));
            }
            if (puy <= 0.0) continue;
            auto feat = [&](int c) {
                Vec f = Vec::Zero(dim);
                f(0) = d.lq(d.cells[c].second, j) - mx;
                f(1 + c) = 1.0;
                return f;
            };
            Vec cv = Vec::Zero(dim);
            OuterTerm t;
            for (int x = 0; x < d.nx; ++x) {
                int c = d.cell_of[u][x];
                if (c < 0) continue;
                if (d.p(c, j) > 0.0) cv += (d.p(c, j) / puy) * feat(c);
                if (d.ok(x, j)) t.inner.push_back({std::log(d.qxu(c)), feat(c)});
            }
            DualGroup& g = nd.add_group(puy, cv);
            g.terms.push_back(std::move(t));
        }
    return nd;
}

inline RateResult sc_r1_bound(const Dmc& w, const Metric& m, const ScInput& sc) {
    detail::ScData d = detail::sc_data(w, m, sc);
    if (d.blind) return detail::zero_rate(Form::dual);
    NestedDual nd = sc_r1_dual_objective(d);
    AscentResult a = ascend_concave(nd.fn(), one_hot(nd.dim(), {{0, 1.0}}), nonneg_box(nd.dim(), {0}));

    JointDist base({d.nu, d.nx, d.ny()});
    std::vector<double> lq(base.size(), -kInf), tux(static_cast<std::size_t>(d.nu) * d.nx, 0.0),
        tuy(static_cast<std::size_t>(d.nu) * d.ny(), 0.0);
    for (int c = 0; c < d.ncells(); ++c) {
        auto [u, x] = d.cells[c];
        tux[u * d.nx + x] = d.qux(u, x);
        for (int j = 0; j < d.ny(); ++j) tuy[u * d.ny() + j] += d.p(c, j);
    }
    for (int c = 0; c < d.ncells(); ++c) {
        auto [u, x] = d.cells[c];
        for (int j = 0; j < d.ny(); ++j) {
            std::size_t k = base.index({u, x, j});
            base.p[k] = d.qux(u, x) * tuy[u * d.ny() + j] / d.qu(u);
            lq[k] = d.lq(x, j);
        }
    }
    IProjResult ip = i_projection(base, lq, detail::sc_mean_logq(d), {{{0, 1}, tux}, {{0, 2}, tuy}});

    RateResult res;
    res.form = Form::dual;
    res.value = std::max(0.0, a.value);
    res.gap = std::abs(a.value - ip.value);
    res.report = a.report;
    DualParams dp;
    dp.s = a.x(0);
    dp.a = a.x.tail(d.ncells());
    res.certificate.dual = dp;
    res.certificate.joint = ip.p;
    return res;
}

// Cloud-center dual with per-cloud powers; w = (rho, ..., rho) gives the standard superposition term.
inline NestedDual sc_cloud_dual_objective(const detail::ScData& d, const Vec& powers) {
    const int dim = 1 + d.ncells();
    NestedDual nd(dim);
    for (int j = 0; j < d.ny(); ++j) {
        double py = 0.0, mx = -kInf;
        for (int c = 0; c < d.ncells(); ++c) {
            py += d.p(c, j);
            if (d.ok(d.cells[c].second, j)) mx = std::max(mx, d.lq(d.cells[c].second, j));
        }
        if (py <= 0.0) continue;
        auto feat = [&](int c) {
            Vec f = Vec::Zero(dim);
            f(0) = d.lq(d.cells[c].second, j) - mx;
            f(1 + c) = 1.0;
            return f;
        };
        Vec cv = Vec::Zero(dim);
        for (int c = 0; c < d.ncells(); ++c)
            if (d.p(c, j) > 0.0) cv += (powers(d.cells[c].first) * d.p(c, j) / py) * feat(c);
        DualGroup& g = nd.add_group(py, cv);
        for (int u = 0; u < d.nu; ++u) {
            if (d.qu(u) <= 0.0) continue;
            OuterTerm t;
            t.logb = std::log(d.qu(u));
            t.rho = powers(u);
            t.tag = u;
            for (int x = 0; x < d.nx; ++x) {
                int c = d.cell_of[u][x];
                if (c >= 0 && d.ok(x, j)) t.inner.push_back({std::log(d.qxu(c)), feat(c)});
            }
            if (!t.inner.empty()) g.terms.push_back(std::move(t));
        }
    }
    return nd;
}

namespace detail {

inline double sc_cloud_value(const ScData& d, const Vec& powers, Vec* warm, Vec* dpow = nullptr) {
    if (powers.maxCoeff() <= 0.0) {
        if (dpow) dpow->setZero(d.nu);
        return 0.0;
    }
    NestedDual nd = sc_cloud_dual_objective(d, powers);
    Vec t0 = (warm && warm->size() == nd.dim()) ? *warm : one_hot(nd.dim(), {{0, 1.0}});
    AscentResult a = ascend_concave(nd.fn(), t0, nonneg_box(nd.dim(), {0}));
    if (warm) *warm = a.x;
    if (dpow) {
        Vec dr = Vec::Zero(d.nu);
        nd.eval(a.x, nullptr, nullptr, &dr);
        // derivative of the linear c-terms in the powers
        for (int j = 0; j < d.ny(); ++j) {
            double py = 0.0, mx = -kInf;
            for (int c = 0; c < d.ncells(); ++c) {
                py += d.p(c, j);
                if (d.ok(d.cells[c].second, j)) mx = std::max(mx, d.lq(d.cells[c].second, j));
            }
            if (py <= 0.0) continue;
            for (int c = 0; c < d.ncells(); ++c) {
                double pk = d.p(c, j);
                if (pk <= 0.0) continue;
                double lin = a.x(0) * (d.lq(d.cells[c].second, j) - mx) + a.x(1 + c);
                dr(d.cells[c].first) += pk * lin;
            }
        }
        *dpow = dr;
    }
    return a.value;
}

// sup over rho in [0,1] of G(rho) - rho * r1 on a 33-point grid with Brent refinement.
inline std::pair<double, double> sup_rho_unit(const std::function<double(double)>& g, double r1, int grid = 33) {
    std::vector<double> vals(grid);
    int ib = 0;
    for (int k = 0; k < grid; ++k) {
        double rho = static_cast<double>(k) / (grid - 1);
        vals[k] = g(rho) - rho * r1;
        if (vals[k] > vals[ib]) ib = k;
    }
    double best = vals[ib], arg = static_cast<double>(ib) / (grid - 1);
    double lo = static_cast<double>(std::max(0, ib - 1)) / (grid - 1);
    double hi = static_cast<double>(std::min(grid - 1, ib + 1)) / (grid - 1);
    if (hi > lo) {
        Optimum1d o = maximize_on_interval([&](double rho) { return g(rho) - rho * r1; }, lo, hi, 1e-9);
        if (o.value > best) {
            best = o.value;
            arg = o.x;
        }
    }
    return {best, arg};
}

}  // namespace detail

// G(rho): cloud-center dual at a common power rho.
inline double sc_cloud_g(const Dmc& w, const Metric& m, const ScInput& sc, double rho) {
    detail::ScData d = detail::sc_data(w, m, sc);
    if (d.blind) return 0.0;
    return detail::sc_cloud_value(d, Vec::Constant(d.nu, rho), nullptr);
}

struct ScRate {
    double total = 0.0;
    double r0 = 0.0, r1 = 0.0;
    double rho = 0.0;
    SolveReport report;
};

inline ScRate sc_rate(const Dmc& w, const Metric& m, const ScInput& sc) {
    detail::ScData d = detail::sc_data(w, m, sc);
    ScRate out;
    out.report.converged = true;
    if (d.blind) return out;
    RateResult r1 = sc_r1_bound(w, m, sc);
    out.r1 = r1.value;
    Vec warm;
    auto g = [&](double rho) { return detail::sc_cloud_value(d, Vec::Constant(d.nu, rho), &warm); };
    auto [val, rho] = detail::sup_rho_unit(g, out.r1);
    out.r0 = std::max(0.0, val);
    out.rho = rho;
    out.total = out.r0 + out.r1;
    return out;
}

struct RscRate {
    double total = 0.0;
    double r0 = 0.0;
    std::vector<double> r1u;
    Vec weights;
    SolveReport report;
};

// Per-cloud satellite rates fixed at their LM bounds; the cloud condition is maximized over per-cloud
// powers w in [0,1]^U, the Lagrangian counterpart of the max over subsets.
inline RscRate rsc_rate(const Dmc& w, const Metric& m, const ScInput& sc) {
    if (sc.nu() > 4) throw Error(ErrorKind::capacity, "rsc_rate: |U| must be at most 4");
    detail::ScData d = detail::sc_data(w, m, sc);
    RscRate out;
    out.r1u.assign(d.nu, 0.0);
    for (int u = 0; u < d.nu; ++u)
        if (d.qu(u) > 0.0) out.r1u[u] = lm(sc.qx_given(u), w, m).value;
    if (d.blind) {
        out.report.converged = true;
        return out;
    }
    Vec warm;
    double base = 0.0;
    for (int u = 0; u < d.nu; ++u) base += d.qu(u) * out.r1u[u];
    ConcaveFn f = [&](const Vec& pw, Vec* grad, Mat*) {
        Vec dp;
        double v = detail::sc_cloud_value(d, pw, &warm, grad ? &dp : nullptr);
        for (int u = 0; u < d.nu; ++u) v -= pw(u) * d.qu(u) * out.r1u[u];
        if (grad) {
            *grad = dp;
            for (int u = 0; u < d.nu; ++u) (*grad)(u) -= d.qu(u) * out.r1u[u];
        }
        return v;
    };
    AscentOptions opt;
    opt.tol = 1e-9;
    opt.hessian = false;
    opt.max_iter = 200;
    opt.lower = Vec::Zero(d.nu);
    opt.upper = Vec::Ones(d.nu);
    // start from the best common power, which reproduces the standard superposition value
    auto common = [&](double rho) { return f(Vec::Constant(d.nu, rho), nullptr, nullptr); };
    const double crho = detail::sup_rho_unit(common, 0.0).second;
    AscentResult a = ascend_concave(f, Vec::Constant(d.nu, crho), opt);
    AscentResult b = ascend_concave(f, Vec::Constant(d.nu, 0.5), opt);
    if (b.value > a.value) a = b;
    // the box corners are cheap to check and guard against a flat start
    double best = a.value;
    Vec bw = a.x;
    for (int mask = 0; mask < (1 << d.nu); ++mask) {
        Vec c(d.nu);
        for (int u = 0; u < d.nu; ++u) c(u) = (mask >> u) & 1;
        double v = f(c, nullptr, nullptr);
        if (v > best + 1e-12) {
            best = v;
            bw = c;
        }
    }
    out.weights = bw;
    out.r0 = std::max(0.0, best);
    out.total = out.r0 + base;
    out.report = a.report;
    return out;
}

struct SumChannel {
    double rate;
    double qu1;
};

inline SumChannel sum_channel_rate(double i1, double i2) {
    if (i1 < 0.0 || i2 < 0.0) {
        if (std::isinf(i2) && i2 < 0.0) return {i1, 1.0};
        if (std::isinf(i1) && i1 < 0.0) return {i2, 0.0};
        throw Error(ErrorKind::domain, "sum_channel_rate: rates must be nonnegative");
    }
    double mx = std::max(i1, i2);
    double z = std::exp(i1 - mx) + std::exp(i2 - mx);
    return {mx + std::log(z), std::exp(i1 - mx) / z};
}

// Q_UX induced by (Q1, Q2, psi) with the cloud index taken from the given user (2 or 1).
inline ScInput exppar_sc_input(const ExpParSpec& sp, int nx, int cloud_user) {
    Mat m = Mat::Zero(cloud_user == 2 ? sp.n2 : sp.n1, nx);
    for (int a = 0; a < sp.n1; ++a)
        for (int b = 0; b < sp.n2; ++b) {
            int x = sp.psi[a][b];
            if (cloud_user == 2)
                m(b, x) += sp.q1.p(a) * sp.q2.p(b);
            else
                m(a, x) += sp.q1.p(a) * sp.q2.p(b);
        }
    return ScInput(m);
}

struct ExpParRate {
    double total = 0.0;
    double r1max = 0.0, r2max = 0.0;
    double total_u2 = 0.0, total_u1 = 0.0;  // sum condition through the two superposition orders
    double weakened_lm = 0.0;
};

namespace detail {

inline void check_exppar(const ExpParSpec& sp, int nx) {
    if (sp.q1.size() != sp.n1 || sp.q2.size() != sp.n2 || static_cast<int>(sp.psi.size()) != sp.n1)
        throw Error(ErrorKind::validation, "exppar: sizes of psi, Q1, Q2 disagree");
    for (int a = 0; a < sp.n1; ++a) {
        if (static_cast<int>(sp.psi[a].size()) != sp.n2)
            throw Error(ErrorKind::validation, "exppar: psi row " + std::to_string(a) + " has wrong length");
        for (int b = 0; b < sp.n2; ++b)
            if (sp.psi[a][b] < 0 || sp.psi[a][b] >= nx)
                throw Error(ErrorKind::validation, "exppar: psi(" + std::to_string(a) + "," + std::to_string(b) +
                                                       ") outside the input alphabet");
    }
}

// min I(X_user; Y | X_other) with P_{X1X2} and P_{X_other Y} fixed, by i-projection.
inline double exppar_single(const Dmc& w, const Metric& m, const ExpParSpec& sp, int user) {
    const int ny = w.ny();
    JointDist p({sp.n1, sp.n2, ny});
    std::vector<double> lq(p.size());
    double mean = 0.0;
    bool blind = false;
    for (int a = 0; a < sp.n1; ++a)
        for (int b = 0; b < sp.n2; ++b)
            for (int y = 0; y < ny; ++y) {
                std::size_t k = p.index({a, b, y});
                int x = sp.psi[a][b];
                p.p[k] = sp.q1.p(a) * sp.q2.p(b) * w.w(x, y);
                lq[k] = m.logq(x, y);
                if (p.p[k] > 0.0) {
                    if (!std::isfinite(lq[k]))
                        blind = true;
                    else
                        mean += p.p[k] * lq[k];
                }
            }
    if (blind) return 0.0;
    int other = user == 1 ? 1 : 0;
    JointDist pxx = p.marginal({0, 1});
    JointDist poy = p.marginal({other, 2});
    JointDist base({sp.n1, sp.n2, ny});
    for (std::size_t k = 0; k < base.size(); ++k) {
        auto id = base.unravel(k);
        double qo = other == 1 ? sp.q2.p(id[1]) : sp.q1.p(id[0]);
        if (qo <= 0.0) continue;
        base.p[k] = pxx.p[id[0] * sp.n2 + id[1]] * poy.p[id[other] * ny + id[2]] / qo;
    }
    IProjResult ip = i_projection(base, lq, mean, {{{0, 1}, pxx.p}, {{other, 2}, poy.p}});
    return std::max(0.0, ip.value);
}

}  // namespace detail

inline ExpParRate expurgated_parallel_rate(const Dmc& w, const Metric& m, const ExpParSpec& sp) {
    detail::check_exppar(sp, w.nx());
    ExpParRate out;
    out.r1max = detail::exppar_single(w, m, sp, 1);
    out.r2max = detail::exppar_single(w, m, sp, 2);
    {
        ScInput sc = exppar_sc_input(sp, w.nx(), 2);
        detail::ScData d = detail::sc_data(w, m, sc);
        double t = 0.0;
        if (!d.blind) {
            Vec warm;
            t = detail::sup_rho_unit([&](double rho) { return detail::sc_cloud_value(d, Vec::Constant(d.nu, rho), &warm); },
                                     out.r1max)
                    .first;
        }
        out.total_u2 = out.r1max + std::clamp(t, 0.0, out.r2max);
        out.weakened_lm = d.blind ? 0.0 : detail::sc_cloud_value(d, Vec::Constant(d.nu, 1.0), nullptr);
    }
    {
        ScInput sc = exppar_sc_input(sp, w.nx(), 1);
        detail::ScData d = detail::sc_data(w, m, sc);
        double t = 0.0;
        if (!d.blind) {
            Vec warm;
            t = detail::sup_rho_unit([&](double rho) { return detail::sc_cloud_value(d, Vec::Constant(d.nu, rho), &warm); },
                                     out.r2max)
                    .first;
        }
        out.total_u1 = out.r2max + std::clamp(t, 0.0, out.r1max);
    }
    out.total = std::max(out.total_u1, out.total_u2);
    return out;
}

}  // namespace mismatch
