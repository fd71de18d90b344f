#pragma once

#include "info.hpp"
#include "opt.hpp"
#include "transport.hpp"
#include "types.hpp"

#include <boost/math/tools/toms748_solve.hpp>

namespace mismatch {

struct MarginalConstraint {
    std::vector<int> axes;
    std::vector<double> target;
};

struct IProjOptions {
    double sinkhorn_tol = 1e-12;
    double metric_tol = 1e-9;
    int max_sweeps = 200000;
    double s_cap = kParamCap;
};

struct IProjResult {
    JointDist p;
    double s = 0.0;
    std::vector<std::vector<double>> shifts;
    double value = 0.0;  // D(p || base)
    double metric_mean = 0.0;
    bool active = false;
    SolveReport report;
};

namespace detail {

class Sinkhorn {
public:
    Sinkhorn(const JointDist& base, const std::vector<double>& logq, bool use_metric,
             const std::vector<MarginalConstraint>& cons, const IProjOptions& opt)
        : base_(base), cons_(cons), opt_(opt) {
        const std::size_t n = base.size();
        mask_.assign(n, true);
        logb_.assign(n, -kInf);
        lq_.assign(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (base.p[k] <= 0.0) mask_[k] = false;
            if (use_metric && !std::isfinite(logq[k])) mask_[k] = false;
        }
        idx_.resize(cons.size());
        for (std::size_t c = 0; c < cons.size(); ++c) {
            std::size_t msize = 1;
            for (int a : cons[c].axes) msize *= base.shape[a];
            if (cons[c].target.size() != msize) throw Error(ErrorKind::domain, "i_projection: target size mismatch");
            idx_[c].resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                auto id = base.unravel(k);
                std::size_t j = 0;
                for (int a : cons[c].axes) j = j * base.shape[a] + id[a];
                idx_[c][k] = j;
                if (cons[c].target[j] <= 0.0) mask_[k] = false;
            }
        }
        lmax_ = -kInf;
        for (std::size_t k = 0; k < n; ++k)
            if (mask_[k] && use_metric) lmax_ = std::max(lmax_, logq[k]);
        if (!std::isfinite(lmax_)) lmax_ = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (!mask_[k]) continue;
            logb_[k] = std::log(base.p[k]);
            lq_[k] = use_metric ? logq[k] - lmax_ : 0.0;
        }
        for (std::size_t c = 0; c < cons.size(); ++c) {
            std::vector<double> reach(cons[c].target.size(), 0.0);
            for (std::size_t k = 0; k < n; ++k)
                if (mask_[k]) reach[idx_[c][k]] += 1.0;
            for (std::size_t j = 0; j < reach.size(); ++j)
                if (cons[c].target[j] > 0.0 && reach[j] == 0.0)
                    throw Error(ErrorKind::infeasible, "i_projection: marginal cell " + std::to_string(j) +
                                                           " of constraint " + std::to_string(c) + " is unreachable");
            phi_.emplace_back(cons[c].target.size(), 0.0);
        }
        lp_.assign(n, -kInf);
    }

    // Returns sweeps used.
    int solve(double s) {
        const std::size_t n = lp_.size();
        for (std::size_t k = 0; k < n; ++k) {
            if (!mask_[k]) continue;
            double v = logb_[k] + s * lq_[k];
            for (std::size_t c = 0; c < cons_.size(); ++c) v += phi_[c][idx_[c][k]];
            lp_[k] = v;
        }
        if (cons_.empty()) {
            normalize();
            return 0;
        }
        std::vector<double> m;
        for (int sweep = 1; sweep <= opt_.max_sweeps; ++sweep) {
            double err = 0.0;
            for (std::size_t c = 0; c < cons_.size(); ++c) {
                const auto& tgt = cons_[c].target;
                m.assign(tgt.size(), 0.0);
                for (std::size_t k = 0; k < n; ++k)
                    if (mask_[k]) m[idx_[c][k]] += std::exp(lp_[k]);
                std::vector<double> delta(tgt.size(), 0.0);
                for (std::size_t j = 0; j < tgt.size(); ++j) {
                    if (tgt[j] <= 0.0) continue;
                    err = std::max(err, std::abs(m[j] - tgt[j]));
                    delta[j] = std::log(tgt[j]) - std::log(std::max(m[j], 1e-300));
                    phi_[c][j] += delta[j];
                }
                for (std::size_t k = 0; k < n; ++k)
                    if (mask_[k]) lp_[k] += delta[idx_[c][k]];
            }
            if (err <= opt_.sinkhorn_tol) return sweep;
        }
        return -opt_.max_sweeps;
    }

    double mean() const {
        double e = 0.0;
        for (std::size_t k = 0; k < lp_.size(); ++k)
            if (mask_[k]) e += std::exp(lp_[k]) * lq_[k];
        return e + lmax_;
    }

    JointDist dist() const {
        JointDist p(base_.shape);
        for (std::size_t k = 0; k < lp_.size(); ++k) p.p[k] = mask_[k] ? std::exp(lp_[k]) : 0.0;
        return p;
    }

    double divergence() const {
        double d = 0.0;
        for (std::size_t k = 0; k < lp_.size(); ++k)
            if (mask_[k]) {
                double pk = std::exp(lp_[k]);
                if (pk > 0.0) d += pk * (lp_[k] - logb_[k]);
            }
        return d;
    }

    const std::vector<std::vector<double>>& shifts() const { return phi_; }

private:
    void normalize() {
        double mx = -kInf;
        for (std::size_t k = 0; k < lp_.size(); ++k)
            if (mask_[k]) mx = std::max(mx, lp_[k]);
        double s = 0.0;
        for (std::size_t k = 0; k < lp_.size(); ++k)
            if (mask_[k]) s += std::exp(lp_[k] - mx);
        double z = mx + std::log(s);
        for (std::size_t k = 0; k < lp_.size(); ++k)
            if (mask_[k]) lp_[k] -= z;
    }

    const JointDist& base_;
    const std::vector<MarginalConstraint>& cons_;
    IProjOptions opt_;
    std::vector<bool> mask_;
    std::vector<double> logb_, lq_, lp_;
    std::vector<std::vector<std::size_t>> idx_;
    std::vector<std::vector<double>> phi_;
    double lmax_ = 0.0;
};

// Cells of an nr x nc grid that carry positive mass in some coupling of (a, b) supported on `allowed`.
inline std::vector<bool> loadable_cells(const Vec& a, const Vec& b, const std::vector<bool>& allowed) {
    const Eigen::Index nr = a.size(), nc = b.size();
    Mat g(nr, nc);
    for (Eigen::Index i = 0; i < nr; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) g(i, j) = allowed[static_cast<std::size_t>(i * nc + j)] ? 0.0 : 1e30;
    std::vector<bool> live(allowed.size(), false);
    for (Eigen::Index i = 0; i < nr; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i * nc + j);
            if (!allowed[k] || a(i) <= 0.0 || b(j) <= 0.0) continue;
            Mat gk = g;
            gk(i, j) = -1.0;
            double c = transport_solve(a, b, gk).cost;
            live[k] = c < 1e20 && -c > 1e-12;
        }
    return live;
}

// Base restricted to the cells that a coupling with both marginals fixed can load; nullopt when nothing changes.
inline std::optional<JointDist> prune_to_loadable(const JointDist& base, const std::vector<double>& logq, bool use_metric,
                                                  const std::vector<MarginalConstraint>& cons) {
    if (base.shape.size() != 2 || cons.size() != 2) return std::nullopt;
    const std::vector<double>* rows = nullptr;
    const std::vector<double>* cols = nullptr;
    for (const auto& c : cons) {
        if (c.axes == std::vector<int>{0}) rows = &c.target;
        if (c.axes == std::vector<int>{1}) cols = &c.target;
    }
    if (!rows || !cols) return std::nullopt;
    const int nr = base.shape[0], nc = base.shape[1];
    std::vector<bool> allowed(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) allowed[k] = base.p[k] > 0.0 && (!use_metric || std::isfinite(logq[k]));
    Vec a = Eigen::Map<const Vec>(rows->data(), nr), b = Eigen::Map<const Vec>(cols->data(), nc);
    std::vector<bool> live = loadable_cells(a, b, allowed);
    bool changed = false;
    JointDist out = base;
    for (std::size_t k = 0; k < base.size(); ++k)
        if (allowed[k] && !live[k]) {
            out.p[k] = 0.0;
            changed = true;
        }
    if (!changed) return std::nullopt;
    return out;
}

// Largest E[log q] over joints with the constrained marginals, and the cells a maximizer may use.
// Two-dimensional joints with single-axis constraints only.
struct MetricFace {
    double best = -kInf;
    std::vector<bool> cells;
};

inline std::optional<MetricFace> metric_face(const JointDist& base, const std::vector<double>& logq,
                                             const std::vector<MarginalConstraint>& cons) {
    if (base.shape.size() != 2) return std::nullopt;
    const int nr = base.shape[0], nc = base.shape[1];
    const std::vector<double>* rows = nullptr;
    const std::vector<double>* cols = nullptr;
    for (const auto& c : cons) {
        if (c.axes == std::vector<int>{0})
            rows = &c.target;
        else if (c.axes == std::vector<int>{1})
            cols = &c.target;
        else
            return std::nullopt;
    }
    Mat lq(nr, nc);
    std::vector<bool> ok(base.size(), false);
    double scale = 1.0;
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) {
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            lq(i, j) = logq[k];
            ok[k] = base.p[k] > 0.0 && std::isfinite(logq[k]) && (!rows || (*rows)[i] > 0.0) && (!cols || (*cols)[j] > 0.0);
            if (ok[k]) scale = std::max(scale, std::abs(logq[k]));
        }
    const double tol = 1e-11 * scale;
    MetricFace f;
    f.cells.assign(base.size(), false);
    if (rows && cols) {
        Vec a = Eigen::Map<const Vec>(rows->data(), nr), b = Eigen::Map<const Vec>(cols->data(), nc);
        Mat d(nr, nc);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) d(i, j) = ok[static_cast<std::size_t>(i) * nc + j] ? -lq(i, j) : 1e30;
        TransportResult t = transport_solve(a, b, d);
        if (t.cost > 1e20) return std::nullopt;
        f.best = -t.cost;
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * nc + j;
                f.cells[k] = ok[k] && t.reduced(i, j) <= tol;
            }
        // Keep only zero-reduced-cost cells that some coupling on them can actually load.
        f.cells = loadable_cells(a, b, f.cells);
        return f;
    }
    // At most one marginal: maximize cell by cell along the free axis.
    auto line_max = [&](int fixed_axis, int idx) {
        double mx = -kInf;
        const int len = fixed_axis == 0 ? nc : nr;
        for (int t = 0; t < len; ++t) {
            int i = fixed_axis == 0 ? idx : t, j = fixed_axis == 0 ? t : idx;
            if (ok[static_cast<std::size_t>(i) * nc + j]) mx = std::max(mx, lq(i, j));
        }
        return mx;
    };
    if (!rows && !cols) {
        double mx = -kInf;
        for (std::size_t k = 0; k < base.size(); ++k)
            if (ok[k]) mx = std::max(mx, logq[k]);
        f.best = mx;
        for (std::size_t k = 0; k < base.size(); ++k) f.cells[k] = ok[k] && logq[k] >= mx - tol;
        return f;
    }
    const int axis = rows ? 0 : 1;
    const auto& tgt = rows ? *rows : *cols;
    f.best = 0.0;
    for (int idx = 0; idx < (axis == 0 ? nr : nc); ++idx) {
        if (tgt[idx] <= 0.0) continue;
        double mx = line_max(axis, idx);
        if (!std::isfinite(mx)) return std::nullopt;
        f.best += tgt[idx] * mx;
        for (int t = 0; t < (axis == 0 ? nc : nr); ++t) {
            int i = axis == 0 ? idx : t, j = axis == 0 ? t : idx;
            std::size_t k = static_cast<std::size_t>(i) * nc + j;
            f.cells[k] = ok[k] && lq(i, j) >= mx - tol;
        }
    }
    return f;
}

}  // namespace detail

// KL minimizer of the form base * q^s * prod exp(shift) subject to fixed marginals and E[log q] >= target_mean.
inline IProjResult i_projection(const JointDist& base, const std::vector<double>& logq, std::optional<double> target_mean,
                                const std::vector<MarginalConstraint>& cons, IProjOptions opt = {}) {
    if (logq.size() != base.size() && target_mean) throw Error(ErrorKind::domain, "i_projection: metric size mismatch");
    // Cells no feasible coupling can load would only slow Sinkhorn down.
    if (auto pruned = detail::prune_to_loadable(base, logq, target_mean.has_value(), cons))
        return i_projection(*pruned, logq, target_mean, cons, opt);
    detail::Sinkhorn sk(base, logq, target_mean.has_value(), cons, opt);
    IProjResult r;
    int sweeps = 0;
    auto run = [&](double s) {
        int k = sk.solve(s);
        if (k < 0) {
            r.report.note = "Sinkhorn sweep cap reached";
            k = -k;
        }
        sweeps += k;
        return sk.mean();
    };
    double m0 = run(0.0);
    double s = 0.0;
    if (target_mean && m0 < *target_mean) {
        const double tgt = *target_mean;
        // A target at the largest reachable mean pins the solution to the face of maximizers.
        if (auto face = detail::metric_face(base, logq, cons)) {
            const double slack = 1e-10 * (1.0 + std::abs(face->best));
            if (tgt > face->best + std::max(opt.metric_tol, slack))
                throw Error(ErrorKind::infeasible, "i_projection: metric target " + std::to_string(tgt) +
                                                       " exceeds the largest reachable mean " + std::to_string(face->best));
            if (tgt >= face->best - slack) {
                JointDist restricted = base;
                for (std::size_t k = 0; k < base.size(); ++k)
                    if (!face->cells[k]) restricted.p[k] = 0.0;
                IProjResult fr = i_projection(restricted, logq, std::nullopt, cons, opt);
                fr.s = opt.s_cap;
                fr.active = true;
                fr.report.boundary = true;
                double e = 0.0;
                for (std::size_t k = 0; k < base.size(); ++k)
                    if (fr.p.p[k] > 0.0) e += fr.p.p[k] * logq[k];
                fr.metric_mean = e;
                return fr;
            }
        }
        double lo = 0.0, hi = 1.0, mlo = m0;
        double mhi = run(hi);
        while (mhi < tgt && hi < opt.s_cap) {
            lo = hi;
            mlo = mhi;
            hi = std::min(hi * 4.0, opt.s_cap);
            mhi = run(hi);
        }
        if (mhi < tgt) {
            if (mhi < tgt - opt.metric_tol)
                throw Error(ErrorKind::infeasible, "i_projection: metric target " + std::to_string(tgt) +
                                                       " outside achievable range [" + std::to_string(m0) + ", " +
                                                       std::to_string(mhi) + "]");
            s = hi;
            r.report.boundary = true;
        } else {
            std::uintmax_t it = 200;
            auto g = [&](double x) { return run(x) - tgt; };
            auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * (1.0 + std::abs(b)); };
            auto root = boost::math::tools::toms748_solve(g, lo, hi, mlo - tgt, mhi - tgt, tol, it);
            double a = root.first, b = root.second;
            double ga = g(a), gb = g(b);
            s = std::abs(ga) <= std::abs(gb) ? a : b;
            r.report.iterations = static_cast<int>(it);
        }
        run(s);
        r.active = true;
    }
    r.s = s;
    r.p = sk.dist();
    r.value = sk.divergence();
    r.metric_mean = sk.mean();
    r.shifts = sk.shifts();
    r.report.trace_length = static_cast<std::size_t>(sweeps);
    r.report.converged = r.report.note.empty();
    return r;
}

}  // namespace mismatch
