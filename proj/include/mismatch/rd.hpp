#pragma once

#include "info.hpp"
#include "iproj.hpp"
#include "transport.hpp"
#include "opt.hpp"
#include "problems.hpp"
#include "types.hpp"

#include <boost/math/tools/toms748_solve.hpp>

namespace mismatch {

inline double rd_min_distortion(const Vec& source, const Mat& d, const Vec& q_hat) {
    double v = 0.0;
    for (Eigen::Index x = 0; x < d.rows(); ++x) {
        double m = kInf;
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (q_hat(j) > 0.0) m = std::min(m, d(x, j));
        v += source(x) * m;
    }
    return v;
}

inline double rd_product_distortion(const Vec& source, const Mat& d, const Vec& q_hat) {
    return source.dot(d * q_hat);
}

namespace detail {

inline JointDist product_base(const Vec& a, const Vec& b) {
    return JointDist::from_matrix(a * b.transpose());
}

inline std::vector<double> neg_flat(const Mat& d) {
    JointDist t = JointDist::from_matrix(d);
    std::vector<double> v(t.p.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = -t.p[k];
    return v;
}

inline double expect(const JointDist& p, const Mat& d) { return (p.to_matrix().array() * d.array()).sum(); }

}  // namespace detail

// Coupling floor min E[d] with both marginals fixed.
inline double rd_coupling_floor(const Vec& source, const Mat& d, const Vec& q_hat) {
    return detail::transport_min(source, q_hat, d);
}

inline RateResult rd_iid_rate(const Vec& source, const Mat& d, const Vec& q_hat, double D) {
    const double dmin = rd_min_distortion(source, d, q_hat), dprod = rd_product_distortion(source, d, q_hat);
    if (!(D >= dmin - 1e-12) || !(D < dprod))
        throw Error(ErrorKind::domain, "rd_iid_rate: D=" + std::to_string(D) + " outside [D_min=" + std::to_string(dmin) +
                                           ", D_prod=" + std::to_string(dprod) + ")");
    auto f = [&](double s) {
        double v = -s * D;
        for (Eigen::Index x = 0; x < d.rows(); ++x) {
            if (source(x) <= 0.0) continue;
            double mx = -kInf;
            for (Eigen::Index j = 0; j < d.cols(); ++j)
                if (q_hat(j) > 0.0) mx = std::max(mx, -s * d(x, j));
            double acc = 0.0;
            for (Eigen::Index j = 0; j < d.cols(); ++j)
                if (q_hat(j) > 0.0) acc += q_hat(j) * std::exp(-s * d(x, j) - mx);
            v -= source(x) * (mx + std::log(acc));
        }
        return v;
    };
    Optimum1d opt = maximize_concave_1d(f, 0.0, 1e-12, kParamCap);
    RateResult r;
    r.value = std::max(0.0, opt.value);
    r.form = Form::dual;
    DualParams dp;
    dp.s = opt.x;
    r.certificate.dual = dp;
    r.report.boundary = opt.report.boundary;
    r.report.converged = true;

    JointDist base = detail::product_base(source, q_hat);
    std::vector<MarginalConstraint> cons{{{0}, std::vector<double>(source.data(), source.data() + source.size())}};
    try {
        IProjResult pr = i_projection(base, detail::neg_flat(d), -D, cons);
        r.gap = pr.value - r.value;
        r.certificate.joint = pr.p;
    } catch (const Error&) {
        r.report.note = "primal cross-check unavailable";
    }
    return r;
}

inline RateResult rd_cc_rate(const Vec& source, const Mat& d, const Vec& q_hat, double D) {
    RateResult r;
    r.form = Form::dual;
    const double floor = rd_coupling_floor(source, d, q_hat);
    if (D < floor - 1e-12) {
        r.value = kInf;
        r.infinite = true;
        r.report.converged = true;
        r.report.note = "D below the coupling floor " + std::to_string(floor);
        return r;
    }
    if (D >= rd_product_distortion(source, d, q_hat)) {
        r.report.converged = true;
        return r;
    }
    JointDist base = detail::product_base(source, q_hat);
    std::vector<MarginalConstraint> cons{{{0}, std::vector<double>(source.data(), source.data() + source.size())},
                                         {{1}, std::vector<double>(q_hat.data(), q_hat.data() + q_hat.size())}};
    IProjResult pr = i_projection(base, detail::neg_flat(d), -D, cons);

    // Dual over (s, b) with b restricted to supp(Q).
    std::vector<Eigen::Index> sup;
    for (Eigen::Index j = 0; j < q_hat.size(); ++j)
        if (q_hat(j) > 0.0) sup.push_back(j);
    const Eigen::Index k = static_cast<Eigen::Index>(sup.size());
    ConcaveFn fn = [&](const Vec& z, Vec* g, Mat* h) {
        const double s = z(0);
        double v = -s * D;
        if (g) g->setZero(k + 1);
        if (h) h->setZero(k + 1, k + 1);
        for (Eigen::Index j = 0; j < k; ++j) {
            v += q_hat(sup[j]) * z(1 + j);
            if (g) (*g)(1 + j) += q_hat(sup[j]);
        }
        if (g) (*g)(0) -= D;
        Vec e(k), feat(k + 1);
        for (Eigen::Index x = 0; x < d.rows(); ++x) {
            if (source(x) <= 0.0) continue;
            double mx = -kInf;
            for (Eigen::Index j = 0; j < k; ++j) {
                e(j) = -s * d(x, sup[j]) + z(1 + j) + std::log(q_hat(sup[j]));
                mx = std::max(mx, e(j));
            }
            Vec w = (e.array() - mx).exp();
            double tot = w.sum();
            w /= tot;
            v -= source(x) * (mx + std::log(tot));
            if (!g && !h) continue;
            Vec mean = Vec::Zero(k + 1);
            Mat sec = Mat::Zero(k + 1, k + 1);
            for (Eigen::Index j = 0; j < k; ++j) {
                feat.setZero();
                feat(0) = -d(x, sup[j]);
                feat(1 + j) = 1.0;
                mean += w(j) * feat;
                if (h) sec += w(j) * feat * feat.transpose();
            }
            if (g) *g -= source(x) * mean;
            if (h) *h -= source(x) * (sec - mean * mean.transpose());
        }
        return v;
    };
    AscentOptions ao;
    ao.tol = 1e-11;
    ao.lower = Vec::Constant(k + 1, -kInf);
    ao.lower(0) = 0.0;
    ao.upper = Vec::Constant(k + 1, kInf);
    ao.upper(0) = kParamCap;
    Vec z0 = Vec::Zero(k + 1);
    z0(0) = pr.s;
    for (Eigen::Index j = 0; j < k && !pr.shifts.empty() && pr.shifts.size() > 1; ++j) z0(1 + j) = pr.shifts[1][sup[j]];
    AscentResult ar = ascend_concave(fn, z0, ao);

    r.value = std::max(0.0, ar.value);
    DualParams dp;
    dp.s = ar.x(0);
    dp.b = Vec::Zero(q_hat.size());
    for (Eigen::Index j = 0; j < k; ++j) dp.b(sup[j]) = ar.x(1 + j);
    r.certificate.dual = dp;
    r.certificate.joint = pr.p;
    r.gap = pr.value - ar.value;
    r.report = ar.report;
    if (pr.report.boundary) r.report.boundary = true;
    return r;
}

inline RateResult rd_iid_rate(const RdProblem& p, double D) { return rd_iid_rate(p.source.p, p.d1, p.q_hat.p, D); }
inline RateResult rd_cc_rate(const RdProblem& p, double D) { return rd_cc_rate(p.source.p, p.d1, p.q_hat.p, D); }

struct RdCurvePoint {
    double rate = 0.0;
    double distortion = 0.0;
    Vec q_hat;
};

namespace detail {

// Blahut iteration at slope s; returns (R, D, Q_Xhat).
inline RdCurvePoint blahut_rd(const Vec& source, const Mat& d, double s, double tol = 1e-14, int cap = 200000) {
    const Eigen::Index nx = d.rows(), nh = d.cols();
    Vec q = Vec::Constant(nh, 1.0 / static_cast<double>(nh));
    Mat cond(nx, nh);
    auto conditional = [&]() {
        for (Eigen::Index x = 0; x < nx; ++x) {
            double mx = -kInf;
            for (Eigen::Index j = 0; j < nh; ++j)
                if (q(j) > 0.0) mx = std::max(mx, -s * d(x, j));
            for (Eigen::Index j = 0; j < nh; ++j) cond(x, j) = q(j) > 0.0 ? q(j) * std::exp(-s * d(x, j) - mx) : 0.0;
            cond.row(x) /= cond.row(x).sum();
        }
    };
    for (int it = 0; it < cap; ++it) {
        conditional();
        Vec qn = (source.transpose() * cond).transpose();
        for (Eigen::Index j = 0; j < nh; ++j)
            if (qn(j) < 1e-300) qn(j) = 0.0;
        double change = (qn - q).cwiseAbs().maxCoeff();
        q = qn / qn.sum();
        if (change < tol) break;
    }
    conditional();
    Mat joint = source.asDiagonal() * cond;
    return {mutual_information(joint), (joint.array() * d.array()).sum(), q};
}

}  // namespace detail

// Classical rate-distortion function via Blahut iterations with slope bisection.
inline double matched_rd(const Vec& source, const Mat& d, double D) {
    Vec ones = Vec::Ones(d.cols());
    const double dmin = rd_min_distortion(source, d, ones);
    if (D < dmin - 1e-12) throw Error(ErrorKind::domain, "matched_rd: D below the minimum distortion " + std::to_string(dmin));
    double dmax = kInf;
    for (Eigen::Index j = 0; j < d.cols(); ++j) dmax = std::min(dmax, source.dot(d.col(j)));
    if (D >= dmax) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (detail::blahut_rd(source, d, hi).distortion > D && hi < 1e6) {
        lo = hi;
        hi *= 2.0;
    }
    if (detail::blahut_rd(source, d, hi).distortion > D + 1e-9) return detail::blahut_rd(source, d, hi).rate;
    for (int it = 0; it < 100 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (detail::blahut_rd(source, d, mid).distortion > D)
            lo = mid;
        else
            hi = mid;
    }
    // Rate is convex in D; interpolate between the bracketing slopes.
    RdCurvePoint a = detail::blahut_rd(source, d, lo), b = detail::blahut_rd(source, d, hi);
    if (std::abs(a.distortion - b.distortion) < 1e-15) return b.rate;
    double t = (a.distortion - D) / (a.distortion - b.distortion);
    return (1.0 - t) * a.rate + t * b.rate;
}

struct DistortionResult {
    double value = 0.0;     // stage-2 E[d1]
    double stage1 = 0.0;    // v* = min E[d0]
    double eps = 0.0;
    JointDist coupling;
    SolveReport report;
};

// Two-stage achievable distortion: maximize E[d1] over the (eps-relaxed) set of stage-1 minimizers.
inline DistortionResult mismatched_distortion(const RdProblem& p, double R, std::optional<double> eps = std::nullopt) {
    if (!(R >= 0.0)) throw Error(ErrorKind::domain, "mismatched_distortion: R must be >= 0");
    const Vec& pi = p.source.p;
    const Vec& qh = p.q_hat.p;
    JointDist base = detail::product_base(pi, qh);
    std::vector<MarginalConstraint> cons{{{0}, std::vector<double>(pi.data(), pi.data() + pi.size())},
                                         {{1}, std::vector<double>(qh.data(), qh.data() + qh.size())}};
    const auto lq0 = detail::neg_flat(p.d0);
    const double floor = rd_coupling_floor(pi, p.d0, qh);
    const double dprod = rd_product_distortion(pi, p.d0, qh);

    auto rate_at = [&](double D) { return i_projection(base, lq0, -D, cons).value; };
    double vstar;
    if (R <= 0.0 || dprod - floor < 1e-14)
        vstar = R <= 0.0 ? dprod : floor;
    else {
        double r_floor;
        try {
            r_floor = rate_at(floor);
        } catch (const Error&) {
            r_floor = kInf;
        }
        if (r_floor <= R)
            vstar = floor;
        else {
            std::uintmax_t it = 200;
            auto g = [&](double D) { return rate_at(D) - R; };
            double lo = floor + 1e-13 * (1.0 + std::abs(floor));
            auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14 * (1.0 + std::abs(b)); };
            auto root = boost::math::tools::toms748_solve(g, lo, dprod, g(lo), -R, tol, it);
            vstar = root.second;
        }
    }
    DistortionResult out;
    out.stage1 = vstar;
    out.eps = eps.value_or(1e-7 * (1.0 + std::abs(vstar)));
    const double cap_d0 = vstar + out.eps;

    // Couplings proportional to base * exp(-s d0 + t d1) with s placed so that E[d0] = v* + eps.
    struct Probe {
        bool ok = false;
        double rate = 0.0, d1 = 0.0;
        JointDist p;
    };
    auto probe = [&](double t) {
        Probe pr;
        JointDist b = base;
        JointDist dt = JointDist::from_matrix(p.d1);
        double mx = 0.0;
        for (std::size_t k = 0; k < b.p.size(); ++k) mx = std::max(mx, t * dt.p[k]);
        for (std::size_t k = 0; k < b.p.size(); ++k) b.p[k] *= std::exp(t * dt.p[k] - mx);
        double tot = 0.0;
        for (double v : b.p) tot += v;
        for (double& v : b.p) v /= tot;
        try {
            IProjResult ip = i_projection(b, lq0, -cap_d0, cons);
            pr.p = ip.p;
            pr.rate = mutual_information(ip.p);
            pr.d1 = detail::expect(ip.p, p.d1);
            pr.ok = pr.rate <= R + 1e-9 && detail::expect(ip.p, p.d0) <= cap_d0 + 1e-9;
        } catch (const Error&) {
        }
        return pr;
    };
    Probe best = probe(0.0);
    if (!best.ok) {
        // Relaxed face is thinner than the solver resolution; fall back to the stage-1 coupling.
        IProjResult ip = i_projection(base, lq0, -vstar, cons);
        best.p = ip.p;
        best.d1 = detail::expect(ip.p, p.d1);
        best.ok = true;
        out.report.note = "stage-2 face below resolution";
    }
    double lo = 0.0, hi = 1.0;
    Probe ph = probe(hi);
    while (ph.ok && hi < 1048576.0) {
        if (ph.d1 > best.d1) best = ph;
        lo = hi;
        hi *= 2.0;
        ph = probe(hi);
    }
    if (!ph.ok) {
        for (int it = 0; it < 60 && hi - lo > 1e-9 * (1.0 + lo); ++it) {
            double mid = 0.5 * (lo + hi);
            Probe pm = probe(mid);
            if (pm.ok) {
                lo = mid;
                if (pm.d1 > best.d1) best = pm;
            } else
                hi = mid;
        }
    } else if (ph.d1 > best.d1) {
        best = ph;
        out.report.boundary = true;
    }
    out.value = best.d1;
    out.coupling = best.p;
    out.report.converged = true;
    return out;
}

// Gaussian codebook for a source of variance sigma2: rate [1/2 log(sigma2/D)]+ with shell power [sigma2 - D]+.
struct GaussianRd {
    double rate = 0.0;
    double power = 0.0;
};

inline GaussianRd gaussian_rd_rate(double sigma2, double D) {
    if (!(sigma2 > 0.0) || !(D > 0.0)) throw Error(ErrorKind::domain, "gaussian_rd_rate: sigma2 and D must be positive");
    if (D >= sigma2) return {0.0, 0.0};
    return {0.5 * std::log(sigma2 / D), sigma2 - D};
}

}  // namespace mismatch
