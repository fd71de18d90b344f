#pragma once

#include "info.hpp"
#include "types.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>

namespace mismatch {

inline constexpr double kParamCap = 1099511627776.0;  // 2^40

struct Optimum1d {
    double x = 0.0;
    double value = 0.0;
    SolveReport report;
};

namespace detail {

inline double checked(double v) {
    if (std::isnan(v)) throw Error(ErrorKind::domain, "objective returned NaN");
    return v;
}

inline int bits_for(double tol, double scale) {
    double rel = tol / std::max(1.0, std::abs(scale));
    int b = static_cast<int>(std::ceil(-std::log2(std::max(rel, 1e-16))));
    return std::clamp(b, 8, std::numeric_limits<double>::digits / 2);
}

}  // namespace detail

// Maximum of a concave function on [lo, hi].
inline Optimum1d maximize_on_interval(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10) {
    std::uintmax_t iters = 200;
    auto neg = [&](double x) { return -detail::checked(f(x)); };
    auto r = boost::math::tools::brent_find_minima(neg, lo, hi, detail::bits_for(tol, hi), iters);
    Optimum1d out;
    out.x = r.first;
    out.value = -r.second;
    double flo = f(lo), fhi = f(hi);
    if (flo > out.value) out = {lo, flo, {}};
    if (fhi > out.value) out = {hi, fhi, {}};
    out.report.iterations = static_cast<int>(iters);
    out.report.converged = true;
    return out;
}

// Concave maximization on [lo, inf): doubling bracket then Brent refinement.
inline Optimum1d maximize_concave_1d(const std::function<double(double)>& f, double lo = 0.0, double tol = 1e-10,
                                     double cap = kParamCap) {
    double h = 1.0;
    double a = lo, b = lo + h;
    double fa = detail::checked(f(a)), fb = detail::checked(f(b));
    int doublings = 0;
    if (fb < fa) {
        Optimum1d r = maximize_on_interval(f, a, b, tol);
        return r;
    }
    double c = lo + 2.0 * h, fc = detail::checked(f(c));
    while (fc >= fb) {
        if (c >= cap) {
            Optimum1d r{c, fc, {}};
            r.report.boundary = true;
            r.report.converged = true;
            r.report.iterations = doublings;
            return r;
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        h *= 2.0;
        c = std::min(lo + 2.0 * h, cap);
        fc = detail::checked(f(c));
        ++doublings;
    }
    Optimum1d r = maximize_on_interval(f, a, c, tol);
    r.report.iterations += doublings;
    return r;
}

// Objective with optional gradient and Hessian outputs.
using ConcaveFn = std::function<double(const Vec&, Vec*, Mat*)>;

struct AscentOptions {
    double tol = 1e-10;
    int max_iter = 500;
    bool hessian = true;
    Vec lower;
    Vec upper;
};

struct AscentResult {
    Vec x;
    double value = 0.0;
    Vec grad;
    SolveReport report;
};

namespace detail {

inline Mat fd_hessian(const ConcaveFn& f, const Vec& x) {
    Eigen::Index n = x.size();
    Mat h(n, n);
    Vec gp(n), gm(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double e = 1e-5 * (1.0 + std::abs(x(i)));
        Vec xp = x, xm = x;
        xp(i) += e;
        xm(i) -= e;
        f(xp, &gp, nullptr);
        f(xm, &gm, nullptr);
        h.col(i) = (gp - gm) / (2.0 * e);
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace detail

// Projected Newton ascent with Levenberg damping and Armijo backtracking on a box.
inline AscentResult ascend_concave(const ConcaveFn& f, Vec x0, AscentOptions opt = {}) {
    const Eigen::Index n = x0.size();
    Vec lo = opt.lower.size() == n ? opt.lower : Vec::Constant(n, -kInf);
    Vec hi = opt.upper.size() == n ? opt.upper : Vec::Constant(n, kInf);
    auto project = [&](Vec v) {
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::clamp(v(i), lo(i), hi(i));
        return v;
    };
    AscentResult res;
    res.x = project(std::move(x0));
    Vec g(n);
    Mat h(n, n);
    res.value = detail::checked(f(res.x, &g, opt.hessian ? &h : nullptr));
    double lambda = 1e-12;
    int flat = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        res.report.iterations = it;
        std::vector<Eigen::Index> free;
        double pg = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            bool at_lo = res.x(i) <= lo(i) && g(i) <= 0.0;
            bool at_hi = res.x(i) >= hi(i) && g(i) >= 0.0;
            if (!at_lo && !at_hi) {
                free.push_back(i);
                pg = std::max(pg, std::abs(g(i)));
            }
        }
        if (pg <= opt.tol) {
            res.report.converged = true;
            break;
        }
        if (!opt.hessian) h = detail::fd_hessian(f, res.x);
        const Eigen::Index m = static_cast<Eigen::Index>(free.size());
        Mat hf(m, m);
        Vec gf(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            gf(i) = g(free[i]);
            for (Eigen::Index j = 0; j < m; ++j) hf(i, j) = -h(free[i], free[j]);
        }
        double scale = std::max(1e-300, hf.diagonal().cwiseAbs().maxCoeff());
        Vec d;
        for (int tries = 0; tries < 40; ++tries) {
            Mat a = hf + (lambda * scale) * Mat::Identity(m, m);
            Eigen::LLT<Mat> llt(a);
            if (llt.info() == Eigen::Success) {
                d = llt.solve(gf);
                if (d.allFinite() && d.dot(gf) > 0.0) break;
            }
            lambda = std::max(lambda * 10.0, 1e-12);
            d.resize(0);
        }
        if (d.size() == 0) d = gf;
        Vec dir = Vec::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i) dir(free[i]) = d(i);

        double t = 1.0;
        bool accepted = false;
        Vec xn, gn(n);
        Mat hn(n, n);
        double fn = 0.0;
        for (int bt = 0; bt < 50; ++bt) {
            xn = project(res.x + t * dir);
            fn = f(xn, &gn, opt.hessian ? &hn : nullptr);
            double pred = g.dot(xn - res.x);
            if (std::isfinite(fn) && fn >= res.value + 1e-4 * pred) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (lambda < 1e6) {
                lambda = std::max(lambda * 100.0, 1e-8);
                continue;
            }
            res.report.stalled = true;
            res.report.note = "line search failed";
            break;
        }
        res.report.step = t;
        double gain = fn - res.value;
        res.x = xn;
        res.value = fn;
        g = gn;
        if (opt.hessian) h = hn;
        lambda = std::max(lambda * 0.1, 1e-12);
        flat = gain <= 1e-15 * (1.0 + std::abs(fn)) ? flat + 1 : 0;
        if (flat >= 5) {
            res.report.converged = true;
            res.report.note = "objective flat at machine precision";
            break;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::isfinite(hi(i)) && res.x(i) >= hi(i)) res.report.boundary = true;
    res.grad = g;
    return res;
}

struct FwResult {
    Vec x;
    double value = 0.0;
    double gap = kInf;
    double best = kInf;
    SolveReport report;
};

// Conditional gradient with step 2/(t+2); stops when the duality gap is below tol.
inline FwResult frank_wolfe_min(const std::function<double(const Vec&)>& obj, const std::function<Vec(const Vec&)>& grad,
                                const std::function<Vec(const Vec&)>& lp_oracle, Vec x0, double tol = 1e-7,
                                int cap = 20000, bool line_search = false) {
    FwResult r;
    r.x = std::move(x0);
    r.value = obj(r.x);
    r.best = r.value;
    for (int t = 0; t < cap; ++t) {
        Vec g = grad(r.x);
        Vec s = lp_oracle(g);
        if (s.size() != r.x.size()) throw Error(ErrorKind::infeasible, "frank_wolfe_min: oracle infeasible");
        Vec d = s - r.x;
        r.gap = -g.dot(d);
        r.report.iterations = t;
        ++r.report.trace_length;
        if (r.gap <= tol) {
            r.report.converged = true;
            break;
        }
        double step = 2.0 / (t + 2.0);
        if (line_search) {
            auto phi = [&](double a) { return obj(r.x + a * d); };
            std::uintmax_t it = 60;
            step = boost::math::tools::brent_find_minima(phi, 0.0, 1.0, 30, it).first;
        }
        r.x += step * d;
        r.value = obj(r.x);
        r.best = std::min(r.best, r.value);
        r.report.step = step;
    }
    return r;
}

struct SimplexBlock {
    Eigen::Index off = 0, size = 0;
};

// Euclidean projection onto the probability simplex.
inline Vec project_simplex(const Vec& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    Vec out = (v.array() - theta).cwiseMax(0.0);
    return out / out.sum();
}

// Spectral projected gradient over a product of simplices with a nonmonotone Armijo search.
// Stops when the conditional-gradient duality gap drops below tol.
inline FwResult simplex_spg_min(const std::function<double(const Vec&)>& obj, const std::function<Vec(const Vec&)>& grad,
                                const std::vector<SimplexBlock>& blocks, Vec x0, double tol = 1e-9, int cap = 5000) {
    auto project = [&](const Vec& v) {
        Vec p = v;
        for (const auto& b : blocks) p.segment(b.off, b.size) = project_simplex(v.segment(b.off, b.size));
        return p;
    };
    auto fw_gap = [&](const Vec& x, const Vec& g) {
        double gap = 0.0;
        for (const auto& b : blocks) gap += g.segment(b.off, b.size).dot(x.segment(b.off, b.size)) - g.segment(b.off, b.size).minCoeff();
        return gap;
    };
    constexpr int kMemory = 10;
    constexpr double kArmijo = 1e-4, kLamMin = 1e-12, kLamMax = 1e12;
    FwResult r;
    r.x = project(x0);
    r.value = obj(r.x);
    r.best = r.value;
    Vec g = grad(r.x);
    std::deque<double> recent{r.value};
    double lam = 1.0 / std::max(1e-12, (project(r.x - g) - r.x).cwiseAbs().maxCoeff());
    for (int t = 0; t < cap; ++t) {
        r.gap = fw_gap(r.x, g);
        r.report.iterations = t;
        ++r.report.trace_length;
        if (r.gap <= tol) {
            r.report.converged = true;
            break;
        }
        Vec d = project(r.x - lam * g) - r.x;
        const double slope = g.dot(d);
        const double ref = *std::max_element(recent.begin(), recent.end());
        double alpha = 1.0, fnew = obj(r.x + d);
        while (fnew > ref + kArmijo * alpha * slope && alpha > 1e-16) {
            double trial = -0.5 * slope * alpha * alpha / (fnew - r.value - alpha * slope);
            alpha = (trial >= 0.1 * alpha && trial <= 0.5 * alpha) ? trial : 0.5 * alpha;
            fnew = obj(r.x + alpha * d);
        }
        if (alpha <= 1e-16 || slope >= 0.0) {
            r.report.stalled = true;
            break;
        }
        Vec xn = r.x + alpha * d;
        Vec gn = grad(xn);
        const Vec sv = xn - r.x, yv = gn - g;
        const double sy = sv.dot(yv);
        lam = sy > 0.0 ? std::clamp(sv.squaredNorm() / sy, kLamMin, kLamMax) : kLamMax;
        r.x = std::move(xn);
        g = std::move(gn);
        r.value = fnew;
        r.best = std::min(r.best, r.value);
        r.report.step = alpha;
        recent.push_back(fnew);
        if (static_cast<int>(recent.size()) > kMemory) recent.pop_front();
    }
    return r;
}

struct Piece {
    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> grad;
};

struct SubgradientResult {
    Vec x;
    double value = kInf;
    SolveReport report;
};

// Projected subgradient on max of convex pieces, step c/sqrt(t), best iterate kept.
// With entropic = true the step is multiplicative and `project` is a Bregman projection.
inline SubgradientResult subgradient_min_max(const std::vector<Piece>& pieces, const std::function<Vec(const Vec&)>& project,
                                             Vec x0, double tol = 1e-6, int cap = 20000, bool entropic = false) {
    SubgradientResult r;
    Vec x = project(x0);
    auto eval = [&](const Vec& v, std::size_t* arg) {
        double best = -kInf;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            double fv = pieces[k].f(v);
            if (fv > best) {
                best = fv;
                *arg = k;
            }
        }
        return best;
    };
    std::size_t arg = 0;
    double fx = eval(x, &arg);
    r.x = x;
    r.value = fx;
    Vec g0 = pieces[arg].grad(x);
    double c = 1.0 / std::max(1e-12, entropic ? g0.cwiseAbs().maxCoeff() : g0.norm());
    int since_best = 0;
    for (int t = 1; t <= cap; ++t) {
        r.report.iterations = t;
        Vec g = pieces[arg].grad(x);
        double step = c / std::sqrt(static_cast<double>(t));
        if (entropic) {
            Vec y = x;
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = x(i) * std::exp(-step * g(i));
            x = project(y);
        } else {
            x = project(x - step * g);
        }
        fx = eval(x, &arg);
        if (fx < r.value - tol * 1e-3) {
            since_best = 0;
        } else {
            ++since_best;
        }
        if (fx < r.value) {
            r.value = fx;
            r.x = x;
        }
        if (step * g.norm() < tol && since_best > 50) {
            r.report.converged = true;
            break;
        }
    }
    return r;
}

struct CapacityResult {
    double capacity = 0.0;
    Vec input;
    double lower = 0.0;
    double upper = kInf;
    SolveReport report;
};

namespace detail {

inline void capacity_divergences(const Mat& v, const Vec& q, Vec& dx) {
    Vec py = (q.transpose() * v).transpose();
    dx.resize(v.rows());
    for (Eigen::Index x = 0; x < v.rows(); ++x) {
        double d = 0.0;
        for (Eigen::Index y = 0; y < v.cols(); ++y) d += xlogx_ratio(v(x, y), py(y));
        dx(x) = d;
    }
}

// Two inputs: the derivative D(V_0||P) - D(V_1||P) is decreasing in Q(0); solve for its root.
inline CapacityResult binary_input_capacity(const Mat& v, double tol) {
    CapacityResult r;
    Vec dx;
    auto slope = [&](double a) {
        capacity_divergences(v, Vec((Vec(2) << a, 1.0 - a).finished()), dx);
        return dx(0) - dx(1);
    };
    double a = 0.0;
    double s0 = slope(0.0), s1 = slope(1.0);
    if (s1 >= 0.0)
        a = 1.0;
    else if (s0 > 0.0) {
        std::uintmax_t it = 200;
        auto stop = [](double lo, double hi) { return hi - lo <= 1e-16; };
        auto root = boost::math::tools::toms748_solve(slope, 0.0, 1.0, s0, s1, stop, it);
        a = std::abs(slope(root.first)) <= std::abs(slope(root.second)) ? root.first : root.second;
        r.report.iterations = static_cast<int>(it);
    }
    Vec q(2);
    q << a, 1.0 - a;
    capacity_divergences(v, q, dx);
    r.lower = q.dot(dx);
    r.upper = dx.maxCoeff();
    r.input = q;
    r.report.converged = r.upper - r.lower <= std::max(tol, 1e-13);
    r.capacity = r.report.converged ? r.lower : 0.5 * (r.lower + r.upper);
    return r;
}

}  // namespace detail

// Alternating maximization with the standard capacity bracket; binary inputs are solved by root finding.
inline CapacityResult blahut_arimoto_capacity(const Mat& v, double tol = 1e-12, int cap = 200000,
                                              const Vec* start = nullptr) {
    const Eigen::Index nx = v.rows(), ny = v.cols();
    if (nx == 2) {
        CapacityResult b = detail::binary_input_capacity(v, tol);
        if (b.report.converged) return b;
    }
    Vec q = start && start->size() == nx ? *start : Vec::Constant(nx, 1.0 / nx);
    CapacityResult r;
    Vec dx(nx);
    for (int it = 0; it < cap; ++it) {
        Vec py = (q.transpose() * v).transpose();
        for (Eigen::Index x = 0; x < nx; ++x) {
            double d = 0.0;
            for (Eigen::Index y = 0; y < ny; ++y) d += xlogx_ratio(v(x, y), py(y));
            dx(x) = d;
        }
        double lower = q.dot(dx);
        double upper = dx.maxCoeff();
        r.lower = lower;
        r.upper = upper;
        r.report.iterations = it;
        if (upper - lower <= tol) {
            r.report.converged = true;
            break;
        }
        Vec nq(nx);
        double mx = dx.maxCoeff();
        for (Eigen::Index x = 0; x < nx; ++x) nq(x) = q(x) * std::exp(dx(x) - mx);
        q = nq / nq.sum();
    }
    r.capacity = 0.5 * (r.lower + r.upper);
    if (r.report.converged) r.capacity = r.lower;
    r.input = q;
    return r;
}

}  // namespace mismatch
