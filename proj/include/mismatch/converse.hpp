#pragma once

#include "metric_ops.hpp"
#include "opt.hpp"
#include "types.hpp"

namespace mismatch {

// sets[y][ybar]: inputs maximizing log q(x,ybar) - log q(x,y).
struct MaximalSets {
    int nx = 0, ny = 0;
    std::vector<std::vector<std::vector<int>>> sets;
    std::vector<std::vector<std::vector<bool>>> member;  // [y][ybar][x]

    bool contains(int y, int yb, int x) const { return member[y][yb][x]; }
};

inline constexpr double kMaximalTieTol = 1e-12;

inline MaximalSets maximal_input_sets(const Metric& m) {
    const int nx = m.nx(), ny = m.ny();
    MaximalSets ms;
    ms.nx = nx;
    ms.ny = ny;
    ms.sets.assign(ny, std::vector<std::vector<int>>(ny));
    ms.member.assign(ny, std::vector<std::vector<bool>>(ny, std::vector<bool>(nx, false)));
    for (int y = 0; y < ny; ++y)
        for (int yb = 0; yb < ny; ++yb) {
            std::vector<double> score(nx);
            std::vector<bool> excluded(nx, false);
            double best = -kInf;
            bool any = false;
            for (int x = 0; x < nx; ++x) {
                double a = m.q(x, y), b = m.q(x, yb);
                if (a == 0.0 && b == 0.0) {
                    excluded[x] = true;
                    continue;
                }
                if (a == 0.0)
                    score[x] = kInf;
                else if (b == 0.0)
                    score[x] = -kInf;
                else
                    score[x] = std::log(b) - std::log(a);
                if (!any || score[x] > best) best = score[x];
                any = true;
            }
            auto& s = ms.sets[y][yb];
            for (int x = 0; x < nx; ++x) {
                bool in;
                if (!any)
                    in = true;
                else if (excluded[x])
                    in = false;
                else if (std::isinf(best))
                    in = score[x] == best;
                else
                    in = score[x] >= best - kMaximalTieTol;
                if (in) {
                    s.push_back(x);
                    ms.member[y][yb][x] = true;
                }
            }
        }
    return ms;
}

// P(y, ybar | x) stored as p[x](y, ybar).
struct MaximalJoint {
    std::vector<Mat> p;

    Mat marginal_ybar() const {
        Mat v(static_cast<Eigen::Index>(p.size()), p.empty() ? 0 : p[0].cols());
        for (std::size_t x = 0; x < p.size(); ++x) v.row(static_cast<Eigen::Index>(x)) = p[x].colwise().sum();
        return v;
    }
    Mat marginal_y() const {
        Mat v(static_cast<Eigen::Index>(p.size()), p.empty() ? 0 : p[0].rows());
        for (std::size_t x = 0; x < p.size(); ++x) v.row(static_cast<Eigen::Index>(x)) = p[x].rowwise().sum().transpose();
        return v;
    }
};

inline bool verify_maximal(const MaximalJoint& pj, const Metric& m, const Dmc& w, double tol = 1e-9) {
    if (static_cast<int>(pj.p.size()) != w.nx() || m.nx() != w.nx() || m.ny() != w.ny()) return false;
    MaximalSets ms = maximal_input_sets(m);
    for (int x = 0; x < w.nx(); ++x) {
        const Mat& px = pj.p[x];
        if (px.rows() != w.ny() || px.cols() != w.ny()) return false;
        for (int y = 0; y < w.ny(); ++y) {
            if (std::abs(px.row(y).sum() - w.w(x, y)) > tol) return false;
            for (int yb = 0; yb < w.ny(); ++yb) {
                if (px(y, yb) < -tol) return false;
                if (!ms.contains(y, yb, x) && px(y, yb) > tol) return false;
            }
        }
    }
    return true;
}

struct ConverseResult {
    double value = 0.0;  // nats
    MaximalJoint witness;
    Vec input;
    double gap = kInf;
    SolveReport report;
};

namespace detail {

inline std::vector<std::vector<std::vector<int>>> allowed_ybar(const Dmc& w, const MaximalSets& ms) {
    std::vector<std::vector<std::vector<int>>> al(w.nx(), std::vector<std::vector<int>>(w.ny()));
    for (int x = 0; x < w.nx(); ++x)
        for (int y = 0; y < w.ny(); ++y) {
            if (w.w(x, y) <= 0.0) continue;
            for (int yb = 0; yb < w.ny(); ++yb)
                if (ms.contains(y, yb, x)) al[x][y].push_back(yb);
            if (al[x][y].empty())
                throw Error(ErrorKind::infeasible, "single_letter_upper_bound: no maximal ybar for x=" + std::to_string(x) +
                                                       ", y=" + std::to_string(y));
        }
    return al;
}

// d C(V) / d V(ybar|x) at the capacity-achieving input, with the 0 log 0 conventions.
inline Mat capacity_gradient(const Mat& v, const Vec& qstar) {
    Vec py = (qstar.transpose() * v).transpose();
    Mat g = Mat::Zero(v.rows(), v.cols());
    for (Eigen::Index x = 0; x < v.rows(); ++x) {
        if (qstar(x) <= 0.0) continue;
        for (Eigen::Index y = 0; y < v.cols(); ++y) {
            if (py(y) <= 0.0)
                g(x, y) = -qstar(x) * std::log(qstar(x));
            else if (v(x, y) <= 0.0)
                g(x, y) = qstar(x) * std::log(1e-300 / py(y));
            else
                g(x, y) = qstar(x) * std::log(v(x, y) / py(y));
        }
    }
    return g;
}

}  // namespace detail

inline ConverseResult single_letter_upper_bound(const Dmc& w, const Metric& m, double tol = 1e-8, int cap = 5000) {
    if (m.nx() != w.nx() || m.ny() != w.ny()) throw Error(ErrorKind::domain, "single_letter_upper_bound: shape mismatch");
    const int nx = w.nx(), ny = w.ny();
    MaximalSets ms = maximal_input_sets(m);
    auto allowed = detail::allowed_ybar(w, ms);

    // Variables: for each (x,y) with W>0, a distribution over its allowed ybar values.
    struct Slot {
        int x, y;
        std::vector<int> yb;
        Eigen::Index off;
    };
    std::vector<Slot> slots;
    Eigen::Index n = 0;
    for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y)
            if (w.w(x, y) > 0.0) {
                slots.push_back({x, y, allowed[x][y], n});
                n += static_cast<Eigen::Index>(allowed[x][y].size());
            }
    auto to_v = [&](const Vec& z) {
        Mat v = Mat::Zero(nx, ny);
        for (const auto& s : slots)
            for (std::size_t k = 0; k < s.yb.size(); ++k) v(s.x, s.yb[k]) += w.w(s.x, s.y) * z(s.off + k);
        return v;
    };
    Vec z = Vec::Zero(n);
    for (const auto& s : slots) {
        auto it = std::find(s.yb.begin(), s.yb.end(), s.y);
        z(s.off + (it == s.yb.end() ? 0 : it - s.yb.begin())) = 1.0;
    }
    Vec warm;
    auto capacity = [&](const Vec& zz, Vec* qstar) {
        Mat v = to_v(zz);
        CapacityResult c = blahut_arimoto_capacity(v, 1e-13, 200000, warm.size() ? &warm : nullptr);
        warm = c.input;
        if (qstar) *qstar = c.input;
        return c.upper;  // conservative side of the bracket
    };
    auto obj = [&](const Vec& zz) { return capacity(zz, nullptr); };
    auto grad = [&](const Vec& zz) {
        Vec qstar;
        capacity(zz, &qstar);
        Mat gv = detail::capacity_gradient(to_v(zz), qstar);
        Vec g = Vec::Zero(n);
        for (const auto& s : slots)
            for (std::size_t k = 0; k < s.yb.size(); ++k) g(s.off + k) = w.w(s.x, s.y) * gv(s.x, s.yb[k]);
        return g;
    };
    std::vector<SimplexBlock> blocks;
    for (const auto& s : slots) blocks.push_back({s.off, static_cast<Eigen::Index>(s.yb.size())});
    auto lp_oracle = [&](const Vec& g) {
        Vec s = Vec::Zero(n);
        for (const auto& b : blocks) {
            Eigen::Index k;
            g.segment(b.off, b.size).minCoeff(&k);
            s(b.off + k) = 1.0;
        }
        return s;
    };
    constexpr int kFwBudget = 300;
    FwResult fw = frank_wolfe_min(obj, grad, lp_oracle, z, tol, std::min(cap, kFwBudget), true);
    if (!fw.report.converged) {
        const int used = fw.report.iterations + 1;
        fw = simplex_spg_min(obj, grad, blocks, fw.x, tol, std::max(1, cap - used));
        fw.report.iterations += used;
        fw.report.note = "projected-gradient continuation";
    }

    ConverseResult out;
    Mat v = to_v(fw.x);
    CapacityResult c = blahut_arimoto_capacity(v, 1e-13);
    out.value = c.upper;
    out.input = c.input;
    out.gap = fw.gap;
    out.report = fw.report;
    if (!fw.report.converged) out.report.note = "upper bound on the single-letter bound (duality gap above tolerance)";
    out.witness.p.assign(nx, Mat::Zero(ny, ny));
    for (const auto& s : slots)
        for (std::size_t k = 0; k < s.yb.size(); ++k) out.witness.p[s.x](s.y, s.yb[k]) = w.w(s.x, s.y) * fw.x(s.off + k);
    return out;
}

struct MultiletterCheck {
    double single = 0.0;
    double k_normalized = 0.0;
    double difference = 0.0;
};

inline MultiletterCheck multiletter_bound_check(const Dmc& w, const Metric& m, int k = 2, double tol = 1e-8) {
    auto [wk, mk] = product_extension(w, m, k);
    MultiletterCheck r;
    r.single = single_letter_upper_bound(w, m, tol).value;
    r.k_normalized = single_letter_upper_bound(wk, mk, tol).value / k;
    r.difference = r.k_normalized - r.single;
    return r;
}

// Binary-input sufficient condition for a strict gap to the matched capacity: the log-likelihood
// and log-metric differences are not in the same order.
inline bool binary_order_test(const Dmc& w, const Metric& m) {
    if (w.nx() != 2) throw Error(ErrorKind::domain, "binary_order_test: input must be binary");
    std::vector<double> a, b;
    for (int y = 0; y < w.ny(); ++y) {
        if (w.w(0, y) <= 0.0 || w.w(1, y) <= 0.0 || m.q(0, y) <= 0.0 || m.q(1, y) <= 0.0) continue;
        a.push_back(std::log(w.w(0, y)) - std::log(w.w(1, y)));
        b.push_back(std::log(m.q(0, y)) - std::log(m.q(1, y)));
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (a[i] >= a[j] && b[i] < b[j]) return true;
    return false;
}

}  // namespace mismatch
