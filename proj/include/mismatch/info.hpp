#pragma once

#include "types.hpp"

namespace mismatch {

inline double xlogx_ratio(double p, double q) {
    if (p <= 0.0) return 0.0;
    if (q <= 0.0) return kInf;
    return p * std::log(p / q);
}

inline double entropy(const Vec& p) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p(i) < 0.0) throw Error(ErrorKind::domain, "entropy: negative entry");
        if (p(i) > 0.0) h -= p(i) * std::log(p(i));
    }
    return h;
}

inline double binary_entropy(double p) {
    Vec v(2);
    v << p, 1.0 - p;
    return entropy(v);
}

// Flagged infinity: returns +inf when p has mass outside the support of q.
inline double kl_divergence(const Vec& p, const Vec& q) {
    if (p.size() != q.size()) throw Error(ErrorKind::domain, "kl_divergence: shape mismatch");
    double d = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) d += xlogx_ratio(p(i), q(i));
    return d;
}

inline double kl_divergence(const JointDist& p, const JointDist& q) {
    if (p.shape != q.shape) throw Error(ErrorKind::domain, "kl_divergence: shape mismatch");
    double d = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) d += xlogx_ratio(p.p[k], q.p[k]);
    return d;
}

inline double mutual_information(const Mat& pxy) {
    Vec px = pxy.rowwise().sum();
    Vec py = pxy.colwise().sum().transpose();
    double i = 0.0;
    for (Eigen::Index x = 0; x < pxy.rows(); ++x)
        for (Eigen::Index y = 0; y < pxy.cols(); ++y) i += xlogx_ratio(pxy(x, y), px(x) * py(y));
    return i;
}

// I(A;B) where A and B are disjoint axis groups of a joint tensor.
inline double mutual_information(const JointDist& p, const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    Tensor pab = p.marginal(ab), pa = p.marginal(a), pb = p.marginal(b);
    std::size_t nb = pb.size();
    double i = 0.0;
    for (std::size_t k = 0; k < pab.size(); ++k) i += xlogx_ratio(pab.p[k], pa.p[k / nb] * pb.p[k % nb]);
    return i;
}

inline double mutual_information(const JointDist& p) {
    if (p.rank() != 2) throw Error(ErrorKind::domain, "mutual_information: rank-2 joint expected");
    return mutual_information(p, {0}, {1});
}

// I(A;B|C).
inline double conditional_mutual_information(const JointDist& p, const std::vector<int>& a, const std::vector<int>& b,
                                             const std::vector<int>& c) {
    std::vector<int> ac = a, bc = b, abc = a;
    ac.insert(ac.end(), c.begin(), c.end());
    abc.insert(abc.end(), b.begin(), b.end());
    abc.insert(abc.end(), c.begin(), c.end());
    bc.insert(bc.end(), c.begin(), c.end());
    Tensor pabc = p.marginal(abc), pac = p.marginal(ac), pbc = p.marginal(bc), pc = p.marginal(c);
    std::size_t na = Tensor::count(p.marginal(a).shape), nb = Tensor::count(p.marginal(b).shape), nc = pc.size();
    double i = 0.0;
    for (std::size_t ia = 0; ia < na; ++ia)
        for (std::size_t ib = 0; ib < nb; ++ib)
            for (std::size_t ic = 0; ic < nc; ++ic) {
                double v = pabc.p[(ia * nb + ib) * nc + ic];
                if (v <= 0.0) continue;
                i += v * std::log(v * pc.p[ic] / (pac.p[ia * nc + ic] * pbc.p[ib * nc + ic]));
            }
    return i;
}

inline Vec output_marginal(const InputDist& q, const Dmc& w) {
    if (q.size() != w.nx()) throw Error(ErrorKind::domain, "output_marginal: dimension mismatch");
    return (q.p.transpose() * w.w).transpose();
}

inline Mat joint_of(const InputDist& q, const Dmc& w) { return q.p.asDiagonal() * w.w; }

inline double mutual_information(const InputDist& q, const Dmc& w) { return mutual_information(joint_of(q, w)); }

}  // namespace mismatch
