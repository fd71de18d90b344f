#pragma once

#include "types.hpp"

#include <algorithm>
#include <utility>

namespace mismatch {

// q^s e^{a(x)} e^{b(y)}; zero entries stay zero.
inline Metric transform_metric(const Metric& m, double s, const Vec* a = nullptr, const Vec* b = nullptr) {
    if (s < 0.0) throw Error(ErrorKind::domain, "transform_metric: s must be nonnegative");
    Mat out(m.q.rows(), m.q.cols());
    for (Eigen::Index x = 0; x < out.rows(); ++x)
        for (Eigen::Index y = 0; y < out.cols(); ++y) {
            if (m.q(x, y) <= 0.0) {
                out(x, y) = 0.0;
                continue;
            }
            double l = s * std::log(m.q(x, y));
            if (a) l += (*a)(x);
            if (b) l += (*b)(y);
            out(x, y) = std::exp(l);
        }
    return Metric(out);
}

inline Mat kron_power(const Mat& m, int k) {
    Mat r = Mat::Ones(1, 1);
    for (int i = 0; i < k; ++i) {
        Mat n(r.rows() * m.rows(), r.cols() * m.cols());
        for (Eigen::Index a = 0; a < r.rows(); ++a)
            for (Eigen::Index b = 0; b < r.cols(); ++b)
                n.block(a * m.rows(), b * m.cols(), m.rows(), m.cols()) = r(a, b) * m;
        r = std::move(n);
    }
    return r;
}

inline constexpr double kDenseGuard = 1e7;

inline std::pair<Dmc, Metric> product_extension(const Dmc& w, const Metric& m, int k) {
    if (k < 1) throw Error(ErrorKind::domain, "product_extension: k must be positive");
    double cells = std::pow(static_cast<double>(w.nx()) * w.ny(), k);
    if (cells > kDenseGuard) throw Error(ErrorKind::capacity, "product_extension: dense size guard exceeded");
    Mat wk = kron_power(w.w, k);
    for (Eigen::Index x = 0; x < wk.rows(); ++x) wk.row(x) /= wk.row(x).sum();
    return {Dmc(wk, 1e-9), Metric(kron_power(m.q, k))};
}

inline Vec product_input(const Vec& q, int k) { return kron_power(q, k).col(0); }

inline Metric erasures_only_metric(const Dmc& w) {
    Mat q = (w.w.array() > 0.0).cast<double>();
    return Metric(q);
}

inline std::pair<Dmc, Metric> zero_error_transform(const Dmc& w) {
    int n = w.nx();
    Mat a = Mat::Zero(n, n);
    for (int x = 0; x < n; ++x)
        for (int xp = 0; xp < n; ++xp)
            for (int y = 0; y < w.ny(); ++y)
                if (w.w(x, y) > 0.0 && w.w(xp, y) > 0.0) a(x, xp) = 1.0;
    return {Dmc(Mat::Identity(n, n)), Metric(a)};
}

namespace detail {

using Pair = std::pair<double, double>;

inline std::vector<Pair> sorted_pairs(std::vector<Pair> v) {
    std::sort(v.begin(), v.end());
    return v;
}

inline bool same_multiset(const std::vector<Pair>& a, const std::vector<Pair>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].first - b[i].first) > tol || std::abs(a[i].second - b[i].second) > tol) return false;
    return true;
}

}  // namespace detail

// Groups outputs by the multiset of (W, q) column entries, then checks rows within each group.
inline std::optional<std::vector<std::vector<int>>> detect_output_symmetry(const Dmc& w, const Metric& m,
                                                                           double tol = 1e-12) {
    using detail::Pair;
    int nx = w.nx(), ny = w.ny();
    std::vector<std::vector<Pair>> sig(ny);
    for (int y = 0; y < ny; ++y) {
        std::vector<Pair> col;
        for (int x = 0; x < nx; ++x) col.emplace_back(w.w(x, y), m.q(x, y));
        sig[y] = detail::sorted_pairs(col);
    }
    std::vector<std::vector<int>> blocks;
    std::vector<int> owner(ny, -1);
    for (int y = 0; y < ny; ++y) {
        if (owner[y] >= 0) continue;
        owner[y] = static_cast<int>(blocks.size());
        blocks.push_back({y});
        for (int z = y + 1; z < ny; ++z)
            if (owner[z] < 0 && detail::same_multiset(sig[y], sig[z], tol)) {
                owner[z] = owner[y];
                blocks.back().push_back(z);
            }
    }
    for (const auto& blk : blocks) {
        std::vector<Pair> first;
        for (int x = 0; x < nx; ++x) {
            std::vector<Pair> row;
            for (int y : blk) row.emplace_back(w.w(x, y), m.q(x, y));
            row = detail::sorted_pairs(row);
            if (x == 0)
                first = row;
            else if (!detail::same_multiset(first, row, tol))
                return std::nullopt;
        }
    }
    return blocks;
}

}  // namespace mismatch
