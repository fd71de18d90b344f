#pragma once

#include "info.hpp"
#include "types.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <tuple>

namespace mismatch {

// Largest-remainder rounding of n*q; ties go to the lower index.
inline std::vector<int> closest_type(const Vec& q, int n) {
    std::vector<int> c(q.size());
    std::vector<std::pair<double, int>> rem;
    int used = 0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        double v = q(i) * n;
        c[i] = static_cast<int>(std::floor(v + 1e-12));
        used += c[i];
        rem.push_back({v - c[i], static_cast<int>(i)});
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first + 1e-12; });
    for (int k = 0; used < n; ++k, ++used) ++c[rem[k].second];
    return c;
}

namespace detail {

inline constexpr int kGridCells = 9;
inline constexpr int kGridN = 60;

inline double mean_log(const Mat& p, const Mat& lq) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (p(i, j) > 0.0) v += p(i, j) * lq(i, j);
    return v;
}

// Linear in p, including negative entries; cells with log q = -inf are skipped.
inline double linear_mean(const Mat& p, const Mat& lq) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (std::isfinite(lq.data()[i])) v += p.data()[i] * lq.data()[i];
    return v;
}

inline double kl_mat(const Mat& p, const Mat& q) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) d += xlogx_ratio(p.data()[i], q.data()[i]);
    return d;
}

inline Mat log_metric(const Metric& m) {
    Mat lq(m.nx(), m.ny());
    for (int x = 0; x < m.nx(); ++x)
        for (int y = 0; y < m.ny(); ++y) lq(x, y) = m.logq(x, y);
    return lq;
}

}  // namespace detail

namespace detail {

// Exactly feasible joints on an allowed support: free cells on the 1/N grid; in each fixed row (column) the last
// allowed cell is filled from the marginal. With `tight`, the last free cell also takes the value where the affine
// functional tight(P) vanishes, so points on a linear constraint boundary are visited too.
inline void enumerate_feasible(const std::optional<Vec>& rows, const std::optional<Vec>& cols, int nr, int nc, int n,
                               const std::function<void(const Mat&)>& visit, const Mat* allow = nullptr,
                               const std::function<double(const Mat&)>* tight = nullptr) {
    const bool fr = rows.has_value(), fc = cols.has_value();
    auto ok = [&](int r, int c) { return !allow || (*allow)(r, c) > 0.0; };
    std::vector<int> last_in_row(nr, -1), last_in_col(nc, -1);
    int last_r = -1, last_c = -1;
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c)
            if (ok(r, c)) {
                last_in_row[r] = c;
                last_in_col[c] = std::max(last_in_col[c], r);
                last_r = r;
                last_c = c;
            }
    // 0 free, 1 from row, 2 from column, 3 from total mass, -1 forced zero.
    std::vector<int> kind(nr * nc, 0);
    for (int r = 0; r < nr; ++r)
        for (int c = 0; c < nc; ++c) {
            int& k = kind[r * nc + c];
            if (!ok(r, c))
                k = -1;
            else if (fr && last_in_row[r] == c)
                k = 1;
            else if (fc && last_in_col[c] == r)
                k = 2;
            else if (!fr && !fc && r == last_r && c == last_c)
                k = 3;
        }
    Vec rrem = fr ? *rows : Vec::Constant(nr, kInf);
    Vec crem = fc ? *cols : Vec::Constant(nc, kInf);
    double total = 1.0;
    Mat p = Mat::Zero(nr, nc);
    const double slack = 1e-12;
    // Dependent cells from the free ones; affine in p as long as nothing is clamped.
    auto fill = [&](Mat& q) {
        bool valid = true;
        for (int r = 0; r < nr; ++r)
            for (int c = 0; c < nc; ++c) {
                const int kd = kind[r * nc + c];
                if (kd <= 0) continue;
                double v;
                if (kd == 1)
                    v = (*rows)(r) - (q.row(r).sum() - q(r, c));
                else if (kd == 2)
                    v = (*cols)(c) - (q.col(c).sum() - q(r, c));
                else
                    v = 1.0 - (q.sum() - q(r, c));
                valid = valid && v >= -slack;
                q(r, c) = v;
            }
        return valid;
    };
    auto emit = [&](const Mat& part) {
        Mat q = part;
        if (!fill(q)) return;
        q = q.cwiseMax(0.0);
        if (fr)
            for (int r = 0; r < nr; ++r)
                if (std::abs(q.row(r).sum() - (*rows)(r)) > 1e-9) return;
        if (fc)
            for (int c = 0; c < nc; ++c)
                if (std::abs(q.col(c).sum() - (*cols)(c)) > 1e-9) return;
        if (!fr && !fc && std::abs(q.sum() - 1.0) > 1e-9) return;
        visit(q);
    };
    // Free cells in scan order; with `tight` the cell it depends on most steeply goes last and is solved for.
    std::vector<int> order;
    for (int k = 0; k < nr * nc; ++k)
        if (kind[k] == 0) order.push_back(k);
    if (tight && !order.empty()) {
        Mat z = Mat::Zero(nr, nc);
        fill(z);
        const double g0 = (*tight)(z);
        auto slope = [&](int k) {
            Mat e = Mat::Zero(nr, nc);
            e(k / nc, k % nc) = 1.0;
            fill(e);
            return std::abs((*tight)(e) - g0);
        };
        auto steepest = std::max_element(order.begin(), order.end(), [&](int a, int b) { return slope(a) < slope(b); });
        std::rotate(steepest, steepest + 1, order.end());
    }
    std::function<void(std::size_t)> rec = [&](std::size_t pos) {
        if (pos == order.size()) {
            emit(p);
            return;
        }
        const int k = order[pos], r = k / nc, c = k % nc;
        const double budget = std::min({rrem(r), crem(c), total});
        for (int j = 0; j <= n && j / static_cast<double>(n) <= budget + slack; ++j) {
            const double v = j / static_cast<double>(n);
            p(r, c) = v;
            rrem(r) -= v;
            crem(c) -= v;
            total -= v;
            rec(pos + 1);
            rrem(r) += v;
            crem(c) += v;
            total += v;
        }
        p(r, c) = 0.0;
        if (tight && pos + 1 == order.size() && budget > 0.0) {
            Mat a = p, b = p;
            b(r, c) = budget;
            fill(a);
            fill(b);
            const double ga = (*tight)(a), gb = (*tight)(b);
            if (std::isfinite(ga) && std::isfinite(gb) && ga != gb) {
                const double v = budget * ga / (ga - gb);
                if (v >= 0.0 && v <= budget) {
                    p(r, c) = v;
                    emit(p);
                    p(r, c) = 0.0;
                }
            }
        }
    };
    rec(0);
}

}  // namespace detail

// Exhaustive minimum of `objective` over joints with the given (optional) marginals, free cells on the 1/N grid.
// Every visited point satisfies the marginal constraints exactly, so the result upper-bounds the true minimum.
inline double grid_primal_min(const std::optional<Vec>& rows, const std::optional<Vec>& cols, int nr, int nc,
                              const std::function<double(const Mat&)>& objective,
                              const std::function<bool(const Mat&)>& feasible, int n, const Mat* allow = nullptr,
                              const std::function<double(const Mat&)>* tight = nullptr) {
    if (nr * nc > detail::kGridCells || n > detail::kGridN || n < 1)
        throw Error(ErrorKind::capacity, "grid_primal_min: size guard (cells <= 9, N <= 60)");
    double best = kInf;
    detail::enumerate_feasible(rows, cols, nr, nc, n, [&](const Mat& p) {
        if (feasible(p)) best = std::min(best, objective(p));
    }, allow, tight);
    return best;
}

namespace detail {

// Rows of zero input mass carry no probability in any feasible joint; drop them.
inline std::tuple<InputDist, Dmc, Metric> input_support(const InputDist& q, const Dmc& w, const Metric& m) {
    std::vector<int> keep;
    for (int x = 0; x < q.size(); ++x)
        if (q.p(x) > 0.0) keep.push_back(x);
    if (static_cast<int>(keep.size()) == q.size()) return {q, w, m};
    const auto k = static_cast<Eigen::Index>(keep.size());
    Vec qs(k);
    Mat ws(k, w.ny()), ms(k, m.ny());
    for (Eigen::Index i = 0; i < k; ++i) {
        qs(i) = q.p(keep[i]);
        ws.row(i) = w.w.row(keep[i]);
        ms.row(i) = m.q.row(keep[i]);
    }
    return {InputDist(qs / qs.sum(), 1e-9), Dmc(ws), Metric(ms)};
}

}  // namespace detail

// LM primal: min D(P~ || Q x P_Y) with P~_X = Q, P~_Y = P_Y, E[log q] >= E_P[log q].
inline double grid_lm_primal(const InputDist& qin, const Dmc& win, const Metric& min, int n = 40) {
    const auto [q, w, m] = detail::input_support(qin, win, min);
    Mat p = q.p.asDiagonal() * w.w;
    Vec py = p.colwise().sum().transpose();
    Mat lq = detail::log_metric(m);
    const double target = detail::mean_log(p, lq);
    Mat base = q.p * py.transpose();
    Mat allow = m.q;
    const std::function<double(const Mat&)> tight = [&](const Mat& t) { return detail::linear_mean(t, lq) - target; };
    return grid_primal_min(q.p, py, w.nx(), w.ny(), [&](const Mat& t) { return detail::kl_mat(t, base); },
                           [&](const Mat& t) { return detail::mean_log(t, lq) >= target - 1e-12; }, n, &allow, &tight);
}

// GMI primal: min D(P~ || Q x P_Y) with P~_Y = P_Y, E[log q] >= E_P[log q].
inline double grid_gmi_primal(const InputDist& qin, const Dmc& win, const Metric& min, int n = 40) {
    const auto [q, w, m] = detail::input_support(qin, win, min);
    Mat p = q.p.asDiagonal() * w.w;
    Vec py = p.colwise().sum().transpose();
    Mat lq = detail::log_metric(m);
    const double target = detail::mean_log(p, lq);
    Mat base = q.p * py.transpose();
    Mat allow = m.q;
    const std::function<double(const Mat&)> tight = [&](const Mat& t) { return detail::linear_mean(t, lq) - target; };
    return grid_primal_min(std::nullopt, py, w.nx(), w.ny(), [&](const Mat& t) { return detail::kl_mat(t, base); },
                           [&](const Mat& t) { return detail::mean_log(t, lq) >= target - 1e-12; }, n, &allow, &tight);
}

// Rate-distortion primal for the i.i.d. ensemble: min D(P~ || Pi x Q) with P~_X = Pi and E[d] <= D.
inline double grid_rd_iid(const Vec& source, const Mat& d, const Vec& q_hat, double D, int n = 40) {
    Mat base = source * q_hat.transpose();
    const std::function<double(const Mat&)> tight = [&](const Mat& t) { return (t.array() * d.array()).sum() - D; };
    return grid_primal_min(source, std::nullopt, static_cast<int>(d.rows()), static_cast<int>(d.cols()),
                           [&](const Mat& t) { return detail::kl_mat(t, base); },
                           [&](const Mat& t) { return (t.array() * d.array()).sum() <= D + 1e-12; }, n, nullptr, &tight);
}

// Same with both marginals fixed (constant-composition form).
inline double grid_rd_cc(const Vec& source, const Mat& d, const Vec& q_hat, double D, int n = 40) {
    const std::function<double(const Mat&)> tight = [&](const Mat& t) { return (t.array() * d.array()).sum() - D; };
    return grid_primal_min(source, q_hat, static_cast<int>(d.rows()), static_cast<int>(d.cols()),
                           [&](const Mat& t) { return mutual_information(t); },
                           [&](const Mat& t) { return (t.array() * d.array()).sum() <= D + 1e-12; }, n, nullptr, &tight);
}

enum class PrimalExponent { er_iid, er_cc, ex_cc, ck };

// Exhaustive grid evaluation of the primal exponent expressions (small alphabets only).
inline double grid_exponent_primal(const InputDist& q, const Dmc& w, const Metric& m, double R, PrimalExponent which,
                                   int n = 20) {
    const int nx = w.nx(), ny = w.ny();
    if (nx > 3 || ny > 3 || n > 40 || n < 1)
        throw Error(ErrorKind::capacity, "grid_exponent_primal: size guard (alphabets <= 3, N <= 40)");
    Mat lq = detail::log_metric(m);
    double best = kInf;
    auto plus = [](double v) { return std::max(0.0, v); };

    if (which == PrimalExponent::er_iid || which == PrimalExponent::er_cc) {
        const bool cc = which == PrimalExponent::er_cc;
        Mat qw = q.p.asDiagonal() * w.w;
        auto outer = [&](const Mat& p) {
            double d0 = detail::kl_mat(p, qw);
            if (!std::isfinite(d0) || d0 >= best) return;
            Vec py = p.colwise().sum().transpose();
            const double thr = detail::mean_log(p, lq);
            Mat base = q.p * py.transpose();
            double inner = kInf;
            const std::function<double(const Mat&)> tight = [&](const Mat& t) { return detail::linear_mean(t, lq) - thr; };
            detail::enumerate_feasible(cc ? std::optional<Vec>(q.p) : std::nullopt, py, nx, ny, n, [&](const Mat& t) {
                if (detail::mean_log(t, lq) < thr - 1e-12) return;
                inner = std::min(inner, cc ? mutual_information(t) : detail::kl_mat(t, base));
            }, &m.q, &tight);
            if (std::isfinite(inner)) best = std::min(best, d0 + plus(inner - R));
        };
        detail::enumerate_feasible(cc ? std::optional<Vec>(q.p) : std::nullopt, std::nullopt, nx, ny, n, outer, &w.w);
        return best;
    }

    detail::enumerate_feasible(q.p, q.p, nx, nx, n, [&](const Mat& coup) {
        if (mutual_information(coup) > R + 1e-12) return;
        Vec cells(nx * nx);
        Mat allow(nx * nx, ny);
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < nx; ++b) {
                cells(a * nx + b) = coup(a, b);
                allow.row(a * nx + b) = w.w.row(a);
            }
        detail::enumerate_feasible(cells, std::nullopt, nx * nx, ny, n, [&](const Mat& split) {
            double metric_gap = 0.0, val = 0.0;
            for (int a = 0; a < nx; ++a)
                for (int b = 0; b < nx; ++b)
                    for (int y = 0; y < ny; ++y) {
                        double v = split(a * nx + b, y);
                        if (v > 0.0) metric_gap += v * (lq(b, y) - lq(a, y));
                    }
            if (!(metric_gap >= -1e-12)) return;
            if (which == PrimalExponent::ex_cc) {
                for (int a = 0; a < nx; ++a)
                    for (int b = 0; b < nx; ++b)
                        for (int y = 0; y < ny; ++y) val += xlogx_ratio(split(a * nx + b, y), q.p(a) * q.p(b) * w.w(a, y));
                val -= R;
            } else {
                Tensor t({nx, nx, ny});
                for (int k = 0; k < nx * nx; ++k)
                    for (int y = 0; y < ny; ++y) t.p[k * ny + y] = split(k, y);
                Tensor pxy = t.marginal({0, 2});
                for (int a = 0; a < nx; ++a)
                    for (int y = 0; y < ny; ++y) val += xlogx_ratio(pxy.p[a * ny + y], q.p(a) * w.w(a, y));
                val += plus(mutual_information(t, {1}, {0, 2}) - R);
            }
            best = std::min(best, val);
        }, &allow);
    });
    return best;
}

struct McEstimate {
    double estimate = 0.0;
    double lo = 0.0, hi = 0.0;  // Wilson 95% interval
    long errors = 0;
    long trials = 0;
};

enum class McEnsemble { iid, cc };

inline McEstimate wilson_interval(long errors, long trials, double z = 1.959963984540054) {
    McEstimate e;
    e.errors = errors;
    e.trials = trials;
    if (trials == 0) return e;
    const double nn = static_cast<double>(trials), ph = errors / nn, z2 = z * z;
    const double den = 1.0 + z2 / nn, centre = (ph + z2 / (2.0 * nn)) / den;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / den;
    e.estimate = ph;
    e.lo = std::max(0.0, centre - half);
    e.hi = std::min(1.0, centre + half);
    return e;
}

// Random-coding error frequency of maximum-metric decoding; ties count as errors.
inline McEstimate monte_carlo_error(const Dmc& w, const Metric& m, const InputDist& q, McEnsemble ens, int n, int M,
                                    long trials, std::uint64_t seed) {
    if (n < 1 || n > 16 || M < 1 || M > 4096 || trials < 1 || trials > 1000000)
        throw Error(ErrorKind::capacity, "monte_carlo_error: limits n <= 16, M <= 4096, trials <= 1e6");
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> input(q.p.data(), q.p.data() + q.p.size());
    std::vector<std::discrete_distribution<int>> chan;
    for (int x = 0; x < w.nx(); ++x) {
        std::vector<double> row(w.ny());
        for (int y = 0; y < w.ny(); ++y) row[y] = w.w(x, y);
        chan.emplace_back(row.begin(), row.end());
    }
    Mat lq = detail::log_metric(m);
    std::vector<int> base;
    if (ens == McEnsemble::cc) {
        std::vector<int> c = closest_type(q.p, n);
        for (int x = 0; x < q.size(); ++x) base.insert(base.end(), c[x], x);
    }
    std::vector<int> code(static_cast<std::size_t>(M) * n), y(n);
    long errors = 0;
    for (long t = 0; t < trials; ++t) {
        for (int j = 0; j < M; ++j) {
            int* cw = &code[static_cast<std::size_t>(j) * n];
            if (ens == McEnsemble::iid)
                for (int i = 0; i < n; ++i) cw[i] = input(rng);
            else {
                std::copy(base.begin(), base.end(), cw);
                std::shuffle(cw, cw + n, rng);
            }
        }
        for (int i = 0; i < n; ++i) y[i] = chan[code[i]](rng);
        auto score = [&](int j) {
            double s = 0.0;
            const int* cw = &code[static_cast<std::size_t>(j) * n];
            for (int i = 0; i < n; ++i) s += lq(cw[i], y[i]);
            return s;
        };
        const double truth = score(0);
        bool err = !std::isfinite(truth);
        for (int j = 1; j < M && !err; ++j)
            if (score(j) >= truth) err = true;
        if (err) ++errors;
    }
    return wilson_interval(errors, trials);
}

}  // namespace mismatch
