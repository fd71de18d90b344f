#pragma once

#include "types.hpp"

namespace mismatch {

// Two-user MAC; rows of w and q are indexed by x1 * n2 + x2.
struct MacProblem {
    int n1 = 0, n2 = 0;
    Dmc w;
    Metric q;
    InputDist q1, q2;

    MacProblem() = default;
    MacProblem(int n1_, int n2_, Dmc w_, Metric q_, InputDist q1_, InputDist q2_)
        : n1(n1_), n2(n2_), w(std::move(w_)), q(std::move(q_)), q1(std::move(q1_)), q2(std::move(q2_)) {
        if (w.nx() != n1 * n2 || q.nx() != n1 * n2 || q.ny() != w.ny())
            throw Error(ErrorKind::validation, "mac: channel/metric shape must be (n1*n2) x |Y|");
        if (q1.size() != n1 || q2.size() != n2) throw Error(ErrorKind::validation, "mac: input distribution sizes");
    }

    int ny() const { return w.ny(); }
    int row(int x1, int x2) const { return x1 * n2 + x2; }
    double p(int x1, int x2, int y) const { return q1.p(x1) * q2.p(x2) * w.w(row(x1, x2), y); }

    // The same MAC with the users relabeled.
    MacProblem swapped() const {
        Mat ws(n1 * n2, ny()), qs(n1 * n2, ny());
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n2; ++b) {
                ws.row(b * n1 + a) = w.w.row(row(a, b));
                qs.row(b * n1 + a) = q.q.row(row(a, b));
            }
        return MacProblem(n2, n1, Dmc(ws), Metric(qs), q2, q1);
    }

    JointDist joint() const {
        JointDist t({n1, n2, ny()});
        for (int a = 0; a < n1; ++a)
            for (int b = 0; b < n2; ++b)
                for (int y = 0; y < ny(); ++y) t.p[t.index({a, b, y})] = p(a, b, y);
        return t;
    }
};

struct RdProblem {
    InputDist source;
    Mat d0, d1;
    InputDist q_hat;

    RdProblem() = default;
    RdProblem(InputDist src, Mat d0_, Mat d1_, InputDist qh)
        : source(std::move(src)), d0(std::move(d0_)), d1(std::move(d1_)), q_hat(std::move(qh)) {
        auto check = [&](const Mat& d, const char* name) {
            if (d.rows() != source.size() || d.cols() != q_hat.size())
                throw Error(ErrorKind::validation, std::string("rd: ") + name + " shape must be |X| x |Xhat|");
            for (Eigen::Index i = 0; i < d.rows(); ++i)
                for (Eigen::Index j = 0; j < d.cols(); ++j)
                    if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
                        throw Error(ErrorKind::validation, std::string("rd: ") + name + " entry (" + std::to_string(i) +
                                                               "," + std::to_string(j) + ") must be finite and >= 0");
        };
        check(d0, "d0");
        check(d1, "d1");
    }

    int nx() const { return source.size(); }
    int nxh() const { return q_hat.size(); }
};

// Superposition input: joint Q(u,x) stored as a |U| x |X| matrix.
struct ScInput {
    Mat qux;

    ScInput() = default;
    explicit ScInput(Mat m) : qux(std::move(m)) {
        for (Eigen::Index i = 0; i < qux.size(); ++i)
            if (qux.data()[i] < 0.0) throw Error(ErrorKind::validation, "sc: negative entry in Q_UX");
        if (std::abs(qux.sum() - 1.0) > 1e-9) throw Error(ErrorKind::validation, "sc: Q_UX must sum to 1");
    }

    static ScInput from_parts(const Vec& qu, const Mat& qx_given_u) {
        Mat m(qx_given_u.rows(), qx_given_u.cols());
        for (Eigen::Index u = 0; u < m.rows(); ++u) m.row(u) = qu(u) * qx_given_u.row(u);
        return ScInput(m);
    }

    int nu() const { return static_cast<int>(qux.rows()); }
    int nx() const { return static_cast<int>(qux.cols()); }
    double qu(int u) const { return qux.row(u).sum(); }
    InputDist qx() const { return InputDist(Vec(qux.colwise().sum().transpose()), 1e-9); }
    InputDist qx_given(int u) const { return InputDist(Vec(qux.row(u).transpose() / qu(u)), 1e-9); }
};

struct ExpParSpec {
    int n1 = 0, n2 = 0;
    std::vector<std::vector<int>> psi;  // psi[x1][x2] in X
    InputDist q1, q2;
};

}  // namespace mismatch
