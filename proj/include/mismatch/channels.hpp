#pragma once

#include "metric_ops.hpp"
#include "problems.hpp"
#include "types.hpp"

namespace mismatch {

inline Mat bsc(double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw Error(ErrorKind::domain, "bsc: crossover must lie in [0,1]");
    Mat w(2, 2);
    w << 1.0 - delta, delta, delta, 1.0 - delta;
    return w;
}

// Binary channel metric with log q = [[1, 0], [0, lambda]].
inline Metric binary_log_metric(double lambda) {
    Mat q(2, 2);
    q << std::exp(1.0), 1.0, 1.0, std::exp(lambda);
    return Metric(q);
}

// Two independent BSCs used together; inputs and outputs are pairs (a, b) at index 2a + b.
inline Mat parallel_bsc(double d1, double d2) {
    const Mat a = bsc(d1), b = bsc(d2);
    Mat w(4, 4);
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) w(x, y) = a(x / 2, y / 2) * b(x % 2, y % 2);
    return w;
}

// Sum of two binary channels: inputs {0,1} feed the first, {2,3} the second.
inline Mat block_sum(const Mat& a, const Mat& b) {
    Mat s = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    s.topLeftCorner(a.rows(), a.cols()) = a;
    s.bottomRightCorner(b.rows(), b.cols()) = b;
    return s;
}

// Superposition input over X^2 built from Q_X = (q0, 1 - q0): cloud 1 carries (1,1), cloud 0 the rest.
inline ScInput cnv_two_letter_input(double q0) {
    if (!(q0 > 0.0 && q0 < 1.0)) throw Error(ErrorKind::domain, "cnv input: Q0 must lie in (0,1)");
    const double q1 = 1.0 - q0;
    Mat m = Mat::Zero(2, 4);
    m(0, 0) = q0 * q0;
    m(0, 1) = q0 * q1;
    m(0, 2) = q0 * q1;
    m(1, 3) = q1 * q1;
    return ScInput(m);
}

// Two-user MAC whose output is the pair of BSC outputs; the metric rewards agreements equally.
inline MacProblem parallel_bsc_mac(double d1, double d2, double weight = 0.5) {
    Mat w(4, 4), q(4, 4);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int y1 = 0; y1 < 2; ++y1)
                for (int y2 = 0; y2 < 2; ++y2) {
                    w(2 * a + b, 2 * y1 + y2) = (a == y1 ? 1.0 - d1 : d1) * (b == y2 ? 1.0 - d2 : d2);
                    q(2 * a + b, 2 * y1 + y2) = std::exp(weight * ((a == y1) + (b == y2)));
                }
    return MacProblem(2, 2, Dmc(w), Metric(q), InputDist{0.5, 0.5}, InputDist{0.5, 0.5});
}

}  // namespace mismatch
