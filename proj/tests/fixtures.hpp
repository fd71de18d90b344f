#pragma once

#include "mismatch/mismatch.hpp"

#include <cmath>

namespace fixtures {

using namespace mismatch;

inline Mat zuec_w() {
    Mat w(3, 3);
    w << .75, .25, 0, 0, .75, .25, .25, 0, .75;
    return w;
}

inline Mat zuec_q() {
    Mat q(3, 3);
    q << 1, 1, 0, 0, 1, 1, 1, 0, 1;
    return q;
}

inline Mat cnv_w() {
    Mat w(2, 3);
    w << .97, .03, 0, .1, .1, .8;
    return w;
}

inline Mat cnv_q(double q22) {
    Mat q(2, 3);
    q << 1, 1, 1, 1, q22, 1.36;
    return q;
}

inline double h2_bits(double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace fixtures
