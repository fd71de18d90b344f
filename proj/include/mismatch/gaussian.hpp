#pragma once

#include "opt.hpp"
#include "types.hpp"

namespace mismatch {

struct FadingAtom {
    double p = 1.0;
    double h_hat_sq = 1.0;  // |H_hat|^2
    double err_sq = 0.0;    // E[|H_tilde|^2 | H_hat]
};

struct GaussParams {
    double gamma = 1.0;
    double sigma2 = 1.0;
    double alpha = 1.0;
    double mu = 0.0;
    std::vector<FadingAtom> fading;

    void validate() const {
        if (!(gamma > 0.0) || !(sigma2 > 0.0)) throw Error(ErrorKind::validation, "gauss: gamma and sigma2 must be positive");
        if (!std::isfinite(alpha) || !std::isfinite(mu)) throw Error(ErrorKind::validation, "gauss: alpha and mu must be finite");
        if (fading.empty()) return;
        double tot = 0.0;
        for (std::size_t i = 0; i < fading.size(); ++i) {
            const auto& a = fading[i];
            if (!(a.p >= 0.0) || !(a.h_hat_sq >= 0.0) || !(a.err_sq >= 0.0))
                throw Error(ErrorKind::validation, "gauss: fading atom " + std::to_string(i) + " has a negative entry");
            tot += a.p;
        }
        if (std::abs(tot - 1.0) > 1e-9) throw Error(ErrorKind::validation, "gauss: fading probabilities must sum to 1");
    }
};

struct GaussRate {
    double value = 0.0;    // nats
    double numeric = 0.0;  // numerically optimized objective
    double s = 0.0;        // closed-form optimizer (when known)
    double s_numeric = 0.0;
    double r = 0.0;
    double r_numeric = 0.0;
};

inline double awgn_capacity(double gamma, double sigma2) { return 0.5 * std::log1p(gamma / sigma2); }

// Objective of the form 1/2 log(1+2s G) + s(G + a)/(1 + 2 G s) - s b.
inline double gauss_s_objective(double s, double g, double a, double b) {
    return 0.5 * std::log1p(2.0 * s * g) + s * (g + a) / (1.0 + 2.0 * g * s) - s * b;
}

inline GaussRate gmi_signal_level(const GaussParams& p) {
    p.validate();
    const double a2 = p.alpha * p.alpha;
    auto f = [&](double s) {
        return 0.5 * std::log1p(2.0 * s * p.gamma) + s * (a2 * p.gamma + p.sigma2) / (1.0 + 2.0 * p.gamma * s) -
               s * ((p.alpha - 1.0) * (p.alpha - 1.0) * p.gamma + p.sigma2);
    };
    Optimum1d o = maximize_concave_1d(f, 0.0, 1e-12);
    GaussRate r;
    r.value = r.numeric = std::max(0.0, o.value);
    r.s = r.s_numeric = o.x;
    return r;
}

inline double lm_signal_level(const GaussParams& p) {
    p.validate();
    return 0.5 * std::log1p(p.alpha * p.alpha * p.gamma / p.sigma2);
}

inline GaussRate gmi_nn_noise(const GaussParams& p) {
    p.validate();
    const double m2 = p.mu * p.mu + p.sigma2;
    GaussRate r;
    r.value = 0.5 * std::log1p(p.gamma / m2);
    r.s = 1.0 / (2.0 * m2);
    Optimum1d o = maximize_concave_1d([&](double s) { return gauss_s_objective(s, p.gamma, m2, m2); }, 0.0, 1e-13);
    r.numeric = o.value;
    r.s_numeric = o.x;
    return r;
}

inline GaussRate lm_fixed_cost_noise(const GaussParams& p) {
    p.validate();
    const double m2 = p.mu * p.mu + p.sigma2;
    const double g = p.gamma;
    GaussRate res;
    res.value = 0.5 * std::log1p(g / p.sigma2);
    res.s = 1.0 / (2.0 * p.sigma2);
    res.r = -2.0 * res.s * p.mu;
    ConcaveFn fn = [&](const Vec& z, Vec* grad, Mat*) {
        const double s = z(0), r = z(1), den = 1.0 + 2.0 * g * s;
        double v = 0.5 * std::log1p(2.0 * s * g) - g * r * (r + 4.0 * s * p.mu) / (2.0 * den) + s * (g + m2) / den - s * m2;
        if (grad) {
            grad->resize(2);
            (*grad)(0) = g / den + 2.0 * g * g * r * (r + 4.0 * s * p.mu) / (2.0 * den * den) - 4.0 * g * r * p.mu / (2.0 * den) +
                         (g + m2) / (den * den) - m2;
            (*grad)(1) = -g * (2.0 * r + 4.0 * s * p.mu) / (2.0 * den);
        }
        return v;
    };
    AscentOptions ao;
    ao.hessian = false;
    ao.tol = 1e-12;
    ao.lower = Vec::Constant(2, -kInf);
    ao.lower(0) = 0.0;
    Vec z0(2);
    z0 << 0.1, 0.0;
    AscentResult ar = ascend_concave(fn, z0, ao);
    res.numeric = ar.value;
    res.s_numeric = ar.x(0);
    res.r_numeric = ar.x(1);
    return res;
}

struct FadingRate {
    double value = 0.0;
    std::vector<double> s;          // per-atom 1 / Gamma_XY
    std::vector<double> s_numeric;  // per-atom numeric maximizer
    double numeric = 0.0;
};

inline FadingRate gmi_fading(const GaussParams& p) {
    p.validate();
    if (p.fading.empty()) throw Error(ErrorKind::validation, "gauss: fading atoms required");
    FadingRate fr;
    for (const auto& a : p.fading) {
        const double gxy = a.err_sq * p.gamma + p.sigma2;
        const double hg = a.h_hat_sq * p.gamma;
        fr.value += a.p * std::log1p(hg / gxy);
        fr.s.push_back(1.0 / gxy);
        auto f = [&](double s) { return std::log1p(hg * s) + s * (hg + gxy) / (1.0 + hg * s) - s * gxy; };
        Optimum1d o = maximize_concave_1d(f, 0.0, 1e-13);
        fr.s_numeric.push_back(o.x);
        fr.numeric += a.p * o.value;
    }
    return fr;
}

inline double awgn_fading_capacity(const GaussParams& p) {
    p.validate();
    double v = 0.0;
    for (const auto& a : p.fading) v += a.p * std::log1p(a.h_hat_sq * p.gamma / p.sigma2);
    return v;
}

}  // namespace mismatch
