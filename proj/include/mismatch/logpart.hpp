#pragma once

#include "opt.hpp"
#include "types.hpp"

namespace mismatch {

// F(t) = constant + sum_g w_g [ c_g.t - log sum_i B_i exp(alpha_i.t + rho_i log sum_j C_ij exp(beta_ij.t)) ]
// Concave in t for rho_i >= 0. Covers every dual objective in the toolkit.
struct InnerEntry {
    double logc;
    Vec beta;
};

struct OuterTerm {
    double logb = 0.0;
    Vec alpha;
    double rho = 1.0;
    int tag = -1;
    std::vector<InnerEntry> inner;
};

struct DualGroup {
    double weight = 0.0;
    Vec c;
    std::vector<OuterTerm> terms;
};

class NestedDual {
public:
    explicit NestedDual(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    double constant = 0.0;
    std::vector<DualGroup> groups;

    DualGroup& add_group(double weight, Vec c) {
        groups.push_back({weight, std::move(c), {}});
        return groups.back();
    }

    // Optional d/d(rho) per tag, for terms carrying a tag in [0, ntags).
    double eval(const Vec& t, Vec* grad, Mat* hess, Vec* drho = nullptr) const {
        double val = constant;
        if (grad) grad->setZero(dim_);
        if (hess) hess->setZero(dim_, dim_);
        std::vector<double> z, ell;
        std::vector<Vec> v;
        std::vector<Mat> s;
        for (const auto& g : groups) {
            if (g.weight == 0.0) continue;
            const double u = g.c.dot(t);
            const bool single = g.terms.size() == 1 && g.terms[0].rho == 1.0 && g.terms[0].alpha.size() == 0;
            std::size_t nt = g.terms.size();
            z.assign(nt, 0.0);
            ell.assign(nt, 0.0);
            v.assign(nt, Vec());
            if (hess) s.assign(nt, Mat());
            for (std::size_t i = 0; i < nt; ++i) {
                const OuterTerm& term = g.terms[i];
                const double shift = single ? u : 0.0;
                double mx = -kInf;
                std::vector<double> e(term.inner.size());
                for (std::size_t j = 0; j < term.inner.size(); ++j) {
                    e[j] = term.inner[j].logc + term.inner[j].beta.dot(t) - shift;
                    mx = std::max(mx, e[j]);
                }
                double sum = 0.0;
                for (double& ej : e) {
                    ej = std::exp(ej - mx);
                    sum += ej;
                }
                ell[i] = mx + std::log(sum);
                Vec mu = Vec::Zero(dim_);
                for (std::size_t j = 0; j < e.size(); ++j) mu += (e[j] / sum) * term.inner[j].beta;
                if (hess) {
                    Mat sj = Mat::Zero(dim_, dim_);
                    for (std::size_t j = 0; j < e.size(); ++j) {
                        double pj = e[j] / sum;
                        if (pj > 0.0) sj.noalias() += pj * term.inner[j].beta * term.inner[j].beta.transpose();
                    }
                    sj.noalias() -= mu * mu.transpose();
                    s[i] = std::move(sj);
                }
                double a_dot = term.alpha.size() ? term.alpha.dot(t) : 0.0;
                z[i] = term.logb + a_dot + term.rho * ell[i];
                v[i] = term.rho * mu;
                if (term.alpha.size()) v[i] += term.alpha;
            }
            double zm = -kInf;
            for (double zi : z) zm = std::max(zm, zi);
            double zs = 0.0;
            std::vector<double> lam(nt);
            for (std::size_t i = 0; i < nt; ++i) {
                lam[i] = std::exp(z[i] - zm);
                zs += lam[i];
            }
            double h = zm + std::log(zs);
            for (double& l : lam) l /= zs;
            val += g.weight * ((single ? 0.0 : u) - h);
            Vec vbar = Vec::Zero(dim_);
            for (std::size_t i = 0; i < nt; ++i) vbar += lam[i] * v[i];
            if (grad) *grad += g.weight * (g.c - vbar);
            if (hess) {
                Mat hh = Mat::Zero(dim_, dim_);
                for (std::size_t i = 0; i < nt; ++i) {
                    hh.noalias() += lam[i] * (v[i] * v[i].transpose());
                    hh.noalias() += (lam[i] * g.terms[i].rho) * s[i];
                }
                hh.noalias() -= vbar * vbar.transpose();
                *hess -= g.weight * hh;
            }
            if (drho)
                for (std::size_t i = 0; i < nt; ++i) {
                    int tg = g.terms[i].tag;
                    if (tg >= 0 && tg < drho->size()) (*drho)(tg) -= g.weight * lam[i] * (ell[i] + (single ? u : 0.0));
                }
        }
        return val;
    }

    ConcaveFn fn() const {
        return [this](const Vec& t, Vec* g, Mat* h) { return eval(t, g, h); };
    }

private:
    int dim_;
};

// Box with s-style coordinates bounded below by 0 and above by the parameter cap.
inline AscentOptions nonneg_box(int dim, const std::vector<int>& nonneg, double tol = 1e-11) {
    AscentOptions o;
    o.tol = tol;
    o.lower = Vec::Constant(dim, -kInf);
    o.upper = Vec::Constant(dim, kInf);
    for (int i : nonneg) {
        o.lower(i) = 0.0;
        o.upper(i) = kParamCap;
    }
    return o;
}

inline Vec one_hot(int dim, std::initializer_list<std::pair<int, double>> entries) {
    Vec v = Vec::Zero(dim);
    for (auto [i, x] : entries) v(i) += x;
    return v;
}

}  // namespace mismatch
