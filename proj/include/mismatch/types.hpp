#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mismatch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

inline double to_bits(double nats) { return nats / kLn2; }
inline double to_nats(double bits) { return bits * kLn2; }

enum class ErrorKind { domain, validation, infeasible, capacity, convergence };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kArithTol = 1e-10;

inline void check_simplex(const Vec& p, double tol, const std::string& what) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p(i)) || p(i) < 0.0)
            throw Error(ErrorKind::validation, what + ": entry " + std::to_string(i) + " is negative or not finite");
        sum += p(i);
    }
    if (std::abs(sum - 1.0) > tol)
        throw Error(ErrorKind::validation, what + ": entries sum to " + std::to_string(sum) + ", not 1");
}

// Channel W(y|x), rows indexed by x.
struct Dmc {
    Mat w;

    Dmc() = default;
    explicit Dmc(Mat m, double tol = kSimplexTol) : w(std::move(m)) {
        for (Eigen::Index x = 0; x < w.rows(); ++x) {
            for (Eigen::Index y = 0; y < w.cols(); ++y)
                if (!std::isfinite(w(x, y)) || w(x, y) < 0.0 || w(x, y) > 1.0)
                    throw Error(ErrorKind::validation, "W row " + std::to_string(x) + " column " +
                                                           std::to_string(y) + " outside [0,1]");
            double s = w.row(x).sum();
            if (std::abs(s - 1.0) > tol)
                throw Error(ErrorKind::validation,
                            "W row " + std::to_string(x) + " sums to " + std::to_string(s));
        }
    }
    int nx() const { return static_cast<int>(w.rows()); }
    int ny() const { return static_cast<int>(w.cols()); }
};

// Decoding metric q(x,y) >= 0.
struct Metric {
    Mat q;

    Metric() = default;
    explicit Metric(Mat m) : q(std::move(m)) {
        for (Eigen::Index x = 0; x < q.rows(); ++x) {
            bool pos = false;
            for (Eigen::Index y = 0; y < q.cols(); ++y) {
                if (!std::isfinite(q(x, y)) || q(x, y) < 0.0)
                    throw Error(ErrorKind::validation, "q row " + std::to_string(x) + " column " +
                                                           std::to_string(y) + " negative or not finite");
                pos = pos || q(x, y) > 0.0;
            }
            if (!pos) throw Error(ErrorKind::validation, "q row " + std::to_string(x) + " has no positive entry");
        }
    }
    int nx() const { return static_cast<int>(q.rows()); }
    int ny() const { return static_cast<int>(q.cols()); }

    // log q with -inf at zeros; callers mask those cells before optimizing.
    double logq(int x, int y) const { return q(x, y) > 0.0 ? std::log(q(x, y)) : -kInf; }
};

struct InputDist {
    Vec p;

    InputDist() = default;
    explicit InputDist(Vec v, double tol = kSimplexTol) : p(std::move(v)) { check_simplex(p, tol, "input distribution"); }
    InputDist(std::initializer_list<double> v) : p(Eigen::Map<const Vec>(v.begin(), static_cast<Eigen::Index>(v.size()))) {
        check_simplex(p, kSimplexTol, "input distribution");
    }
    int size() const { return static_cast<int>(p.size()); }
};

// Dense tensor, row-major, first axis most significant.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> p;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) { p.assign(count(shape), fill); }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) n *= static_cast<std::size_t>(d);
        return n;
    }
    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return p.size(); }

    std::size_t index(const std::vector<int>& idx) const {
        std::size_t k = 0;
        for (std::size_t a = 0; a < shape.size(); ++a) k = k * shape[a] + idx[a];
        return k;
    }
    std::vector<int> unravel(std::size_t k) const {
        std::vector<int> idx(shape.size());
        for (std::size_t a = shape.size(); a-- > 0;) {
            idx[a] = static_cast<int>(k % shape[a]);
            k /= shape[a];
        }
        return idx;
    }
    double& operator[](std::size_t k) { return p[k]; }
    double operator[](std::size_t k) const { return p[k]; }

    double sum() const {
        double s = 0.0;
        for (double v : p) s += v;
        return s;
    }

    // Marginal over the listed axes, in the listed order.
    Tensor marginal(const std::vector<int>& axes) const {
        std::vector<int> ms;
        for (int a : axes) ms.push_back(shape[a]);
        Tensor m(ms);
        for (std::size_t k = 0; k < p.size(); ++k) {
            auto idx = unravel(k);
            std::size_t j = 0;
            for (int a : axes) j = j * shape[a] + idx[a];
            m.p[j] += p[k];
        }
        return m;
    }

    static Tensor from_matrix(const Mat& m) {
        Tensor t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) t.p[i * m.cols() + j] = m(i, j);
        return t;
    }
    Mat to_matrix() const {
        Mat m(shape[0], static_cast<Eigen::Index>(p.size() / shape[0]));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = p[i * m.cols() + j];
        return m;
    }
};

using JointDist = Tensor;

inline void check_joint(const JointDist& t, double tol = kArithTol) {
    double s = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (!std::isfinite(t.p[k]) || t.p[k] < 0.0)
            throw Error(ErrorKind::validation, "joint distribution entry " + std::to_string(k) + " is negative");
        s += t.p[k];
    }
    if (std::abs(s - 1.0) > tol) throw Error(ErrorKind::validation, "joint distribution sums to " + std::to_string(s));
}

// Rows of probability vectors V(y|x).
struct CondDist {
    Mat v;

    CondDist() = default;
    explicit CondDist(Mat m, double tol = kSimplexTol) : v(std::move(m)) {
        for (Eigen::Index x = 0; x < v.rows(); ++x) check_simplex(v.row(x).transpose(), tol, "row " + std::to_string(x));
    }
};

struct SolveReport {
    int iterations = 0;
    double step = 0.0;
    std::size_t trace_length = 0;
    bool converged = false;
    bool boundary = false;
    bool stalled = false;
    std::string note;
};

struct DualParams {
    double s = 0.0;
    Vec a;
    Vec b;
    double rho = 1.0;
    Vec r;
};

enum class Form { primal, dual, closed_form };

inline const char* form_name(Form f) {
    switch (f) {
        case Form::primal: return "primal";
        case Form::dual: return "dual";
        default: return "closed-form";
    }
}

struct Certificate {
    std::optional<DualParams> dual;
    std::optional<JointDist> joint;
};

struct RateResult {
    double value = 0.0;
    Form form = Form::dual;
    Certificate certificate;
    std::optional<double> gap;
    SolveReport report;
    bool zero_by_positivity = false;
    bool infinite = false;

    double bits() const { return to_bits(value); }
};

}  // namespace mismatch
