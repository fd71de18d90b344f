#pragma once

#include "problems.hpp"
#include "types.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mismatch {

using json = nlohmann::json;

inline constexpr double kRenormTol = 1e-9;

struct ProblemFile {
    std::string kind;
    std::optional<Dmc> w;
    std::optional<Metric> q;
    std::optional<InputDist> input;
    std::optional<MacProblem> mac;
    std::optional<RdProblem> rd;
    std::optional<InputDist> dist;
    std::optional<ScInput> sc;
    std::optional<ExpParSpec> exppar;
};

namespace detail {

[[noreturn]] inline void bad(const std::string& msg) { throw Error(ErrorKind::validation, msg); }

inline double number(const json& v, const std::string& where) {
    if (!v.is_number()) bad(where + ": expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) bad(where + ": not finite");
    return d;
}

inline int count(const json& j, const char* key) {
    if (!j.contains(key)) bad(std::string("missing field \"") + key + "\"");
    if (!j[key].is_number_integer() || j[key].get<long>() < 1) bad(std::string("field \"") + key + "\" must be a positive integer");
    return j[key].get<int>();
}

inline Vec vector_of(const json& v, const std::string& name, int expect = -1) {
    if (!v.is_array()) bad(name + ": expected an array");
    if (expect >= 0 && static_cast<int>(v.size()) != expect)
        bad(name + ": expected " + std::to_string(expect) + " entries, got " + std::to_string(v.size()));
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = number(v[i], name + "[" + std::to_string(i) + "]");
    return out;
}

inline Mat matrix_of(const json& v, const std::string& name, int rows, int cols) {
    if (!v.is_array() || static_cast<int>(v.size()) != rows)
        bad(name + ": expected " + std::to_string(rows) + " rows");
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!v[r].is_array() || static_cast<int>(v[r].size()) != cols)
            bad(name + " row " + std::to_string(r) + ": expected " + std::to_string(cols) + " columns");
        for (int c = 0; c < cols; ++c)
            m(r, c) = number(v[r][c], name + " row " + std::to_string(r) + " column " + std::to_string(c));
    }
    return m;
}

// Rows renormalized when within kRenormTol of 1, rejected otherwise.
inline Vec stochastic(Vec p, const std::string& name) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) < 0.0) bad(name + " entry " + std::to_string(i) + " is negative");
    double s = p.sum();
    if (std::abs(s - 1.0) > kRenormTol) bad(name + " sums to " + std::to_string(s));
    return p / s;
}

inline Mat stochastic_rows(Mat m, const std::string& name) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            if (m(r, c) < 0.0) bad(name + " row " + std::to_string(r) + " column " + std::to_string(c) + " is negative");
        double s = m.row(r).sum();
        if (std::abs(s - 1.0) > kRenormTol) bad(name + " row " + std::to_string(r) + " sums to " + std::to_string(s));
        m.row(r) /= s;
    }
    return m;
}

inline Mat tensor3(const json& v, const std::string& name, int a, int b, int c) {
    if (!v.is_array() || static_cast<int>(v.size()) != a) bad(name + ": expected " + std::to_string(a) + " blocks");
    Mat m(a * b, c);
    for (int i = 0; i < a; ++i) {
        Mat blk = matrix_of(v[i], name + "[" + std::to_string(i) + "]", b, c);
        m.middleRows(i * b, b) = blk;
    }
    return m;
}

inline InputDist uniform(int n) { return InputDist(Vec::Constant(n, 1.0 / n)); }

}  // namespace detail

inline InputDist parse_distribution(const json& v, const std::string& name, int expect = -1) {
    return InputDist(detail::stochastic(detail::vector_of(v, name, expect), name), 1e-12);
}

// Comma-separated probabilities, e.g. "0.449,0.551,0".
inline Vec parse_csv_vector(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            detail::bad("cannot parse number \"" + tok + "\"");
        }
    }
    if (v.empty()) detail::bad("empty vector");
    return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline ProblemFile parse_problem(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        detail::bad(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) detail::bad("missing string field \"kind\"");
    ProblemFile pf;
    pf.kind = j["kind"].get<std::string>();
    if (pf.kind == "dmc") {
        int nx = detail::count(j, "X"), ny = detail::count(j, "Y");
        if (!j.contains("W")) detail::bad("missing field \"W\"");
        pf.w = Dmc(detail::stochastic_rows(detail::matrix_of(j["W"], "W", nx, ny), "W"));
        pf.q = Metric(j.contains("q") ? detail::matrix_of(j["q"], "q", nx, ny) : pf.w->w);
        if (j.contains("Q")) pf.input = parse_distribution(j["Q"], "Q", nx);
    } else if (pf.kind == "mac") {
        int n1 = detail::count(j, "X1"), n2 = detail::count(j, "X2"), ny = detail::count(j, "Y");
        if (!j.contains("W")) detail::bad("missing field \"W\"");
        Mat w = detail::stochastic_rows(detail::tensor3(j["W"], "W", n1, n2, ny), "W");
        Mat q = j.contains("q") ? detail::tensor3(j["q"], "q", n1, n2, ny) : w;
        InputDist q1 = j.contains("Q1") ? parse_distribution(j["Q1"], "Q1", n1) : detail::uniform(n1);
        InputDist q2 = j.contains("Q2") ? parse_distribution(j["Q2"], "Q2", n2) : detail::uniform(n2);
        pf.mac = MacProblem(n1, n2, Dmc(w), Metric(q), q1, q2);
    } else if (pf.kind == "rd") {
        int nx = detail::count(j, "X"), nh = detail::count(j, "Xhat");
        if (!j.contains("source") || !j.contains("d0")) detail::bad("rd: fields \"source\" and \"d0\" are required");
        InputDist src = parse_distribution(j["source"], "source", nx);
        Mat d0 = detail::matrix_of(j["d0"], "d0", nx, nh);
        Mat d1 = j.contains("d1") ? detail::matrix_of(j["d1"], "d1", nx, nh) : d0;
        InputDist qh = j.contains("Qhat") ? parse_distribution(j["Qhat"], "Qhat", nh) : detail::uniform(nh);
        pf.rd = RdProblem(src, d0, d1, qh);
    } else if (pf.kind == "dist") {
        if (!j.contains("p")) detail::bad("missing field \"p\"");
        pf.dist = parse_distribution(j["p"], "p");
    } else if (pf.kind == "sc") {
        int nu = detail::count(j, "U");
        if (!j.contains("Qux") || !j["Qux"].is_array() || j["Qux"].empty() || !j["Qux"][0].is_array())
            detail::bad("sc: field \"Qux\" must be a |U| x |X| matrix");
        int nx = static_cast<int>(j["Qux"][0].size());
        Mat m = detail::matrix_of(j["Qux"], "Qux", nu, nx);
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (m.data()[i] < 0.0) detail::bad("Qux has a negative entry");
        double s = m.sum();
        if (std::abs(s - 1.0) > kRenormTol) detail::bad("Qux sums to " + std::to_string(s));
        pf.sc = ScInput(m / s);
    } else if (pf.kind == "exppar") {
        if (!j.contains("psi") || !j.contains("Q1") || !j.contains("Q2")) detail::bad("exppar: fields psi, Q1, Q2 are required");
        ExpParSpec sp;
        sp.q1 = parse_distribution(j["Q1"], "Q1");
        sp.q2 = parse_distribution(j["Q2"], "Q2");
        sp.n1 = sp.q1.size();
        sp.n2 = sp.q2.size();
        Mat psi = detail::matrix_of(j["psi"], "psi", sp.n1, sp.n2);
        sp.psi.assign(sp.n1, std::vector<int>(sp.n2));
        for (int a = 0; a < sp.n1; ++a)
            for (int b = 0; b < sp.n2; ++b) {
                if (psi(a, b) < 0.0 || psi(a, b) != std::floor(psi(a, b)))
                    detail::bad("psi row " + std::to_string(a) + " column " + std::to_string(b) + " must be a nonnegative index");
                sp.psi[a][b] = static_cast<int>(psi(a, b));
            }
        pf.exppar = sp;
    } else {
        detail::bad("unknown kind \"" + pf.kind + "\"");
    }
    return pf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::validation, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ProblemFile load_problem(const std::string& path) { return parse_problem(read_file(path)); }

inline json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json report_json(const SolveReport& r) {
    return {{"iterations", r.iterations}, {"converged", r.converged}, {"boundary", r.boundary},
            {"stalled", r.stalled}, {"step", r.step}, {"trace_length", r.trace_length}, {"note", r.note}};
}

inline json certificate_json(const Certificate& c) {
    json j = json::object();
    if (c.dual) {
        json d = {{"s", c.dual->s}, {"rho", c.dual->rho}};
        if (c.dual->a.size()) d["a"] = vec_json(c.dual->a);
        if (c.dual->b.size()) d["b"] = vec_json(c.dual->b);
        if (c.dual->r.size()) d["r"] = vec_json(c.dual->r);
        j["dual"] = d;
    }
    if (c.joint) j["joint"] = {{"shape", c.joint->shape}, {"p", c.joint->p}};
    return j;
}

// {value_bits, value_nats, form, certificate, gap, report}; infinite values are null with "infinite": true.
inline json result_json(double nats, const std::string& form, const json& certificate, std::optional<double> gap,
                        const SolveReport& report, bool infinite = false) {
    json j;
    if (infinite || !std::isfinite(nats)) {
        j["value_bits"] = nullptr;
        j["value_nats"] = nullptr;
        j["infinite"] = true;
    } else {
        j["value_bits"] = to_bits(nats);
        j["value_nats"] = nats;
    }
    j["form"] = form;
    j["certificate"] = certificate;
    j["gap"] = gap && std::isfinite(*gap) ? json(*gap) : json(nullptr);
    j["report"] = report_json(report);
    return j;
}

inline json result_json(const RateResult& r) {
    SolveReport rep = r.report;
    json j = result_json(r.value, form_name(r.form), certificate_json(r.certificate), r.gap, rep, r.infinite);
    if (r.zero_by_positivity) j["zero_by_positivity"] = true;
    return j;
}

// Re-validation of an emitted result.
inline void validate_result(const json& j) {
    for (const char* k : {"value_bits", "value_nats", "form", "certificate", "gap", "report"})
        if (!j.contains(k)) detail::bad(std::string("result: missing field \"") + k + "\"");
    if (j["value_nats"].is_null()) {
        if (!j.value("infinite", false)) detail::bad("result: null value without infinite flag");
        return;
    }
    double n = detail::number(j["value_nats"], "value_nats"), b = detail::number(j["value_bits"], "value_bits");
    if (std::abs(to_bits(n) - b) > 1e-9 * (1.0 + std::abs(b))) detail::bad("result: bits and nats disagree");
    if (!j["report"].is_object() || !j["report"].contains("converged")) detail::bad("result: malformed report");
}

}  // namespace mismatch
