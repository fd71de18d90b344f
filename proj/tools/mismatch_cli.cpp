// mismatch: command-line front-end for the mismatched-decoding toolkit.

#include "mismatch/mismatch.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <thread>

using namespace mismatch;

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string verb, sub, scenario;
    std::string problem, input, qux, spec, rho_grid, fading, costs, pair;
    std::string which = "lm", ensemble = "iid", format = "json";
    std::optional<double> rate, distortion, from, to, step;
    double tol = 1e-6;
    unsigned seed = 0;
    double gamma = 1.0, sigma2 = 1.0, alpha = 1.0, mu = 0.0;
    double delta = 0.11, delta1 = 0.11, rgv_delta = 0.0, rgv_s = 0.5;
    int k = 2, n = 40, M = 16, trials = 10000, angles = 16, threads = 0;
};

// Everything a single command prints, plus whether every solver converged.
struct Output {
    json body;
    bool converged = true;
};

const std::map<std::string, std::vector<std::string>> kVerbs = {
    {"rate", {"gmi", "lm", "lm-b", "fixed-cost", "multiletter", "sc", "rsc", "exppar", "binary-cap"}},
    {"region", {"mac", "mac-boundary"}},
    {"exponent", {"iid", "cc", "excc", "rgv", "curve"}},
    {"bound", {"single-letter", "multiletter-check"}},
    {"rd", {"distortion", "iid", "cc", "matched", "gaussian"}},
    {"gauss", {"signal", "noise", "fading"}},
    {"sweep", {"binary-example", "parallel-bsc", "sum-bsc", "cnv-sc", "exponent", "rd", "gauss-alpha"}},
    {"oracle", {"grid", "mc"}},
};

ProblemFile need_problem(const Options& o, const char* kind) {
    if (o.problem.empty()) throw Usage(o.verb + " " + o.sub + ": --problem is required");
    ProblemFile pf = load_problem(o.problem);
    if (pf.kind != kind) throw Error(ErrorKind::validation, "problem kind \"" + pf.kind + "\" where \"" + kind + "\" is expected");
    return pf;
}

InputDist input_for(const Options& o, const ProblemFile& pf, int nx) {
    if (!o.input.empty()) {
        Vec v = parse_csv_vector(o.input);
        if (v.size() != nx) throw Error(ErrorKind::validation, "--input has " + std::to_string(v.size()) + " entries, expected " + std::to_string(nx));
        return InputDist(v, kRenormTol);
    }
    if (pf.input) return *pf.input;
    return InputDist(Vec::Constant(nx, 1.0 / nx));
}

double need(const std::optional<double>& v, const char* flag) {
    if (!v) throw Usage(std::string(flag) + " is required");
    return *v;
}

Output rate_output(const RateResult& r) { return {result_json(r), r.report.converged}; }

Output plain(double nats, const char* form, json cert = json::object()) {
    SolveReport rep;
    rep.converged = true;
    return {result_json(nats, form, cert, std::nullopt, rep), true};
}

Mat parse_costs(const std::string& s, int nx) {
    std::vector<Vec> cols;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ';')) {
        Vec c = parse_csv_vector(part);
        if (c.size() != nx) throw Error(ErrorKind::validation, "--costs: each cost needs " + std::to_string(nx) + " entries");
        cols.push_back(c);
    }
    Mat m(nx, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = cols[i];
    return m;
}

std::vector<FadingAtom> parse_fading(const std::string& s) {
    std::vector<FadingAtom> out;
    std::stringstream ss(s);
    std::string atom;
    while (std::getline(ss, atom, ',')) {
        std::replace(atom.begin(), atom.end(), ':', ',');
        Vec v = parse_csv_vector(atom);
        if (v.size() != 3) throw Error(ErrorKind::validation, "--fading-atoms: expected p:hsq:esq, got \"" + atom + "\"");
        out.push_back({v(0), v(1), v(2)});
    }
    return out;
}

GaussParams gauss_params(const Options& o) {
    GaussParams p;
    p.gamma = o.gamma;
    p.sigma2 = o.sigma2;
    p.alpha = o.alpha;
    p.mu = o.mu;
    if (!o.fading.empty()) p.fading = parse_fading(o.fading);
    p.validate();
    return p;
}

json sc_json(double total, double r0, double r1, double rho, const SolveReport& rep) {
    json c = {{"r0_nats", r0}, {"r1_nats", r1}, {"rho", rho}};
    return result_json(total, "dual", c, std::nullopt, rep);
}

ScInput need_sc(const Options& o) {
    if (o.qux.empty()) throw Usage("--qux is required");
    ProblemFile s = load_problem(o.qux);
    if (!s.sc) throw Error(ErrorKind::validation, "--qux must point to a problem of kind \"sc\"");
    return *s.sc;
}

Output run_rate(const Options& o) {
    ProblemFile pf = need_problem(o, "dmc");
    const Dmc& w = *pf.w;
    const Metric& m = *pf.q;
    if (o.sub == "binary-cap") return plain(binary_mismatch_capacity(w, m), "closed-form");
    if (o.sub == "sc" || o.sub == "rsc") {
        ScInput sc = need_sc(o);
        if (sc.nx() != w.nx()) throw Error(ErrorKind::validation, "--qux: |X| does not match the channel");
        if (o.sub == "sc") {
            ScRate r = sc_rate(w, m, sc);
            return {sc_json(r.total, r.r0, r.r1, r.rho, r.report), r.report.converged};
        }
        RscRate r = rsc_rate(w, m, sc);
        json j = result_json(r.total, "dual", {{"r0_nats", r.r0}, {"r1u_nats", r.r1u}, {"weights", vec_json(r.weights)}},
                             std::nullopt, r.report);
        return {j, r.report.converged};
    }
    if (o.sub == "exppar") {
        if (o.spec.empty()) throw Usage("rate exppar: --spec is required");
        ProblemFile sp = load_problem(o.spec);
        if (!sp.exppar) throw Error(ErrorKind::validation, "--spec must point to a problem of kind \"exppar\"");
        ExpParRate r = expurgated_parallel_rate(w, m, *sp.exppar);
        json c = {{"r1max_nats", r.r1max}, {"r2max_nats", r.r2max}, {"total_u1_nats", r.total_u1},
                  {"total_u2_nats", r.total_u2}, {"weakened_lm_nats", r.weakened_lm}};
        return plain(r.total, "dual", c);
    }
    if (o.sub == "multiletter") {
        if (o.k < 1) throw Usage("--k must be positive");
        int nk = 1;
        for (int i = 0; i < o.k; ++i) nk *= w.nx();
        InputDist qk = InputDist(Vec::Constant(nk, 1.0 / nk));
        if (!o.input.empty()) {
            Vec v = parse_csv_vector(o.input);
            if (v.size() == nk)
                qk = InputDist(v, kRenormTol);
            else if (v.size() == w.nx())
                qk = InputDist(product_input(InputDist(v, kRenormTol).p, o.k), 1e-9);
            else
                throw Error(ErrorKind::validation, "--input must have |X| or |X|^k entries");
        } else if (pf.input) {
            qk = InputDist(product_input(pf.input->p, o.k), 1e-9);
        }
        Which which = o.which == "gmi" ? Which::gmi : Which::lm;
        return rate_output(multiletter_rate(w, m, o.k, qk, which));
    }
    InputDist q = input_for(o, pf, w.nx());
    if (o.sub == "gmi") return rate_output(gmi(q, w, m));
    if (o.sub == "lm") return rate_output(lm(q, w, m));
    if (o.sub == "lm-b") return rate_output(lm_dual_b_form(q, w, m));
    if (o.costs.empty()) throw Usage("rate fixed-cost: --costs is required");
    return rate_output(fixed_cost_lm(q, w, m, parse_costs(o.costs, w.nx())));
}

Output run_region(const Options& o) {
    MacProblem pr = *need_problem(o, "mac").mac;
    if (o.sub == "mac") {
        RateResult r1 = mac_single_bound(pr, 1), r2 = mac_single_bound(pr, 2), ws = mac_weakened_sum_bound(pr);
        json j = {{"r1", result_json(r1)}, {"r2", result_json(r2)}, {"weakened_sum", result_json(ws)}};
        if (!o.pair.empty()) {
            Vec rp = parse_csv_vector(o.pair);
            if (rp.size() != 2) throw Error(ErrorKind::validation, "--pair expects R1,R2");
            MacSumCheck c = mac_sum_condition(pr, rp(0), rp(1));
            j["pair"] = {{"r1_nats", rp(0)}, {"r2_nats", rp(1)}, {"inside", c.holds && rp(0) <= r1.value && rp(1) <= r2.value},
                         {"sum_condition", c.holds}, {"margin_nats", c.margin}, {"rho1", c.rho1}, {"rho2", c.rho2}};
        }
        return {j, r1.report.converged && r2.report.converged && ws.report.converged};
    }
    if (o.angles < 8) throw Usage("--angles must be at least 8");
    MacBoundary b = mac_region_boundary(pr, o.angles, std::min(o.tol, 1e-6));
    json pts = json::array();
    for (std::size_t i = 0; i < b.constrained.size(); ++i)
        pts.push_back({{"r1_bits", to_bits(b.constrained[i].r1)}, {"r2_bits", to_bits(b.constrained[i].r2)},
                       {"weakened_r1_bits", to_bits(b.weakened[i].r1)}, {"weakened_r2_bits", to_bits(b.weakened[i].r2)}});
    return {{{"i1_bits", to_bits(b.i1)}, {"i2_bits", to_bits(b.i2)}, {"weakened_sum_bits", to_bits(b.weakened_sum)}, {"boundary", pts}},
            true};
}


json exponent_json(const ExponentValue& e) {
    return result_json(e.value, "dual", {{"rho", e.rho}, {"params", vec_json(e.params)}}, std::nullopt, e.report);
}

Output run_exponent(const Options& o) {
    ProblemFile pf = need_problem(o, "dmc");
    const Dmc& w = *pf.w;
    const Metric& m = *pf.q;
    InputDist q = input_for(o, pf, w.nx());
    RgvSpec spec{bhattacharyya_distance(w, m, o.rgv_s), o.rgv_delta};
    if (o.sub == "curve") {
        Ensemble ens = o.ensemble == "cc" ? Ensemble::cc : o.ensemble == "excc" ? Ensemble::ex_cc : o.ensemble == "rgv" ? Ensemble::rgv : Ensemble::iid;
        double lo = o.from.value_or(0.0), hi = need(o.to, "--to"), st = o.step.value_or((hi - lo) / 20.0);
        if (!(st > 0.0) || lo > hi) throw Usage("empty rate range");
        std::vector<double> grid;
        for (long i = 0; lo + i * st <= hi + 1e-12 * st; ++i) grid.push_back(lo + i * st);
        ExponentCurve c = exponent_curve(q, w, m, ens, grid, &spec);
        json pts = json::array();
        for (auto& p : c.samples) pts.push_back({{"rate_nats", p.rate}, {"exponent_nats", p.exponent}});
        return {{{"ensemble", ensemble_name(ens)}, {"curve", pts}}, true};
    }
    if (!o.rho_grid.empty()) {
        if (o.sub == "rgv") throw Usage("--rho-grid is not available for rgv");
        Vec rhos = parse_csv_vector(o.rho_grid);
        json pts = json::array();
        bool conv = true;
        for (double rho : rhos) {
            if (rho < 0.0) throw Error(ErrorKind::validation, "--rho-grid entries must be nonnegative");
            ExponentValue e = o.sub == "iid" ? e0_iid(q, w, m, rho) : o.sub == "cc" ? e0_cc(q, w, m, rho) : ex_cc(q, w, m, rho);
            conv = conv && e.report.converged;
            pts.push_back({{"rho", rho}, {"value_nats", e.value}});
        }
        return {{{"function", o.sub == "excc" ? "Ex" : "E0"}, {"values", pts}}, conv};
    }
    double R = need(o.rate, "--rate");
    if (o.sub == "rgv") {
        RgvResult r = rgv_exponent(q, w, m, spec, R);
        json j = exponent_json(r.detail);
        j["rate_condition_ok"] = r.rate_condition_ok;
        j["rate_bound_nats"] = r.rate_bound;
        return {j, r.detail.report.converged};
    }
    ExponentValue e = o.sub == "iid" ? er_iid(q, w, m, R) : o.sub == "cc" ? er_cc(q, w, m, R) : eex_cc(q, w, m, R);
    return {exponent_json(e), e.report.converged};
}

json rows_json(const Mat& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.rows(); ++i) a.push_back(vec_json(v.row(i).transpose()));
    return a;
}

Output run_bound(const Options& o) {
    ProblemFile pf = need_problem(o, "dmc");
    const Dmc& w = *pf.w;
    const Metric& m = *pf.q;
    if (o.sub == "single-letter") {
        ConverseResult r = single_letter_upper_bound(w, m, std::min(o.tol, 1e-6));
        json c = {{"ybar_given_x", rows_json(r.witness.marginal_ybar())}, {"input", vec_json(r.input)}};
        json j = result_json(r.value, "primal", c, r.gap, r.report);
        j["matched_capacity_bits"] = to_bits(blahut_arimoto_capacity(w.w).capacity);
        return {j, r.report.converged};
    }
    if (o.k < 1) throw Usage("--k must be positive");
    MultiletterCheck c = multiletter_bound_check(w, m, o.k);
    return {{{"single_bits", to_bits(c.single)}, {"k", o.k}, {"k_normalized_bits", to_bits(c.k_normalized)},
             {"difference_bits", to_bits(c.difference)}},
            true};
}

Output run_rd(const Options& o) {
    if (o.sub == "gaussian") {
        double D = need(o.distortion, "--distortion");
        if (!(o.sigma2 > 0.0) || !(D > 0.0)) throw Error(ErrorKind::validation, "rd gaussian: sigma2 and distortion must be positive");
        return plain(gaussian_rd_rate(o.sigma2, D).rate, "closed-form");
    }
    RdProblem p = *need_problem(o, "rd").rd;
    if (o.sub == "distortion") {
        double R = need(o.rate, "--rate");
        DistortionResult r = mismatched_distortion(p, R);
        return {{{"quantity", "distortion"}, {"rate_nats", R}, {"distortion", r.value}, {"stage1", r.stage1},
                 {"eps", r.eps}, {"report", report_json(r.report)}},
                r.report.converged};
    }
    double D = need(o.distortion, "--distortion");
    if (o.sub == "iid") return rate_output(rd_iid_rate(p, D));
    if (o.sub == "cc") return rate_output(rd_cc_rate(p, D));
    return plain(matched_rd(p.source.p, p.d0, D), "dual");
}

json gauss_json(double value, double s, double s_num, double numeric) {
    SolveReport rep;
    rep.converged = std::abs(numeric - value) <= 1e-6 * (1.0 + std::abs(value));
    json c = {{"s", s}, {"s_numeric", s_num}, {"numeric_nats", numeric}};
    return result_json(value, "closed-form", c, numeric - value, rep);
}

Output run_gauss(const Options& o) {
    GaussParams p = gauss_params(o);
    if (o.sub == "signal") {
        GaussRate g = gmi_signal_level(p);
        json j = {{"gmi", result_json(g.value, "dual", {{"s", g.s}}, std::nullopt, SolveReport{0, 0, 0, true})},
                  {"lm", result_json(lm_signal_level(p), "closed-form", json::object(), std::nullopt, SolveReport{0, 0, 0, true})},
                  {"capacity", result_json(awgn_capacity(p.alpha * p.alpha * p.gamma, p.sigma2), "closed-form", json::object(), std::nullopt,
                                           SolveReport{0, 0, 0, true})}};
        return {j, true};
    }
    if (o.sub == "noise") {
        GaussRate g = gmi_nn_noise(p), l = lm_fixed_cost_noise(p);
        json jl = gauss_json(l.value, l.s, l.s_numeric, l.numeric);
        jl["certificate"]["r"] = l.r;
        jl["certificate"]["r_numeric"] = l.r_numeric;
        json j = {{"gmi", gauss_json(g.value, g.s, g.s_numeric, g.numeric)}, {"lm", jl}};
        return {j, j["gmi"]["report"]["converged"].get<bool>() && jl["report"]["converged"].get<bool>()};
    }
    if (p.fading.empty()) throw Usage("gauss fading: --fading-atoms is required");
    FadingRate f = gmi_fading(p);
    SolveReport rep{0, 0, 0, std::abs(f.numeric - f.value) <= 1e-6 * (1.0 + f.value)};
    json j = {{"gmi", result_json(f.value, "closed-form", {{"s", f.s}, {"s_numeric", f.s_numeric}}, f.numeric - f.value, rep)},
              {"capacity", result_json(awgn_fading_capacity(p), "closed-form", json::object(), std::nullopt, SolveReport{0, 0, 0, true})}};
    return {j, rep.converged};
}

Output run_oracle(const Options& o) {
    if (o.problem.empty()) throw Usage("oracle: --problem is required");
    ProblemFile pf = load_problem(o.problem);
    if (o.sub == "grid") {
        double v = 0.0;
        if (pf.kind == "rd") {
            const RdProblem& p = *pf.rd;
            double D = need(o.distortion, "--distortion");
            v = o.which == "rd-iid" ? grid_rd_iid(p.source.p, p.d1, p.q_hat.p, D, o.n) : grid_rd_cc(p.source.p, p.d1, p.q_hat.p, D, o.n);
        } else if (pf.kind == "dmc") {
            InputDist q = input_for(o, pf, pf.w->nx());
            if (o.which == "gmi")
                v = grid_gmi_primal(q, *pf.w, *pf.q, o.n);
            else if (o.which == "lm")
                v = grid_lm_primal(q, *pf.w, *pf.q, o.n);
            else {
                PrimalExponent e = o.which == "er-iid" ? PrimalExponent::er_iid
                                 : o.which == "er-cc"  ? PrimalExponent::er_cc
                                 : o.which == "ex-cc"  ? PrimalExponent::ex_cc
                                 : o.which == "ck"     ? PrimalExponent::ck
                                                       : throw Usage("oracle grid: unknown --which \"" + o.which + "\"");
                v = grid_exponent_primal(q, *pf.w, *pf.q, need(o.rate, "--rate"), e, o.n);
            }
        } else {
            throw Error(ErrorKind::validation, "oracle grid: problem kind must be dmc or rd");
        }
        return plain(v, "primal", {{"N", o.n}, {"which", o.which}});
    }
    if (pf.kind != "dmc") throw Error(ErrorKind::validation, "oracle mc: problem kind must be dmc");
    InputDist q = input_for(o, pf, pf.w->nx());
    McEnsemble ens = o.ensemble == "cc" ? McEnsemble::cc : McEnsemble::iid;
    McEstimate e = monte_carlo_error(*pf.w, *pf.q, q, ens, o.n, o.M, o.trials, o.seed);
    return {{{"estimate", e.estimate}, {"ci_low", e.lo}, {"ci_high", e.hi}, {"errors", e.errors}, {"trials", e.trials},
             {"n", o.n}, {"M", o.M}, {"ensemble", o.ensemble}, {"seed", o.seed}},
            true};
}

// ---- sweeps

struct Sweep {
    std::vector<std::string> header;
    std::function<std::vector<double>(double)> row;
    double from, to, step;
};

Sweep make_sweep(const Options& o) {
    Sweep s;
    auto range = [&](double a, double b, double st) {
        s.from = o.from.value_or(a);
        s.to = o.to.value_or(b);
        s.step = o.step.value_or(st);
    };
    const std::string& sc = o.sub;
    if (sc == "binary-example") {
        range(-2.0, 2.0, 0.05);
        const Dmc w(bsc(o.delta));
        s.header = {"lambda", "gmi_bits", "lm_bits", "matched_bits"};
        s.row = [w](double lam) {
            Metric m = binary_log_metric(lam);
            InputDist q{0.5, 0.5};
            return std::vector<double>{lam, gmi(q, w, m).bits(), lm(q, w, m).bits(), to_bits(mutual_information(q, w))};
        };
    } else if (sc == "parallel-bsc") {
        range(0.01, 0.49, 0.01);
        double d1 = o.delta1, d = o.delta;
        s.header = {"delta2", "matched_bits", "lm_bits", "lm_closed_form_bits"};
        s.row = [d1, d](double d2) {
            const Dmc w(parallel_bsc(d1, d2));
            const Metric m(parallel_bsc(d, d));
            InputDist q(Vec::Constant(4, 0.25));
            double cf = 2.0 * (1.0 - to_bits(binary_entropy(0.5 * (d1 + d2))));
            return std::vector<double>{d2, to_bits(mutual_information(q, w)), lm(q, w, m).bits(), cf};
        };
    } else if (sc == "sum-bsc") {
        range(0.01, 0.49, 0.01);
        double d1 = o.delta1, d = o.delta;
        s.header = {"delta2", "matched_bits", "refined_sc_bits", "lm_bits"};
        s.row = [d1, d](double d2) {
            const Dmc w1(bsc(d1)), w2(bsc(d2)), w(block_sum(bsc(d1), bsc(d2)));
            const Metric m1(bsc(d)), m(block_sum(bsc(d), bsc(d)));
            InputDist half{0.5, 0.5};
            double c1 = mutual_information(half, w1), c2 = mutual_information(half, w2);
            SumChannel matched = sum_channel_rate(c1, c2);
            SumChannel refined = sum_channel_rate(lm(half, w1, m1).value, lm(half, w2, m1).value);
            double a = 0.5 * matched.qu1, b = 0.5 * (1.0 - matched.qu1);
            InputDist q{a, a, b, b};
            return std::vector<double>{d2, to_bits(matched.rate), to_bits(refined.rate), lm(q, w, m).bits()};
        };
    } else if (sc == "cnv-sc") {
        range(0.70, 0.80, 0.005);
        Mat W(2, 3), Q(2, 3);
        W << 0.97, 0.03, 0.0, 0.1, 0.1, 0.8;
        Q << 1.0, 1.0, 1.0, 1.0, 0.5, 1.36;
        if (!o.problem.empty()) {
            ProblemFile pf = need_problem(o, "dmc");
            if (pf.w->nx() != 2) throw Error(ErrorKind::validation, "cnv-sc: channel input must be binary");
            W = pf.w->w;
            Q = pf.q->q;
        }
        const Dmc w(W);
        const Metric m(Q);
        auto [w2, m2] = product_extension(w, m, 2);
        s.header = {"Q0", "lm_bits", "sc2_bits"};
        s.row = [w, m, w2 = w2, m2 = m2](double q0) {
            double sc2 = sc_rate(w2, m2, cnv_two_letter_input(q0)).total / 2.0;
            return std::vector<double>{q0, lm(InputDist{q0, 1.0 - q0}, w, m).bits(), to_bits(sc2)};
        };
    } else if (sc == "exponent") {
        ProblemFile pf = need_problem(o, "dmc");
        const Dmc w = *pf.w;
        const Metric m = *pf.q;
        InputDist q = input_for(o, pf, w.nx());
        range(0.0, to_nats(1.0), 0.02);
        s.header = {"rate_nats", "er_iid", "er_cc", "eex_cc"};
        s.row = [w, m, q](double R) {
            return std::vector<double>{R, er_iid(q, w, m, R).value, er_cc(q, w, m, R).value, eex_cc(q, w, m, R).value};
        };
    } else if (sc == "rd") {
        RdProblem p = *need_problem(o, "rd").rd;
        double lo = rd_min_distortion(p.source.p, p.d1, p.q_hat.p), hi = rd_product_distortion(p.source.p, p.d1, p.q_hat.p);
        range(lo, hi, (hi - lo) / 20.0);
        s.header = {"distortion", "iid_bits", "cc_bits", "matched_bits"};
        s.row = [p](double D) {
            double iid = kInf;
            try {
                iid = rd_iid_rate(p, D).bits();
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::domain) throw;
            }
            RateResult cc = rd_cc_rate(p, D);
            return std::vector<double>{D, iid, cc.infinite ? kInf : cc.bits(), to_bits(matched_rd(p.source.p, p.d1, D))};
        };
    } else {
        range(1.0, 10.0, 0.5);
        GaussParams base = gauss_params(o);
        s.header = {"alpha", "gmi_bits", "lm_bits", "capacity_bits"};
        s.row = [base](double a) {
            GaussParams p = base;
            p.alpha = a;
            return std::vector<double>{a, to_bits(gmi_signal_level(p).value), to_bits(lm_signal_level(p)),
                                       to_bits(awgn_capacity(a * a * p.gamma, p.sigma2))};
        };
    }
    return s;
}

int run_sweep(const Options& o) {
    Sweep s = make_sweep(o);
    if (!(s.step > 0.0) || !std::isfinite(s.from) || !std::isfinite(s.to) || s.from > s.to) throw Usage("sweep: empty range");
    std::vector<double> grid;
    for (long i = 0; s.from + i * s.step <= s.to + 1e-9 * s.step; ++i) grid.push_back(s.from + i * s.step);
    std::vector<std::vector<double>> rows(grid.size());
    std::vector<std::exception_ptr> errs(grid.size());
    unsigned nt = o.threads > 0 ? static_cast<unsigned>(o.threads) : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(nt, grid.size()); ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < grid.size();) {
                try {
                    rows[i] = s.row(grid[i]);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    std::cout << std::setprecision(10);
    for (std::size_t c = 0; c < s.header.size(); ++c) std::cout << (c ? "," : "") << s.header[c];
    std::cout << '\n';
    for (auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) std::cout << (c ? "," : "") << r[c];
        std::cout << '\n';
    }
    return 0;
}

// ---- output

void csv_row(const std::string& name, const json& r) {
    auto num = [](const json& v) { return v.is_null() ? std::string("inf") : v.dump(); };
    std::cout << name << ',' << num(r["value_bits"]) << ',' << num(r["value_nats"]) << ',' << r["form"].get<std::string>() << ','
              << (r["gap"].is_null() ? "" : r["gap"].dump()) << ',' << (r["report"]["converged"].get<bool>() ? 1 : 0) << '\n';
}

void print(const Output& out, const std::string& format) {
    if (format == "json") {
        std::cout << out.body.dump(2) << '\n';
        return;
    }
    const json& b = out.body;
    if (b.contains("value_nats")) {
        std::cout << "name,value_bits,value_nats,form,gap,converged\n";
        csv_row("value", b);
        return;
    }
    bool nested = false;
    for (auto& [k, v] : b.items())
        if (v.is_object() && v.contains("value_nats")) nested = true;
    if (nested) {
        std::cout << "name,value_bits,value_nats,form,gap,converged\n";
        for (auto& [k, v] : b.items())
            if (v.is_object() && v.contains("value_nats")) csv_row(k, v);
        return;
    }
    std::cout << "name,value\n" << std::setprecision(12);
    for (auto& [k, v] : b.items())
        if (v.is_primitive()) std::cout << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    for (auto& [k, v] : b.items())
        if (v.is_array())
            for (std::size_t i = 0; i < v.size(); ++i)
                for (auto& [kk, vv] : v[i].items()) std::cout << k << '[' << i << "]." << kk << ',' << vv.dump() << '\n';
}

int dispatch(const Options& o) {
    auto it = kVerbs.find(o.verb);
    if (it == kVerbs.end()) throw Usage("unknown verb \"" + o.verb + "\"");
    if (std::find(it->second.begin(), it->second.end(), o.sub) == it->second.end())
        throw Usage("unknown " + o.verb + " sub-command \"" + o.sub + "\"");
    if (!(o.tol > 0.0)) throw Usage("--tol must be positive");
    if (o.format != "json" && o.format != "csv") throw Usage("--format must be json or csv");
    if (o.verb == "sweep") return run_sweep(o);
    Output out;
    if (o.verb == "rate") out = run_rate(o);
    else if (o.verb == "region") out = run_region(o);
    else if (o.verb == "exponent") out = run_exponent(o);
    else if (o.verb == "bound") out = run_bound(o);
    else if (o.verb == "rd") out = run_rd(o);
    else if (o.verb == "gauss") out = run_gauss(o);
    else out = run_oracle(o);
    print(out, o.format);
    return out.converged ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Mismatched-decoding rates, exponents, bounds and rate-distortion"};
    app.add_option("verb", o.verb, "rate | region | exponent | bound | rd | gauss | sweep | oracle")->required();
    app.add_option("sub", o.sub, "sub-command or sweep scenario")->required();
    app.add_option("--problem", o.problem, "problem JSON file");
    app.add_option("--input", o.input, "input distribution, comma separated");
    app.add_option("--qux", o.qux, "superposition input JSON (kind sc)");
    app.add_option("--spec", o.spec, "expurgated-parallel JSON (kind exppar)");
    app.add_option("--rate", o.rate, "rate in nats");
    app.add_option("--pair", o.pair, "MAC rate pair R1,R2 in nats");
    app.add_option("--distortion", o.distortion, "distortion level");
    app.add_option("--rho-grid", o.rho_grid, "comma separated rho values for E0/Ex tables");
    app.add_option("--tol", o.tol, "solver tolerance in nats")->capture_default_str();
    app.add_option("--seed", o.seed, "seed for randomized routines")->capture_default_str();
    app.add_option("--format", o.format, "json or csv")->capture_default_str();
    app.add_option("--gamma", o.gamma, "signal power")->capture_default_str();
    app.add_option("--sigma2", o.sigma2, "noise or source variance")->capture_default_str();
    app.add_option("--alpha", o.alpha, "signal-level mismatch")->capture_default_str();
    app.add_option("--mu", o.mu, "noise mean")->capture_default_str();
    app.add_option("--fading-atoms", o.fading, "p:hsq:esq,...");
    app.add_option("--costs", o.costs, "auxiliary costs a(x), comma separated; several separated by ';'");
    app.add_option("--which", o.which, "gmi | lm | er-iid | er-cc | ex-cc | ck | rd-iid | rd-cc")->capture_default_str();
    app.add_option("--ensemble", o.ensemble, "iid | cc | excc | rgv")->capture_default_str();
    app.add_option("--k", o.k, "letters in the product channel")->capture_default_str();
    app.add_option("--n", o.n, "grid resolution or block length")->capture_default_str();
    app.add_option("--M", o.M, "codebook size")->capture_default_str();
    app.add_option("--trials", o.trials, "Monte Carlo trials")->capture_default_str();
    app.add_option("--angles", o.angles, "boundary directions for mac-boundary")->capture_default_str();
    app.add_option("--from", o.from, "sweep start");
    app.add_option("--to", o.to, "sweep end");
    app.add_option("--step", o.step, "sweep step");
    app.add_option("--delta", o.delta, "decoder crossover for BSC scenarios")->capture_default_str();
    app.add_option("--delta1", o.delta1, "first BSC crossover")->capture_default_str();
    app.add_option("--rgv-delta", o.rgv_delta, "RGV distance threshold")->capture_default_str();
    app.add_option("--rgv-s", o.rgv_s, "exponent of the RGV distance")->capture_default_str();
    app.add_option("--threads", o.threads, "sweep worker threads (0: all cores)")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return dispatch(o);
    } catch (const Usage& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::convergence ? 4 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
