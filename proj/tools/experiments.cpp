#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ltsi/ltsi.hpp"
#include "ltsi/oracle.hpp"

namespace ltsi::cli {

using nlohmann::json;

bool ExperimentResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

Check le(std::string name, double v, double thr) { return {std::move(name), v, "<=", thr, v <= thr}; }
Check ge(std::string name, double v, double thr) { return {std::move(name), v, ">=", thr, v >= thr}; }
Check gt(std::string name, double v, double thr) { return {std::move(name), v, ">", thr, v > thr}; }

/// Everything an experiment needs from its config.
struct Setup {
    const ExperimentConfig& cfg;
    std::size_t n;
    TimeGrid grid;
    LtsOptions opt;

    Setup(const ExperimentConfig& c, std::size_t default_paths)
        : cfg(c), n(c.n_paths ? c.n_paths : default_paths), grid(TimeGrid::dyadic(c.dt_exponent)) {
        opt.level_spacing = std::ldexp(1.0, -c.level_spacing_exponent);
    }

    [[nodiscard]] SamplePath bm(std::uint64_t path, std::uint64_t seed_offset = 0) const {
        return brownian_path(grid, RngStream(cfg.seed + seed_offset, path));
    }

    template <class R>
    std::vector<R> map(std::size_t count, const std::function<R(std::size_t)>& fn) const {
        return parallel_map<R>(count, cfg.workers, fn);
    }
};

void require_dt(const ExperimentConfig& c, int min_exp, const char* why) {
    if (c.dt_exponent < min_exp) {
        throw ConfigError(std::string("dt_exponent must be >= ") + std::to_string(min_exp) + " for " + why);
    }
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

double mean_of(const std::vector<double>& v) { return summarize(v).mean; }

/// 1_{a>0}: space density 1 against δ_0.
TimeSpaceFunction indicator_positive() {
    return TimeSpaceFunction([](double, double a) { return a > 0.0 ? 1.0 : 0.0; }, std::nullopt,
                             SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::dirac(0.0)});
}

// 1 ----------------------------------------------------------------------

ExperimentResult tanaka_mean(const ExperimentConfig& c) {
    Setup s(c, 4096);
    auto L = s.map<double>(s.n, [&](std::size_t p) { return local_time_tanaka(s.bm(p), 0.0).terminal(); });
    const auto st = summarize(L);
    const double ref = oracle::abs_normal_mean();
    const double sim = oracle::abs_normal_sample_mean(std::size_t{1} << 20, c.seed);
    ExperimentResult r;
    r.summary = {{"mean_L0", st.mean}, {"se", st.se}, {"reference", ref}, {"oracle_abs_normal_mean", sim}};
    r.checks.push_back(le("rel_err_mean_L0", std::abs(st.mean - ref) / ref, 0.02));
    r.checks.push_back(le("rel_err_oracle_abs_normal", std::abs(sim - ref) / ref, 0.02));
    r.columns = {"path", "L0"};
    for (std::size_t p = 0; p < L.size(); ++p) r.rows.push_back({double(p), L[p]});
    return r;
}

// 2 ----------------------------------------------------------------------

ExperimentResult estimator_agreement(const ExperimentConfig& c) {
    require_dt(c, 10, "the quartered-dt comparison");
    Setup s(c, 256);
    constexpr std::size_t seeds = 64;
    const std::size_t per = std::max<std::size_t>(1, s.n / seeds);
    struct Row {
        double tanaka = 0, occ = 0, fine = 0, coarse = 0;
    };
    auto rows = s.map<Row>(seeds * per, [&](std::size_t k) {
        const auto X = s.bm(k % per, k / per);
        const auto Xc = coarsen(X, 4);
        Row row;
        row.tanaka = local_time_tanaka(X, 0.0).terminal();
        row.occ = local_time_occupation(X, 0.0, default_bandwidth(X.grid)).terminal();
        row.fine = std::abs(row.tanaka - row.occ);
        row.coarse = std::abs(local_time_tanaka(Xc, 0.0).terminal() -
                              local_time_occupation(Xc, 0.0, default_bandwidth(Xc.grid)).terminal());
        return row;
    });
    std::vector<double> fine, ratio;
    for (const auto& row : rows) fine.push_back(row.fine);
    for (std::size_t sd = 0; sd < seeds; ++sd) {
        double f = 0, co = 0;
        for (std::size_t p = 0; p < per; ++p) {
            f += rows[sd * per + p].fine;
            co += rows[sd * per + p].coarse;
        }
        ratio.push_back(co > 0 ? f / co : INFINITY);
    }
    ExperimentResult r;
    const double mf = mean_of(fine);
    const double mr = median(ratio);
    r.summary = {{"mean_abs_diff", mf}, {"median_ratio_fine_over_4dt", mr}, {"seeds", seeds}, {"paths_per_seed", per}};
    r.checks.push_back(le("mean_abs_diff", mf, 0.05));
    r.checks.push_back(le("median_ratio_fine_over_4dt", mr, 0.75));
    r.columns = {"seed_index", "path", "tanaka", "occupation", "abs_diff", "abs_diff_4dt"};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        r.rows.push_back({double(k / per), double(k % per), rows[k].tanaka, rows[k].occ, rows[k].fine, rows[k].coarse});
    }
    return r;
}

// 3 ----------------------------------------------------------------------

ExperimentResult occupation_formula_exp(const ExperimentConfig& c) {
    Setup s(c, 256);
    auto G = [](double t, double a) { return std::exp(-t) * std::cos(a); };
    auto res = s.map<OccupationCheck>(s.n, [&](std::size_t p) { return occupation_formula(G, s.bm(p), s.opt.level_spacing); });
    std::vector<double> rel;
    ExperimentResult r;
    r.columns = {"path", "time_side", "space_side", "rel_err"};
    for (std::size_t p = 0; p < res.size(); ++p) {
        rel.push_back(res[p].rel_err());
        r.rows.push_back({double(p), res[p].time_side, res[p].space_side, rel.back()});
    }
    r.summary = {{"max_rel_err", max_of(rel)}, {"median_rel_err", median(rel)}};
    r.checks.push_back(le("max_rel_err", max_of(rel), 0.01));
    return r;
}

// 4 ----------------------------------------------------------------------

TimeSpaceFunction arctan_decay() {
    return TimeSpaceFunction(
        [](double t, double a) { return std::exp(-t) * std::atan(a); },
        TimeDensity{[](double t, double a) { return -std::exp(-t) * std::atan(a); }, RadonMeasure::lebesgue({0.0, kInf})},
        SpaceDensity{[](double t, double a) { return std::exp(-t) / (1.0 + a * a); }, RadonMeasure::lebesgue()},
        VitaliDecl{});
}

ExperimentResult lts_equivalence(const ExperimentConfig& c) {
    Setup s(c, 256);
    const auto H = arctan_decay();
    auto reps = s.map<CrossCheckReport>(s.n, [&](std::size_t p) { return lts_cross_check(H, s.bm(p), 1.0, s.opt); });
    ExperimentResult r;
    r.columns = {"path", "time_density", "space_density", "vitali", "max_rel", "max_abs"};
    std::size_t bad = 0;
    std::vector<double> mrel;
    for (std::size_t p = 0; p < reps.size(); ++p) {
        const auto& rep = reps[p];
        bad += rep.agree(0.05, 0.02) ? 0 : 1;
        mrel.push_back(rep.max_rel());
        r.rows.push_back({double(p), rep.results[0].value, rep.results[1].value, rep.results[2].value, rep.max_rel(), rep.max_abs()});
    }
    r.summary = {{"paths_disagreeing", bad}, {"median_max_rel", median(mrel)}, {"worst_max_rel", max_of(mrel)}};
    r.checks.push_back(le("paths_disagreeing", double(bad), 0.0));
    return r;
}

// 5 ----------------------------------------------------------------------

CovFunction exp_abs() {
    TimeSpaceFunction Fx([](double t, double a) { return std::exp(-t) * (a > 0.0 ? 1.0 : -1.0); }, std::nullopt,
                         SpaceDensity{[](double t, double) { return std::exp(-t); }, RadonMeasure::dirac(0.0, 2.0)});
    TimeTerm Ft{[](double t, double x) { return -std::exp(-t) * std::abs(x); }, RadonMeasure::lebesgue({0.0, kInf})};
    return {[](double t, double x) { return std::exp(-t) * std::abs(x); }, std::move(Fx), {Ft}};
}

ExperimentResult cov_residual_abs_t(const ExperimentConfig& c) {
    require_dt(c, 10, "the quartered-dt comparison");
    Setup s(c, 256);
    const auto F = exp_abs();
    auto res = s.map<std::pair<double, double>>(s.n, [&](std::size_t p) {
        const auto X = s.bm(p);
        return std::pair{cov_residual(F, X, 1.0, s.opt).terminal_abs, cov_residual(F, coarsen(X, 4), 1.0, s.opt).terminal_abs};
    });
    std::vector<double> fine, coarse;
    ExperimentResult r;
    r.columns = {"path", "residual", "residual_4dt"};
    for (std::size_t p = 0; p < res.size(); ++p) {
        fine.push_back(res[p].first);
        coarse.push_back(res[p].second);
        r.rows.push_back({double(p), res[p].first, res[p].second});
    }
    const double mf = median(fine), mc = median(coarse);
    r.summary = {{"median_residual", mf}, {"median_residual_4dt", mc}};
    r.checks.push_back(le("median_terminal_residual", mf, 0.05));
    r.checks.push_back(le("median_ratio_fine_over_4dt", mc > 0 ? mf / mc : 0.0, 0.75));
    return r;
}

// 6 ----------------------------------------------------------------------

ExperimentResult local_time_on_curves(const ExperimentConfig& c) {
    Setup s(c, 256);
    CurveSplitFunction F;
    F.below = {[](double t, double x) { return 0.5 * t - x; }, [](double, double) { return 0.5; },
               [](double, double) { return -1.0; }, [](double, double) { return 0.0; }};
    F.above = {[](double t, double x) { return x - 0.5 * t; }, [](double, double) { return -0.5; },
               [](double, double) { return 1.0; }, [](double, double) { return 0.0; }};
    F.curve = [](double t) { return 0.5 * t; };
    auto res = s.map<double>(s.n, [&](std::size_t p) { return ltc_residual(F, s.bm(p), 1.0).terminal_abs; });
    ExperimentResult r;
    r.columns = {"path", "residual"};
    for (std::size_t p = 0; p < res.size(); ++p) r.rows.push_back({double(p), res[p]});
    r.summary = {{"median_residual", median(res)}, {"max_residual", max_of(res)}};
    r.checks.push_back(le("median_terminal_residual", median(res), 0.05));
    return r;
}

// 7 ----------------------------------------------------------------------

ExperimentResult ghomrasni(const ExperimentConfig& c) {
    Setup s(c, 256);
    const double eps = 0x1.0p-8;
    const auto H1 = indicator_positive();
    const TimeSpaceFunction H2([](double, double a) { return a; }, std::nullopt,
                               SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::lebesgue()});
    struct Row {
        double v1 = 0, lam1 = 0, sign1 = 0, v2 = 0, lam2 = 0, sign2 = 0;
    };
    auto rows = s.map<Row>(s.n, [&](std::size_t p) {
        const auto X = s.bm(p);
        const auto a = ghomrasni_limit(H1, X, 1.0, {eps}, s.opt);
        const auto b = ghomrasni_limit(H2, X, 1.0, {eps}, s.opt);
        return Row{a.table.rows.back().value, a.lambda, a.matched_sign, b.table.rows.back().value, b.lambda, b.matched_sign};
    });
    ExperimentResult r;
    r.columns = {"path", "indicator_value", "indicator_lambda", "indicator_sign", "identity_value", "identity_lambda", "identity_sign"};
    std::vector<double> d1, d2;
    double neg1 = 0, neg2 = 0;
    for (std::size_t p = 0; p < rows.size(); ++p) {
        const auto& w = rows[p];
        d1.push_back(std::abs(std::abs(w.v1) - std::abs(w.lam1)));
        d2.push_back(std::abs(w.v2 - 1.0));
        neg1 += w.sign1 < 0;
        neg2 += w.sign2 < 0;
        r.rows.push_back({double(p), w.v1, w.lam1, w.sign1, w.v2, w.lam2, w.sign2});
    }
    const double n = double(rows.size());
    r.summary = {{"eps", eps},
                 {"indicator_median_abs_diff", median(d1)},
                 {"indicator_fraction_within_0.05", double(std::count_if(d1.begin(), d1.end(), [](double v) { return v <= 0.05; })) / n},
                 {"indicator_fraction_matched_sign_negative", neg1 / n},
                 {"identity_max_abs_diff_from_T", max_of(d2)},
                 {"identity_fraction_matched_sign_negative", neg2 / n}};
    r.checks.push_back(le("indicator_max_abs_diff", max_of(d1), 0.05));
    r.checks.push_back(le("identity_max_rel_diff_from_T", max_of(d2), 0.02));
    return r;
}

// 8 ----------------------------------------------------------------------

ExperimentResult riemann_sums(const ExperimentConfig& c) {
    require_dt(c, 12, "partition depth 12");
    Setup s(c, 64);
    const std::vector<int> depths{6, 7, 8, 9, 10, 11, 12};
    std::vector<double> theta_v(s.grid.n_nodes());
    for (std::size_t i = 0; i < theta_v.size(); ++i) theta_v[i] = 0.5 * s.grid.time(i);
    const SamplePath theta(s.grid, theta_v);
    const std::vector<double> ones(s.grid.n_nodes(), 1.0);
    auto tabs = s.map<ConvergenceTable>(s.n, [&](std::size_t p) { return riemann_sum_localtime(ones, theta, s.bm(p), depths); });
    ExperimentResult r;
    r.columns = {"path", "S6", "S7", "S8", "S9", "S10", "S11", "S12", "reference"};
    std::vector<std::vector<double>> diffs(depths.size() - 1);
    std::vector<double> final_err;
    for (std::size_t p = 0; p < tabs.size(); ++p) {
        std::vector<double> row{double(p)};
        for (const auto& w : tabs[p].rows) row.push_back(w.value);
        row.push_back(tabs[p].rows.front().reference);
        r.rows.push_back(row);
        const auto d = tabs[p].successive_diffs();
        for (std::size_t k = 0; k < d.size(); ++k) diffs[k].push_back(d[k]);
        final_err.push_back(tabs[p].rows.back().abs_err);
    }
    json med = json::array();
    double violations = 0;
    double prev = INFINITY;
    for (auto& d : diffs) {
        const double m = median(d);
        med.push_back(m);
        if (!(m < prev)) violations += 1;
        prev = m;
    }
    r.summary = {{"median_successive_diffs", med}, {"median_final_abs_err", median(final_err)}, {"max_final_abs_err", max_of(final_err)}};
    r.checks.push_back(le("non_decreasing_median_diffs", violations, 0.0));
    r.checks.push_back(le("max_final_depth_abs_err", max_of(final_err), 0.05));
    return r;
}

// 9 ----------------------------------------------------------------------

ExperimentResult localtime_convergence(const ExperimentConfig& c) {
    Setup s(c, 64);
    const std::vector<double> ns{1, 2, 4, 8, 16};
    auto rows = s.map<std::vector<double>>(s.n, [&](std::size_t p) {
        const auto B = s.bm(p);
        const double l0 = local_time_tanaka(B, 0.0).terminal();
        std::vector<double> out;
        for (double n : ns) {
            std::vector<double> v(B.values);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += B.grid.time(i) / n;
            out.push_back(std::abs(local_time_tanaka(SamplePath(B.grid, std::move(v)), 0.0).terminal() - l0));
        }
        return out;
    });
    ExperimentResult r;
    r.columns = {"path", "n1", "n2", "n4", "n8", "n16"};
    json med = json::array();
    double violations = 0, prev = INFINITY;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        std::vector<double> col;
        for (const auto& row : rows) col.push_back(row[k]);
        const double m = median(col);
        med.push_back(m);
        if (!(m < prev)) violations += 1;
        prev = m;
    }
    for (std::size_t p = 0; p < rows.size(); ++p) {
        std::vector<double> row{double(p)};
        row.insert(row.end(), rows[p].begin(), rows[p].end());
        r.rows.push_back(row);
    }
    r.summary = {{"median_abs_diff_by_n", med}};
    r.checks.push_back(le("non_decreasing_medians", violations, 0.0));
    return r;
}

// 10 ---------------------------------------------------------------------

ExperimentResult lts_bounded_variation(const ExperimentConfig& c) {
    Setup s(c, 256);
    const auto H = indicator_positive();
    struct Row {
        double tv = 0, bound = 0, l0 = 0;
    };
    auto rows = s.map<Row>(s.n, [&](std::size_t p) {
        const auto X = s.bm(p);
        return Row{lts_space_density_process(H, X, s.opt).total_variation(), lts_variation_bound(H, X, s.opt),
                   local_time_tanaka(X, 0.0).terminal()};
    });
    ExperimentResult r;
    r.columns = {"path", "total_variation", "bound", "L0"};
    double excess = -INFINITY, mism = 0;
    for (std::size_t p = 0; p < rows.size(); ++p) {
        excess = std::max(excess, rows[p].tv - rows[p].bound);
        mism = std::max(mism, std::abs(rows[p].bound - rows[p].l0));
        r.rows.push_back({double(p), rows[p].tv, rows[p].bound, rows[p].l0});
    }
    r.summary = {{"max_tv_minus_bound", excess}, {"max_abs_bound_minus_L0", mism}};
    r.checks.push_back(le("max_tv_minus_bound", excess, 0.0));
    return r;
}

// 11 ---------------------------------------------------------------------

ExperimentResult skew_sign_prob(const ExperimentConfig& c) {
    Setup s(c, std::size_t{1} << 14);
    ExperimentResult r;
    r.columns = {"beta", "path", "X1", "oracle_X1"};
    json per_beta = json::array();
    const std::vector<double> betas{0.25, 0.4};
    for (std::size_t b = 0; b < betas.size(); ++b) {
        const double beta = betas[b];
        const SdeltSolver solver(skew_spec(beta));
        const double p = oracle::skew_positive_probability(beta);
        auto rows = s.map<std::pair<double, double>>(s.n, [&](std::size_t k) {
            std::seed_seq seq{c.seed, std::uint64_t(b), std::uint64_t(k)};
            std::mt19937_64 gen(seq);
            return std::pair{solver.terminal(s.grid, RngStream(c.seed, k)), oracle::skew_walk(p, s.grid.n_steps(), 1.0, gen).terminal};
        });
        std::size_t lib = 0, orc = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            lib += rows[k].first > 0;
            orc += rows[k].second > 0;
            r.rows.push_back({beta, double(k), rows[k].first, rows[k].second});
        }
        const auto a = proportion(lib, rows.size());
        const auto o = proportion(orc, rows.size());
        const double z = joint_z(a, o);
        per_beta.push_back({{"beta", beta}, {"p_solver", a.mean}, {"p_oracle", o.mean}, {"p_derived", p}, {"joint_z", z}});
        char name[64];
        std::snprintf(name, sizeof name, "joint_z_beta_%.2f", beta);
        r.checks.push_back(le(name, z, 3.0));
    }
    std::size_t mismatch = 0;
    const SdeltSolver bm0(skew_spec(0.0));
    for (std::size_t k = 0; k < 16; ++k) {
        const auto sol = bm0.solve(s.grid, RngStream(c.seed, k));
        for (std::size_t i = 0; i < sol.X.size(); ++i) mismatch += sol.X.values[i] != sol.driver.values[i];
    }
    SdeltSpec bad;
    bad.nu = RadonMeasure::dirac(0.0, 0.6);
    const auto v = validate_spec(bad);
    const bool rejected = std::any_of(v.begin(), v.end(), [](const SpecViolation& e) { return e.kind == "atom_condition"; });
    r.summary = {{"per_beta", per_beta}, {"beta0_node_mismatches", mismatch}, {"beta_0.6_violations", to_json(v)}};
    r.checks.push_back(le("beta0_node_mismatches", double(mismatch), 0.0));
    r.checks.push_back(ge("beta_0.6_rejected", rejected ? 1.0 : 0.0, 1.0));
    return r;
}

// 12 ---------------------------------------------------------------------

ExperimentResult sdelt_residual(const ExperimentConfig& c) {
    require_dt(c, 10, "the quartered-dt comparison");
    Setup s(c, 256);
    SdeltSpec spec = c.spec ? spec_from_json(*c.spec) : skew_spec(0.4);
    SdeltSpec wrong = spec;
    wrong.nu = spec.nu.scaled(0.5);
    const SdeltSolver solver(spec);
    struct Row {
        double fine = 0, coarse = 0, wfine = 0, wcoarse = 0;
    };
    auto rows = s.map<Row>(s.n, [&](std::size_t p) {
        const auto d = s.bm(p);
        const auto dc = coarsen(d, 4);
        const auto f = solver.solve(d);
        const auto g = solver.solve(dc);
        return Row{verify_sdelt(f.X, spec, d).terminal_abs, verify_sdelt(g.X, spec, dc).terminal_abs,
                   verify_sdelt(f.X, wrong, d).terminal_abs, verify_sdelt(g.X, wrong, dc).terminal_abs};
    });
    ExperimentResult r;
    r.columns = {"path", "residual", "residual_4dt", "wrong_residual", "wrong_residual_4dt"};
    std::vector<double> f, co, wf, wc;
    for (std::size_t p = 0; p < rows.size(); ++p) {
        f.push_back(rows[p].fine);
        co.push_back(rows[p].coarse);
        wf.push_back(rows[p].wfine);
        wc.push_back(rows[p].wcoarse);
        r.rows.push_back({double(p), rows[p].fine, rows[p].coarse, rows[p].wfine, rows[p].wcoarse});
    }
    const double mf = median(f), mc = median(co), mwf = median(wf), mwc = median(wc);
    r.summary = {{"median_residual", mf}, {"median_residual_4dt", mc}, {"wrong_median_residual", mwf},
                 {"wrong_median_residual_4dt", mwc}, {"spec", spec_to_json(spec)}};
    r.checks.push_back(le("median_terminal_residual", mf, 0.1));
    r.checks.push_back(le("median_ratio_fine_over_4dt", mc > 0 ? mf / mc : 0.0, 0.75));
    r.checks.push_back(gt("wrong_spec_median_ratio_fine_over_4dt", mwc > 0 ? mwf / mwc : 1.0, 0.75));
    return r;
}

// 13 ---------------------------------------------------------------------

ExperimentResult drift_absorption(const ExperimentConfig& c) {
    Setup s(c, std::size_t{1} << 12);
    SdeltSpec spec;
    spec.b = expr::constant(1.0);
    if (c.spec) spec = spec_from_json(*c.spec);
    const SdeltSolver absorbed(spec, true);
    const SdeltSolver direct(spec, false);
    auto rows = s.map<std::pair<double, double>>(s.n, [&](std::size_t p) {
        return std::pair{absorbed.terminal(s.grid, RngStream(c.seed, p)),
                         direct.terminal(s.grid, RngStream(c.seed, p + s.n))};
    });
    std::vector<double> a, d;
    ExperimentResult r;
    r.columns = {"path", "absorbed_X1", "euler_X1"};
    for (std::size_t p = 0; p < rows.size(); ++p) {
        a.push_back(rows[p].first);
        d.push_back(rows[p].second);
        r.rows.push_back({double(p), rows[p].first, rows[p].second});
    }
    const auto sa = summarize(a), sd = summarize(d);
    auto var_stats = [](const SampleStats& st) {
        SampleStats v;
        v.n = st.n;
        v.mean = st.sd * st.sd;
        v.se = v.mean * std::sqrt(2.0 / double(st.n - 1));
        return v;
    };
    const auto va = var_stats(sa), vd = var_stats(sd);
    r.summary = {{"absorbed_mean", sa.mean}, {"euler_mean", sd.mean}, {"absorbed_var", va.mean}, {"euler_var", vd.mean},
                 {"transform_mode", absorbed.transform().mode_name()}};
    r.checks.push_back(le("mean_joint_z", joint_z(sa, sd), 3.0));
    r.checks.push_back(le("variance_joint_z", joint_z(va, vd), 3.0));
    return r;
}

// 14 ---------------------------------------------------------------------

ExperimentResult symmetric_localtime(const ExperimentConfig& c) {
    Setup s(c, 256);
    const double eps = std::sqrt(s.grid.dt());
    // Skew paths have unit diffusion, so d<X> = dt.
    const std::vector<double> dqv(s.grid.n_steps(), s.grid.dt());
    ExperimentResult r;
    r.columns = {"beta", "path", "right_L0", "symmetric_L0", "occupation_two_sided"};
    json per_beta = json::array();
    for (double beta : {0.25, 0.4}) {
        const auto spec = skew_spec(beta);
        const SdeltSolver solver(spec);
        struct Row {
            double right = 0, sym = 0, occ = 0, mismatch = 0;
        };
        auto rows = s.map<Row>(s.n, [&](std::size_t p) {
            const auto X = solver.solve(s.grid, RngStream(c.seed, p)).X;
            const auto field = local_time_field(X, {0.0}, Side::right);
            const auto sym = symmetric_from_right(field, spec.h.f, spec.nu);
            const auto lc = field.column(0);
            const auto sc = sym.column(0);
            double mism = 0;
            for (std::size_t i = 0; i < lc.size(); ++i) mism += sc[i] != (1.0 - beta) * lc[i];
            return Row{field.terminal(0), sym.terminal(0), oracle::symmetric_occupation(X.values, dqv, 0.0, eps), mism};
        });
        double mism = 0;
        std::vector<double> diff;
        for (std::size_t p = 0; p < rows.size(); ++p) {
            mism += rows[p].mismatch;
            diff.push_back(std::abs(rows[p].sym - rows[p].occ));
            r.rows.push_back({beta, double(p), rows[p].right, rows[p].sym, rows[p].occ});
        }
        per_beta.push_back({{"beta", beta}, {"node_mismatches", mism}, {"mean_abs_diff_occupation", mean_of(diff)}});
        char name[64];
        std::snprintf(name, sizeof name, "node_mismatches_beta_%.2f", beta);
        r.checks.push_back(le(name, mism, 0.0));
        std::snprintf(name, sizeof name, "mean_abs_diff_occupation_beta_%.2f", beta);
        r.checks.push_back(le(name, mean_of(diff), 0.05));
    }
    r.summary = {{"per_beta", per_beta}, {"occupation_window", eps}};
    return r;
}

}  // namespace

const std::vector<ExperimentInfo>& registry() {
    static const std::vector<ExperimentInfo> reg{
        {"tanaka_mean", "mean of the Tanaka local time L^0_1 of Brownian motion vs sqrt(2/pi)",
         "Tanaka formula; reflection principle", 1, 4096, tanaka_mean},
        {"estimator_agreement", "Tanaka vs occupation local-time estimators, and their gap when dt is quartered",
         "right local time as an occupation limit", 2, 256, estimator_agreement},
        {"occupation_formula", "time-dependent occupation formula for G(s,a)=exp(-s)cos(a)",
         "time-dependent occupation time formula", 3, 256, occupation_formula_exp},
        {"lts_equivalence", "time-density, space-density and Vitali values of the integral for H=exp(-t)atan(a)",
         "equivalence of the three representations", 4, 256, lts_equivalence},
        {"cov_residual_abs_t", "change-of-variables residual for F(t,x)=exp(-t)|x|",
         "change-of-variables formula with the local time-space integral", 5, 256, cov_residual_abs_t},
        {"local_time_on_curves", "local-time-on-curves residual for F=|x-t/2|",
         "local time on curves", 6, 256, local_time_on_curves},
        {"ghomrasni_limit", "occupation difference quotients vs the local time-space integral",
         "Ghomrasni limit", 7, 256, ghomrasni},
        {"riemann_sums", "partition sums of shifted local time increments at dyadic depths 6..12",
         "Protter-San Martin Riemann sums", 8, 64, riemann_sums},
        {"localtime_convergence", "L^0_1 of B + t/n against L^0_1 of B",
         "convergence of local times", 9, 64, localtime_convergence},
        {"lts_bounded_variation", "discrete total variation of T -> integral of 1_{a>0} vs its bound",
         "bounded variation of the integral in T", 10, 256, lts_bounded_variation},
        {"skew_sign_prob", "P(X_1>0) of skew Brownian motion vs the excursion-sign walk",
         "skew Brownian motion", 11, std::size_t{1} << 14, skew_sign_prob},
        {"sdelt_residual", "SDELT residual of solved skew paths and a wrong-beta control",
         "SDELT and classical SDE equivalence", 12, 256, sdelt_residual},
        {"drift_absorption", "drift absorbed into the local-time term vs direct Euler",
         "replacing h by h + b/sigma^2", 13, std::size_t{1} << 12, drift_absorption},
        {"symmetric_localtime", "symmetric local time from the right one on skew paths",
         "symmetric vs right local time", 14, 256, symmetric_localtime},
    };
    return reg;
}

const ExperimentInfo& find_experiment(const std::string& name) {
    for (const auto& e : registry()) {
        if (e.name == name) return e;
    }
    throw ConfigError("unknown experiment: " + name);
}

ExperimentConfig config_from_json(const json& in) {
    const json& j = in.contains("config") && in.contains("schema_version") ? in.at("config") : in;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    try {
        if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
        if (j.contains("resolution")) {
            const auto& r = j.at("resolution");
            if (r.contains("dt_exponent")) c.dt_exponent = r.at("dt_exponent").get<int>();
            if (r.contains("level_spacing_exponent")) c.level_spacing_exponent = r.at("level_spacing_exponent").get<int>();
            if (r.contains("n_paths")) {
                const auto n = r.at("n_paths").get<long long>();
                if (n < 1) throw ConfigError("n_paths must be >= 1");
                c.n_paths = static_cast<std::size_t>(n);
            }
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("spec") && !j.at("spec").is_null()) c.spec = j.at("spec");
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    std::size_t n = c.n_paths;
    if (n == 0) {
        for (const auto& e : registry()) {
            if (e.name == c.experiment) n = e.default_paths;
        }
    }
    json j{{"experiment", c.experiment},
           {"resolution", {{"dt_exponent", c.dt_exponent}, {"level_spacing_exponent", c.level_spacing_exponent}, {"n_paths", n}}},
           {"seed", c.seed},
           {"output_dir", c.output_dir},
           {"workers", c.workers}};
    j["spec"] = c.spec ? *c.spec : json(nullptr);
    return j;
}

void validate_config(const ExperimentConfig& c) {
    (void)find_experiment(c.experiment);
    if (c.dt_exponent < 8 || c.dt_exponent > 24) throw ConfigError("dt_exponent must lie in [8, 24]");
    if (c.level_spacing_exponent < 1 || c.level_spacing_exponent > 16) throw ConfigError("level_spacing_exponent must lie in [1, 16]");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.spec) {
        try {
            const auto v = validate_spec(spec_from_json(*c.spec));
            if (!v.empty()) throw ConfigError("spec violates " + v.front().kind + ": " + v.front().message);
        } catch (const ContractError& e) {
            throw ConfigError(std::string("bad spec: ") + e.what());
        }
    }
}

json result_json(const ExperimentConfig& c, const ExperimentResult& r) {
    json checks = json::array();
    for (const auto& k : r.checks) {
        checks.push_back({{"name", k.name}, {"value", k.value}, {"relation", k.relation}, {"threshold", k.threshold}, {"pass", k.pass}});
    }
    const auto& info = find_experiment(c.experiment);
    return {{"experiment", c.experiment}, {"criterion", info.criterion}, {"pass", r.passed()},
            {"checks", checks},           {"summary", r.summary},        {"n_paths", c.n_paths ? c.n_paths : info.default_paths}};
}

json manifest_json(const ExperimentConfig& c) {
    return {{"schema_version", kSchemaVersion}, {"library_version", kVersion}, {"rng_algorithm", kRngAlgorithm},
            {"config", config_to_json(c)}};
}

void write_table_csv(std::ostream& os, const ExperimentResult& r) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << '\n';
    char buf[40];
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            os << (i ? "," : "") << buf;
        }
        os << '\n';
    }
}

void write_artifacts(const ExperimentConfig& c, const ExperimentResult& r) {
    namespace fs = std::filesystem;
    fs::create_directories(c.output_dir);
    std::ofstream(fs::path(c.output_dir) / "result.json") << result_json(c, r).dump(2) << '\n';
    std::ofstream table(fs::path(c.output_dir) / "table.csv");
    write_table_csv(table, r);
    std::ofstream(fs::path(c.output_dir) / "manifest.json") << manifest_json(c).dump(2) << '\n';
}

std::string describe_checks(const ExperimentResult& r) {
    std::ostringstream os;
    char buf[256];
    for (const auto& k : r.checks) {
        std::snprintf(buf, sizeof buf, "  %-44s %.6g %s %.6g  %s\n", k.name.c_str(), k.value, k.relation.c_str(),
                      k.threshold, k.pass ? "PASS" : "FAIL");
        os << buf;
    }
    return os.str();
}

}  // namespace ltsi::cli
