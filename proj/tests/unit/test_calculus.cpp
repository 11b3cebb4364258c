#include <gtest/gtest.h>

#include <cmath>

#include "ltsi/calculus.hpp"
#include "ltsi/montecarlo.hpp"

using namespace ltsi;

namespace {

SamplePath bm(std::uint64_t stream, int exp = 12) { return brownian_path(TimeGrid::dyadic(exp), RngStream(31, stream)); }

CovFunction abs_x() {
    TimeSpaceFunction Fx([](double, double a) { return a > 0 ? 1.0 : -1.0; }, std::nullopt,
                         SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::dirac(0.0, 2.0)});
    return {[](double, double x) { return std::abs(x); }, std::move(Fx), {}};
}

std::vector<double> line(const TimeGrid& g, double c) {
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * g.time(i);
    return v;
}

}  // namespace

TEST(CovResidual, IdentityIsExact) {
    TimeSpaceFunction Fx([](double, double) { return 1.0; }, std::nullopt,
                         SpaceDensity{[](double, double) { return 0.0; }, RadonMeasure::lebesgue()});
    const CovFunction F{[](double, double x) { return x; }, std::move(Fx), {}};
    const auto r = cov_residual(F, bm(1), 1.0);
    EXPECT_LT(r.sup_abs, 1e-12);
    EXPECT_GE(r.sup_abs, r.terminal_abs);
}

TEST(CovResidual, AbsReproducesTanaka) {
    const auto r = cov_residual(abs_x(), bm(2, 16), 1.0);
    EXPECT_LE(r.terminal_abs, 0.05);
    EXPECT_LT(r.sup_abs, 1e-9);
}

TEST(CovResidual, TimeDependentAbsSmall) {
    TimeSpaceFunction Fx([](double t, double a) { return std::exp(-t) * (a > 0 ? 1.0 : -1.0); }, std::nullopt,
                         SpaceDensity{[](double t, double) { return std::exp(-t); }, RadonMeasure::dirac(0.0, 2.0)});
    const CovFunction F{[](double t, double x) { return std::exp(-t) * std::abs(x); }, std::move(Fx),
                        {TimeTerm{[](double t, double x) { return -std::exp(-t) * std::abs(x); }, RadonMeasure::lebesgue({0, kInf})}}};
    std::vector<double> r(32);
    for (std::size_t p = 0; p < r.size(); ++p) r[p] = cov_residual(F, bm(p, 14), 1.0).terminal_abs;
    EXPECT_LE(median(r), 0.05);
}

TEST(CovResidual, TimeDensityRouteForSmoothFx) {
    // F(t,x) = t·x²/2: F_x = t·x with time density x against Lebesgue.
    TimeSpaceFunction Fx([](double t, double a) { return t * a; },
                         TimeDensity{[](double, double a) { return a; }, RadonMeasure::lebesgue({0, kInf})});
    const CovFunction F{[](double t, double x) { return 0.5 * t * x * x; }, std::move(Fx),
                        {TimeTerm{[](double, double x) { return 0.5 * x * x; }, RadonMeasure::lebesgue({0, kInf})}}};
    EXPECT_LE(cov_residual(F, bm(3, 14), 1.0).terminal_abs, 0.05);
}

TEST(CovResidual, NoRepresentationThrows) {
    const CovFunction F{[](double, double x) { return x; }, TimeSpaceFunction([](double, double) { return 1.0; }), {}};
    EXPECT_THROW(cov_residual(F, bm(4), 1.0), RepresentationUnavailableError);
}

TEST(ResidualReport, Json) {
    const auto j = to_json(cov_residual(abs_x(), bm(5, 8), 1.0));
    EXPECT_TRUE(j.contains("sup_abs"));
    EXPECT_EQ(j["nodes"], 257);
}

TEST(ItoTanaka, LinearExact) {
    const auto r = ito_tanaka_check([](double x) { return 3 * x - 1; }, BVFunction::smooth([](double) { return 3.0; }, [](double) { return 0.0; }),
                                    bm(6), 1.0);
    EXPECT_LT(r.sup_abs, 1e-12);
}

TEST(ItoTanaka, AbsoluteValue) {
    const BVFunction d([](double x) { return x > 0 ? 1.0 : -1.0; }, {{0.0, -1.0, 1.0}}, [](double) { return 0.0; });
    EXPECT_LE(ito_tanaka_check([](double x) { return std::abs(x); }, d, bm(7, 16), 1.0).terminal_abs, 0.05);
}

TEST(ItoTanaka, SquareReducesToIto) {
    std::vector<double> r(256);
    for (std::size_t p = 0; p < r.size(); ++p) {
        r[p] = ito_tanaka_check([](double x) { return x * x; }, BVFunction::smooth([](double x) { return 2 * x; }, [](double) { return 2.0; }),
                                bm(p, 10), 1.0)
                   .residual.back();
    }
    const auto s = summarize(r);
    EXPECT_LE(std::abs(s.mean), 3 * s.se + 1e-3);
}

TEST(LocalTimeOnCurves, ZeroCurveIsTanaka) {
    CurveSplitFunction F;
    F.below = {[](double, double x) { return -x; }, [](double, double) { return 0.0; }, [](double, double) { return -1.0; },
               [](double, double) { return 0.0; }};
    F.above = {[](double, double x) { return x; }, [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
               [](double, double) { return 0.0; }};
    F.curve = [](double) { return 0.0; };
    EXPECT_LE(ltc_residual(F, bm(8, 16), 1.0).terminal_abs, 0.05);
}

TEST(LocalTimeOnCurves, SmoothAcrossCurveIsIto) {
    // F = x² on both sides: the jump term vanishes and the formula is Itô's.
    CurveSplitFunction F;
    SmoothPiece sq{[](double, double x) { return x * x; }, [](double, double) { return 0.0; },
                   [](double, double x) { return 2 * x; }, [](double, double) { return 2.0; }};
    F.below = F.above = sq;
    F.curve = [](double t) { return 0.3 * t; };
    const auto X = bm(9, 12);
    const auto a = ltc_residual(F, X, 1.0);
    double ito = 0.0;
    for (std::size_t i = 0; i < X.grid.n_steps(); ++i) ito += 2.0 * X[i] * (X[i + 1] - X[i]);
    const double want = X.terminal() * X.terminal() - ito - quadratic_variation(X).terminal();
    EXPECT_NEAR(a.residual.back(), want, 1e-10);
}

TEST(LocalTimeOnCurves, DisagreeingExtensionsRejected) {
    CurveSplitFunction F;
    F.below = {[](double, double x) { return x; }, [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
               [](double, double) { return 0.0; }};
    F.above = {[](double, double x) { return x + 1; }, [](double, double) { return 0.0; }, [](double, double) { return 1.0; },
               [](double, double) { return 0.0; }};
    F.curve = [](double) { return 0.0; };
    EXPECT_THROW(ltc_residual(F, bm(10), 1.0), ContractError);
}

TEST(Ghomrasni, IdentityGivesQuadraticVariation) {
    const TimeSpaceFunction H([](double, double a) { return a; }, std::nullopt,
                              SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::lebesgue()});
    const auto X = bm(11, 16);
    const auto r = ghomrasni_limit(H, X, 1.0, {0x1p-6, 0x1p-7, 0x1p-8});
    for (const auto& row : r.table.rows) EXPECT_NEAR(row.value, X.qv->back(), 1e-9);
    EXPECT_NEAR(r.table.rows.back().value, 1.0, 0.02);
}

TEST(Ghomrasni, ConstantGivesZero) {
    const TimeSpaceFunction H([](double, double) { return 5.0; }, std::nullopt,
                              SpaceDensity{[](double, double) { return 0.0; }, RadonMeasure::lebesgue()});
    for (const auto& row : ghomrasni_limit(H, bm(12, 16), 1.0, {0x1p-7, 0x1p-8}).table.rows) EXPECT_EQ(row.value, 0.0);
}

TEST(Ghomrasni, IndicatorMagnitude) {
    const TimeSpaceFunction H([](double, double a) { return a > 0 ? 1.0 : 0.0; }, std::nullopt,
                              SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::dirac(0.0)});
    const auto X = bm(13, 16);
    const auto r = ghomrasni_limit(H, X, 1.0, {0x1p-8});
    EXPECT_NEAR(r.lambda, -local_time_tanaka(X, 0.0).terminal(), 1e-12);
    EXPECT_EQ(r.table.rows.size(), 1u);
    EXPECT_TRUE(r.matched_sign == 1.0 || r.matched_sign == -1.0);
}

TEST(Ghomrasni, ResolutionAndOrderingContracts) {
    const TimeSpaceFunction H([](double, double a) { return a; }, std::nullopt,
                              SpaceDensity{[](double, double) { return 1.0; }, RadonMeasure::lebesgue()});
    EXPECT_THROW(ghomrasni_limit(H, bm(14, 8), 1.0, {0x1p-10}), ResolutionError);
    EXPECT_THROW(ghomrasni_limit(H, bm(14, 8), 1.0, {0.1, 0.2}), ContractError);
}

TEST(RiemannSums, ConstantLevelTelescopes) {
    const auto X = bm(15, 12);
    const SamplePath theta(X.grid, std::vector<double>(X.size(), 0.1));
    const std::vector<double> ones(X.size(), 1.0), zeros(X.size(), 0.0);
    const double L = local_time_tanaka(X, 0.1).terminal();
    for (const auto& row : riemann_sum_localtime(ones, theta, X, {2, 5, 8}).rows) EXPECT_NEAR(row.value, L, 1e-12);
    for (const auto& row : riemann_sum_localtime(zeros, theta, X, {2, 5, 8}).rows) EXPECT_EQ(row.value, 0.0);
}

TEST(RiemannSums, LinearShiftConverges) {
    const auto X = bm(16, 14);
    const SamplePath theta(X.grid, line(X.grid, 0.5));
    const std::vector<double> ones(X.size(), 1.0);
    const auto t = riemann_sum_localtime(ones, theta, X, {6, 8, 10, 12});
    EXPECT_NEAR(t.rows.front().reference, local_time_tanaka(shifted(X, theta.values), 0.0).terminal(), 1e-12);
    EXPECT_LE(t.rows.back().abs_err, 0.05);
    EXPECT_EQ(t.successive_diffs().size(), 3u);
}

TEST(RiemannSums, RoughThetaRejected) {
    const auto X = bm(17, 12);
    const auto W = bm(18, 12);
    const std::vector<double> ones(X.size(), 1.0);
    EXPECT_THROW(riemann_sum_localtime(ones, W, X, {4}), VariationUnboundedError);
}

TEST(ChangeOfLocalTime, IdentityExact) {
    const auto Y = bm(19);
    const auto r = change_of_local_time_check([](double, double y) { return y; }, [](double, double) { return 1.0; }, Y, 0.1);
    EXPECT_EQ(r.sup_abs, 0.0);
}

TEST(ChangeOfLocalTime, Doubling) {
    const auto r = change_of_local_time_check([](double, double y) { return 2 * y; }, [](double, double) { return 2.0; }, bm(20), 0.2);
    EXPECT_LE(r.terminal_abs, 0.05);
}

TEST(ChangeOfLocalTime, Drift) {
    const auto r = change_of_local_time_check([](double t, double y) { return y + 0.5 * t; }, [](double, double) { return 1.0; },
                                              bm(21, 14), 0.0);
    EXPECT_LE(r.terminal_abs, 0.05);
}

TEST(ChangeOfLocalTime, NonMonotoneRejected) {
    EXPECT_THROW(change_of_local_time_check([](double, double y) { return y * y; }, [](double, double y) { return 2 * y; }, bm(22), 0.0),
                 ContractError);
}
