#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ltsi/localtime.hpp"
#include "ltsi/montecarlo.hpp"
#include "ltsi/oracle.hpp"

using namespace ltsi;

namespace {

SamplePath bm(std::uint64_t stream, int exp = 12, std::uint64_t seed = 1) {
    return brownian_path(TimeGrid::dyadic(exp), RngStream(seed, stream));
}

SamplePath scaled(const SamplePath& X, double c) {
    std::vector<double> v(X.values);
    for (double& x : v) x *= c;
    return SamplePath(X.grid, std::move(v));
}

}  // namespace

TEST(Signum, Conventions) {
    EXPECT_EQ(sgn0(Side::right), -1.0);
    EXPECT_EQ(sgn0(Side::left), 1.0);
    EXPECT_EQ(sgn0(Side::symmetric), 0.0);
    EXPECT_EQ(sgn(0.0, Side::right), -1.0);
    EXPECT_EQ(sgn(2.0, Side::right), 1.0);
    EXPECT_EQ(sgn(-2.0, Side::left), -1.0);
    EXPECT_EQ(side_from_name("symmetric"), Side::symmetric);
    EXPECT_THROW(side_from_name("upper"), ContractError);
}

TEST(Tanaka, UnvisitedLevelIsZero) {
    const auto g = TimeGrid::dyadic(8);
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + std::sin(10 * g.time(i)) * 0.5;
    const auto L = local_time_tanaka(SamplePath(g, v), 0.0);
    for (double x : L.values) EXPECT_EQ(x, 0.0);
}

TEST(Tanaka, ShiftEquivariance) {
    const auto X = bm(3);
    for (double a : {-0.3, 0.0, 0.25}) {
        EXPECT_EQ(local_time_tanaka(X, a).values, local_time_tanaka(shifted(X, a), 0.0).values);
    }
}

TEST(Tanaka, ScalingByPowerOfTwo) {
    const auto X = bm(4);
    const auto a = local_time_tanaka(X, 0.125);
    const auto b = local_time_tanaka(scaled(X, 2.0), 0.25);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], 2.0 * a[i]);
}

TEST(Tanaka, NondecreasingFromZero) {
    for (auto side : {Side::right, Side::left, Side::symmetric}) {
        const auto L = local_time_tanaka(bm(5), 0.1, side);
        EXPECT_EQ(L[0], 0.0);
        for (std::size_t i = 1; i < L.size(); ++i) ASSERT_GE(L[i], L[i - 1]);
    }
}

TEST(Tanaka, ChargesOnlyNearLevel) {
    const auto X = bm(6);
    double max_inc = 0;
    for (std::size_t i = 0; i + 1 < X.size(); ++i) max_inc = std::max(max_inc, std::abs(X[i + 1] - X[i]));
    const auto tr = tanaka_trace(X, 0.05);
    for (const auto& e : tr.events) EXPECT_LE(std::abs(X[e.step] - 0.05), max_inc);
}

TEST(Tanaka, MeanMatchesReflectionOracle) {
    std::vector<double> L(1024);
    for (std::size_t p = 0; p < L.size(); ++p) L[p] = local_time_tanaka(bm(p), 0.0).terminal();
    const auto s = summarize(L);
    EXPECT_LE(std::abs(s.mean - oracle::abs_normal_mean()), 3 * s.se + 0.02);
}

TEST(Tanaka, StepTermNonnegative) {
    for (auto side : {Side::right, Side::left, Side::symmetric}) {
        EXPECT_EQ(tanaka_trace(bm(16), 0.0, side).correction, 0.0);
    }
}

TEST(Occupation, EmptyWindowAndMonotone) {
    const auto X = bm(7);
    const auto far = local_time_occupation(X, 50.0, 0.1);
    for (double v : far.values) EXPECT_EQ(v, 0.0);
    const auto L = local_time_occupation(X, 0.0, 0.05, Side::symmetric);
    for (std::size_t i = 1; i < L.size(); ++i) EXPECT_GE(L[i], L[i - 1]);
    EXPECT_THROW(local_time_occupation(X, 0.0, 0.0), ContractError);
}

TEST(Occupation, AgreesWithTanakaOnAverage) {
    const auto g = TimeGrid::dyadic(14);
    std::vector<double> d(128);
    for (std::size_t p = 0; p < d.size(); ++p) {
        const auto X = brownian_path(g, RngStream(2, p));
        d[p] = local_time_tanaka(X, 0.0).terminal() - local_time_occupation(X, 0.0, default_bandwidth(g)).terminal();
    }
    const auto s = summarize(d);
    EXPECT_LE(std::abs(s.mean), 3 * s.se + 0.02);
}

TEST(Field, ColumnsMatchFixedLevelEstimator) {
    const auto X = bm(8);
    const auto levels = uniform_levels(-0.5, 0.5, 0.125);
    const auto f = local_time_field(X, levels);
    for (std::size_t j = 0; j < levels.size(); ++j) {
        EXPECT_EQ(f.column(j), local_time_tanaka(X, levels[j]).values) << "level " << levels[j];
        EXPECT_EQ(f.terminal(j), f.column(j).back());
        EXPECT_EQ(f.value(100, j), f.column(j)[100]);
    }
}

TEST(Field, CompactSupportAndSortedLevels) {
    const auto X = bm(9);
    const auto [mn, mx] = std::minmax_element(X.values.begin(), X.values.end());
    const auto f = local_time_field(X, {*mn - 1.0, *mx + 1.0});
    EXPECT_EQ(f.terminal(0), 0.0);
    EXPECT_EQ(f.terminal(1), 0.0);
    EXPECT_THROW(local_time_field(X, {0.5, 0.1}), ContractError);
}

TEST(Field, MatrixAgreesWithColumns) {
    const auto X = bm(10, 8);
    const auto f = local_time_field(X, uniform_levels(-0.25, 0.25, 0.0625));
    const auto m = f.matrix(4);
    const std::size_t na = f.n_levels();
    for (std::size_t k = 0; k * 4 < X.size(); ++k) {
        for (std::size_t j = 0; j < na; ++j) EXPECT_EQ(m[k * na + j], f.value(4 * k, j));
    }
}

TEST(Field, CsvLayout) {
    const auto X = bm(10, 4);
    const auto f = local_time_field(X, {-0.1, 0.0, 0.1});
    std::ostringstream os, side;
    write_field_csv(os, f);
    write_field_sidecar(side, f);
    const auto s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "t,-0.10000000000000001,0,0.10000000000000001");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 18);
    const auto j = nlohmann::json::parse(side.str());
    EXPECT_EQ(j["side"], "right");
    EXPECT_EQ(j["sgn0"], -1);
}

TEST(OccupationFormula, OnePercentOnBrownianPath) {
    const auto X = bm(11, 14);
    const auto c = occupation_formula([](double t, double a) { return std::exp(-t) * std::cos(a); }, X);
    EXPECT_LT(c.rel_err(), 0.01);
}

TEST(SymmetricFromRight, NoAtomsLeavesFieldUnchanged) {
    const auto X = bm(12);
    const auto f = local_time_field(X, {-0.1, 0.0, 0.1});
    const auto s = symmetric_from_right(f, [](double, double) { return 1.0; }, RadonMeasure::lebesgue());
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(s.column(j), f.column(j));
}

TEST(SymmetricFromRight, ConstantFactorNodewise) {
    const auto X = bm(13);
    const auto f = local_time_field(X, {0.0});
    const auto s = symmetric_from_right(f, [](double, double) { return 1.0; }, RadonMeasure::dirac(0.0, 0.3));
    const auto a = f.column(0), b = s.column(0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(b[i], 0.7 * a[i]);
    EXPECT_EQ(s.side(), Side::symmetric);
}

TEST(SymmetricFromRight, Contracts) {
    const auto X = bm(14);
    EXPECT_THROW(symmetric_from_right(local_time_field(X, {0.0}, Side::left), [](double, double) { return 1.0; },
                                      RadonMeasure::dirac(0.0, 0.3)),
                 ContractError);
    EXPECT_THROW(symmetric_from_right(local_time_field(X, {0.0}), [](double, double) { return 1.0; },
                                      RadonMeasure::dirac(0.0, 1.0)),
                 ContractError);
}

TEST(StepApproximation, ConstantField) {
    const auto g = TimeGrid::dyadic(6);
    const auto f = local_time_field(SamplePath(g, std::vector<double>(g.n_nodes(), 3.0)), {0.0, 1.0});
    const auto s = step_approximation(f, 0.1);
    EXPECT_EQ(s.cells(), 1u);
    EXPECT_EQ(s.sup_error, 0.0);
}

TEST(StepApproximation, BrownianFieldWithinTolerance) {
    const auto X = bm(15, 16);
    const auto [mn, mx] = std::minmax_element(X.values.begin(), X.values.end());
    const auto f = local_time_field(X, uniform_levels(*mn, *mx, 0x1p-6));
    const auto s = step_approximation(f, 0.1);
    EXPECT_LT(s.sup_error, 0.1);
    EXPECT_LE(s.cells(), std::size_t{1} << 16);
    EXPECT_THROW(step_approximation(f, 0.0), ContractError);
}
