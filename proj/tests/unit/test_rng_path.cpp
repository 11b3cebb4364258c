#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ltsi/montecarlo.hpp"
#include "ltsi/path.hpp"

using namespace ltsi;

TEST(Philox, KnownAnswerVectors) {
    const PhiloxCounter zero = philox4x64({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(zero, (PhiloxCounter{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL, 0x7e68b68aec7ba23bULL}));
    const PhiloxCounter ones = philox4x64({~0ULL, ~0ULL, ~0ULL, ~0ULL}, {~0ULL, ~0ULL});
    EXPECT_EQ(ones, (PhiloxCounter{0x87b092c3013fe90bULL, 0x438c3c67be8d0224ULL, 0x9cc7d7c69cd777b6ULL, 0xa09caebf594f0ba0ULL}));
    const PhiloxCounter pi = philox4x64({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                                        {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
    EXPECT_EQ(pi, (PhiloxCounter{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL, 0x57bd43b5e52b7fe6ULL}));
}

TEST(RngStream, NormalsIndependentOfChunking) {
    const RngStream rng(7, 3);
    std::vector<double> all(37);
    rng.normals(all);
    std::vector<double> part(10);
    rng.normals(part, 13);
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], all[13 + i]);
}

TEST(RngStream, DomainsAndStreamsDiffer) {
    const RngStream a(1, 0), b(1, 1);
    std::vector<double> x(4), y(4), z(4);
    a.normals(x);
    b.normals(y);
    a.normals(z, 0, RngDomain::oracle);
    EXPECT_NE(x, y);
    EXPECT_NE(x, z);
}

TEST(RngStream, UniformsInUnitInterval) {
    std::vector<double> u(4096);
    RngStream(3, 9).uniforms(u);
    for (double v : u) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(summarize(u).mean, 0.5, 4 * std::sqrt(1.0 / 12 / 4096));
}

TEST(TimeGrid, NodesExact) {
    const auto g = TimeGrid::dyadic(10);
    EXPECT_EQ(g.n_steps(), 1024u);
    EXPECT_EQ(g.time(0), 0.0);
    EXPECT_EQ(g.time(1024), 1.0);
    EXPECT_EQ(g.time(512), 0.5);
    const TimeGrid h(0.1, 0.7, 3);
    EXPECT_NEAR(h.time(3), 0.7, 1e-16);
    EXPECT_THROW(TimeGrid(1.0, 1.0, 4), ContractError);
    EXPECT_THROW(TimeGrid(0.0, 1.0, 0), ContractError);
}

TEST(BrownianPath, Deterministic) {
    const auto g = TimeGrid::dyadic(8);
    const auto a = brownian_path(g, RngStream(5, 2));
    const auto b = brownian_path(g, RngStream(5, 2));
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.values[0], 0.0);
}

TEST(BrownianPath, QvIsRealizedSquares) {
    const auto B = brownian_path(TimeGrid::dyadic(8), RngStream(1, 0));
    ASSERT_TRUE(B.qv.has_value());
    const auto q = quadratic_variation(B).values;
    ASSERT_EQ(B.qv->size(), q.size());
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR((*B.qv)[i], q[i], 1e-13);
}

TEST(BrownianPath, SingleStepMeanWithinThreeSe) {
    const TimeGrid g(0.0, 2.0, 1);
    std::vector<double> x(100000);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = brownian_path(g, RngStream(11, k)).terminal();
    const auto s = summarize(x);
    EXPECT_LE(std::abs(s.mean), 3 * s.se);
    EXPECT_NEAR(s.sd * s.sd, 2.0, 0.05);
}

TEST(EulerSolve, TrivialCases) {
    const auto g = TimeGrid::dyadic(8);
    const auto B = brownian_path(g, RngStream(1, 1));
    auto zero = [](double, double) { return 0.0; };
    auto one = [](double, double) { return 1.0; };
    const auto c = euler_solve(zero, zero, 0.3, g, B);
    for (double v : c.values) EXPECT_EQ(v, 0.3);
    const auto d = euler_solve(one, zero, 0.0, g, B);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(d[i], g.time(i), 1e-14);
    const auto e = euler_solve(zero, one, 1.5, g, B);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e[i], 1.5 + B[i], 1e-13);
}

TEST(EulerSolve, DecompositionAndQv) {
    const auto g = TimeGrid::dyadic(9);
    const auto B = brownian_path(g, RngStream(2, 2));
    const auto X = euler_solve([](double t, double x) { return -x + t; }, [](double, double x) { return 1 + 0.1 * x * x; }, 0.5, g, B);
    ASSERT_TRUE(X.has_decomposition());
    for (std::size_t i = 0; i < X.size(); ++i) EXPECT_NEAR(X[i], 0.5 + (*X.martingale_part)[i] + (*X.bv_part)[i], 1e-12);
    for (std::size_t i = 1; i < X.size(); ++i) EXPECT_GE((*X.qv)[i], (*X.qv)[i - 1]);
}

TEST(EulerSolve, OdeWhenNoDiffusion) {
    const auto g = TimeGrid::dyadic(6);
    const auto B = brownian_path(g, RngStream(1, 0));
    const auto X = euler_solve([](double, double x) { return -2 * x; }, [](double, double) { return 0.0; }, 1.0, g, B);
    double x = 1.0;
    for (std::size_t i = 0; i < g.n_steps(); ++i) x += -2 * x * g.dt();
    EXPECT_EQ(X.terminal(), x);
}

TEST(EulerSolve, NonFiniteReportsStep) {
    const auto g = TimeGrid::dyadic(4);
    const auto B = brownian_path(g, RngStream(1, 0));
    try {
        (void)euler_solve([](double t, double) { return t > 0.5 ? INFINITY : 0.0; }, [](double, double) { return 1.0; }, 0, g, B);
        FAIL();
    } catch (const NumericDomainError& e) {
        ASSERT_TRUE(e.step().has_value());
        EXPECT_EQ(*e.step(), 9u);
    }
}

TEST(EulerSolve, QvMatchesSigmaSquaredSum) {
    const auto g = TimeGrid::dyadic(10);
    std::vector<double> diff(256);
    for (std::size_t p = 0; p < diff.size(); ++p) {
        const auto B = brownian_path(g, RngStream(3, p));
        const auto X = euler_solve([](double, double) { return 0.0; }, [](double, double x) { return 1.0 + 0.5 * std::sin(x); }, 0, g, B);
        diff[p] = quadratic_variation(X).terminal() - X.qv->back();
    }
    const auto s = summarize(diff);
    EXPECT_LE(std::abs(s.mean), 3 * s.se);
}

TEST(ItoIntegral, TrivialAndLinear) {
    const auto g = TimeGrid::dyadic(8);
    const auto B = brownian_path(g, RngStream(4, 4));
    std::vector<double> one(g.n_steps(), 1.0), zero(g.n_steps(), 0.0), phi(g.n_steps()), psi(g.n_steps()), sum(g.n_steps());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] = std::sin(B[i]);
        psi[i] = B[i] * B[i];
        sum[i] = phi[i] + psi[i];
    }
    const auto I1 = ito_integral(one, B);
    for (std::size_t i = 0; i < B.size(); ++i) EXPECT_DOUBLE_EQ(I1[i], B[i] - B[0]);
    for (double v : ito_integral(zero, B).values) EXPECT_EQ(v, 0.0);
    const auto a = ito_integral(phi, B), b = ito_integral(psi, B), c = ito_integral(sum, B);
    for (std::size_t i = 0; i < B.size(); ++i) EXPECT_NEAR(a[i] + b[i], c[i], 1e-12);
    EXPECT_THROW(ito_integral(std::vector<double>(3), B), ContractError);
}

TEST(ItoIntegral, DecompositionRespected) {
    const auto g = TimeGrid::dyadic(8);
    const auto B = brownian_path(g, RngStream(4, 5));
    const auto X = euler_solve([](double, double) { return 0.7; }, [](double, double) { return 2.0; }, 0, g, B);
    std::vector<double> phi(g.n_steps());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::cos(X[i]);
    const auto I = ito_integral(phi, X);
    for (std::size_t i = 0; i < I.size(); ++i) EXPECT_NEAR(I[i], (*I.martingale_part)[i] + (*I.bv_part)[i], 1e-12);
}

TEST(ItoIntegral, ItoFormulaOracle) {
    const auto g = TimeGrid::dyadic(12);
    std::vector<double> err(256);
    for (std::size_t p = 0; p < err.size(); ++p) {
        const auto B = brownian_path(g, RngStream(9, p));
        const auto I = ito_integral(std::span<const double>(B.values).first(g.n_steps()), B);
        err[p] = I.terminal() - 0.5 * (B.terminal() * B.terminal() - 1.0);
    }
    const auto s = summarize(err);
    EXPECT_LE(std::abs(s.mean), 3 * s.se + std::sqrt(g.dt()));
}

TEST(QuadraticVariation, Properties) {
    const auto g = TimeGrid::dyadic(16);
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(3 * g.time(i));
    EXPECT_LE(quadratic_variation(SamplePath(g, v)).terminal(), 10 * 9 * g.dt());

    const auto B = brownian_path(TimeGrid::dyadic(8), RngStream(1, 3));
    std::vector<double> twice(B.values);
    for (double& x : twice) x *= 2;
    const auto q1 = quadratic_variation(B), q2 = quadratic_variation(SamplePath(B.grid, twice));
    for (std::size_t i = 0; i < q1.size(); ++i) EXPECT_EQ(q2[i], 4 * q1[i]);
}

TEST(QuadraticVariation, BrownianTerminalNearT) {
    const auto g = TimeGrid::dyadic(10);
    std::vector<double> q(256);
    for (std::size_t p = 0; p < q.size(); ++p) q[p] = quadratic_variation(brownian_path(g, RngStream(2, p))).terminal();
    const auto s = summarize(q);
    EXPECT_LE(std::abs(s.mean - 1.0), 3 * s.se);
}

TEST(Coarsen, SubsamplesNodes) {
    const auto B = brownian_path(TimeGrid::dyadic(10), RngStream(1, 1));
    const auto C = coarsen(B, 4);
    EXPECT_EQ(C.grid.n_steps(), 256u);
    for (std::size_t i = 0; i < C.size(); ++i) EXPECT_EQ(C[i], B[4 * i]);
    EXPECT_EQ(*C.qv, quadratic_variation(C).values);
}

TEST(PathCsv, HeaderAndRows) {
    const auto g = TimeGrid::dyadic(2);
    const auto X = euler_solve([](double, double) { return 0.0; }, [](double, double) { return 1.0; }, 0, g,
                               brownian_path(g, RngStream(1, 0)));
    std::ostringstream os;
    write_path_csv(os, X);
    const auto s = os.str();
    EXPECT_EQ(s.substr(0, s.find('\n')), "t,value,m_part,bv_part,qv");
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 6);
}

TEST(ParallelMap, WorkerCountInvariant) {
    auto f = std::function<double(std::size_t)>([](std::size_t k) {
        return brownian_path(TimeGrid::dyadic(8), RngStream(1, k)).terminal();
    });
    EXPECT_EQ(parallel_map<double>(37, 1, f), parallel_map<double>(37, 4, f));
}
