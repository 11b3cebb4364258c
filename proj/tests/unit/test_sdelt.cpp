#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ltsi/sdelt.hpp"

using namespace ltsi;

namespace {

bool has_kind(const std::vector<SpecViolation>& v, const std::string& k) {
    return std::any_of(v.begin(), v.end(), [&](const SpecViolation& e) { return e.kind == k; });
}

/// h = e^{−t}, ν = Lebesgue on [0, 1].
SdeltSpec decaying_spec() {
    SdeltSpec s;
    s.h = expr::exp_t(1.0, -1.0);
    s.nu = RadonMeasure::lebesgue({0.0, 1.0});
    return s;
}

}  // namespace

TEST(ValidateSpec, AdmissibleAtom) {
    SdeltSpec s;
    s.nu = RadonMeasure::dirac(0.0, 0.4);
    EXPECT_TRUE(validate_spec(s).empty());
}

TEST(ValidateSpec, AtomConditionViolated) {
    SdeltSpec s;
    s.nu = RadonMeasure::dirac(0.0, 0.6);
    const auto v = validate_spec(s);
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(has_kind(v, "atom_condition"));
    EXPECT_EQ(v.front().x, 0.0);
}

TEST(ValidateSpec, DegenerateSigma) {
    SdeltSpec s;
    s.sigma = expr::poly_x({0.0, 1.0});
    EXPECT_TRUE(has_kind(validate_spec(s), "sigma_lower_bound"));
}

TEST(ValidateSpec, InfiniteDensityMass) {
    SdeltSpec s;
    s.nu = RadonMeasure::lebesgue();
    EXPECT_TRUE(has_kind(validate_spec(s), "nu_not_finite"));
}

TEST(ValidateSpec, SolverRejectsInadmissible) {
    SdeltSpec s;
    s.nu = RadonMeasure::dirac(0.0, 0.6);
    EXPECT_THROW(SdeltSolver{s}, ContractError);
}

TEST(Transform, IdentityWhenNuZero) {
    const auto p = build_transform(expr::constant(1.0), RadonMeasure::zero());
    EXPECT_TRUE(p.is_identity());
    for (double x : {-2.0, 0.0, 0.7}) {
        EXPECT_EQ(p.F(0.3, x), x);
        EXPECT_EQ(p.G(0.3, x), x);
        EXPECT_EQ(p.F_x(0.3, x), 1.0);
    }
}

TEST(Transform, SkewSlopes) {
    for (double beta : {-0.3, 0.25, 0.4}) {
        const auto p = build_transform(skew_spec(beta));
        EXPECT_FALSE(p.time_dependent());
        EXPECT_NEAR(p.F(0.0, -1.5), -1.5, 1e-12);
        EXPECT_NEAR(p.F(0.0, 2.0), 2.0 * (1.0 - 2.0 * beta), 1e-12);
        EXPECT_NEAR(p.F_x(0.0, -0.1), 1.0, 1e-12);
        EXPECT_NEAR(p.F_x(0.0, 0.1), 1.0 - 2.0 * beta, 1e-12);
        EXPECT_NEAR(p.G(0.0, p.F(0.0, 0.8)), 0.8, 1e-12);
    }
}

TEST(Transform, TimeDependentDerivative) {
    const auto p = build_transform(decaying_spec());
    EXPECT_TRUE(p.time_dependent());
    for (double t : {0.0, 0.4, 1.0}) {
        for (double x : {-0.5, 0.0, 0.3, 0.9, 1.7}) {
            const double want = std::exp(-2.0 * std::exp(-t) * std::clamp(x, 0.0, 1.0));
            EXPECT_NEAR(p.F_x(t, x), want, 1e-8) << t << " " << x;
        }
    }
}

TEST(Transform, TimeDependentClosedForm) {
    const auto p = build_transform(decaying_spec());
    const double t = 0.5, c = 2.0 * std::exp(-t);
    const double x = 0.6;
    EXPECT_NEAR(p.F(t, x), (1.0 - std::exp(-c * x)) / c, 1e-8);
    const double x2 = 1.5;
    EXPECT_NEAR(p.F(t, x2), (1.0 - std::exp(-c)) / c + std::exp(-c) * 0.5, 1e-8);
}

TEST(Transform, RoundTripOnLattice) {
    const auto p = build_transform(decaying_spec());
    for (int i = 0; i < 33; ++i) {
        const double t = i / 32.0;
        EXPECT_EQ(p.F(t, 0.0), 0.0);
        for (int k = 0; k < 33; ++k) {
            const double x = -2.0 + 4.0 * k / 32.0;
            EXPECT_NEAR(p.G(t, p.F(t, x)), x, 1e-9) << t << " " << x;
        }
    }
}

TEST(Transform, MonotoneIncreasing) {
    const auto p = build_transform(skew_spec(0.4));
    double prev = p.F(0.0, -3.0);
    for (int k = 1; k <= 60; ++k) {
        const double v = p.F(0.0, -3.0 + 0.1 * k);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(TransformedCoeffs, DriftMatchesFiniteDifference) {
    const auto s = decaying_spec();
    const auto p = build_transform(s);
    const auto c = transformed_coeffs(s, p);
    const double t = 0.4, h = 1e-5;
    for (double x : {0.2, 0.5, 0.8}) {
        const double y = p.F(t, x);
        const double fd = (p.F(t + h, x) - p.F(t - h, x)) / (2.0 * h);
        EXPECT_NEAR(c.drift(t, y), fd, 1e-6);
        EXPECT_NEAR(c.diff(t, y), p.F_x(t, x), 1e-9);
    }
}

TEST(TransformedCoeffs, SkewDiffusion) {
    const auto s = skew_spec(0.25);
    const auto c = transformed_coeffs(s, build_transform(s));
    EXPECT_NEAR(c.diff(0.0, -0.3), 1.0, 1e-12);
    EXPECT_NEAR(c.diff(0.0, 0.3), 0.5, 1e-12);
    EXPECT_EQ(c.drift(0.0, 0.3), 0.0);
}

TEST(Solve, ZeroMeasureIsShiftedDriver) {
    SdeltSpec s;
    s.x0 = 0.75;
    const auto sol = SdeltSolver(s).solve(TimeGrid::dyadic(10), RngStream(4, 1));
    for (std::size_t i = 0; i < sol.X.values.size(); ++i) {
        EXPECT_NEAR(sol.X.values[i], sol.driver.values[i] + 0.75, 1e-13);
    }
}

TEST(Solve, Deterministic) {
    const auto g = TimeGrid::dyadic(10);
    const auto a = skew_bm(0.25, g, RngStream(9, 3));
    const auto b = skew_bm(0.25, g, RngStream(9, 3));
    EXPECT_EQ(a.values, b.values);
}

TEST(Solve, TerminalMatchesFullSolve) {
    const auto g = TimeGrid::dyadic(11);
    for (const auto& s : {skew_spec(0.4, 0.1), decaying_spec()}) {
        const SdeltSolver solver(s);
        for (std::uint64_t k = 0; k < 4; ++k) {
            const RngStream rng(12, k);
            EXPECT_EQ(solver.terminal(g, rng), solver.solve(g, rng).X.terminal());
        }
    }
}

TEST(Solve, TerminalMatchesEulerBranch) {
    SdeltSpec s;
    s.b = expr::poly_x({0.0, -1.0});
    s.x0 = 0.5;
    const SdeltSolver solver(s);
    const auto g = TimeGrid::dyadic(10);
    const RngStream rng(2, 2);
    EXPECT_EQ(solver.terminal(g, rng), solver.solve(g, rng).X.terminal());
}

TEST(Solve, NegativeSideUntouchedBySkew) {
    const auto g = TimeGrid::dyadic(10);
    const auto sol = SdeltSolver(skew_spec(0.3, -50.0)).solve(g, RngStream(1, 1));
    for (std::size_t i = 0; i < sol.X.values.size(); ++i) {
        EXPECT_NEAR(sol.X.values[i], sol.driver.values[i] - 50.0, 1e-9);
    }
}

TEST(AbsorbDrift, NoDriftUnchanged) {
    const auto s = skew_spec(0.25);
    const auto out = absorb_drift(s);
    EXPECT_TRUE(out.b.zero);
    EXPECT_EQ(out.nu.atoms().size(), 1U);
    EXPECT_FALSE(out.nu.has_density());
}

TEST(AbsorbDrift, AtomPreservedAndDriftMoved) {
    auto s = skew_spec(0.25);
    s.b = expr::constant(0.5);
    const auto out = absorb_drift(s);
    EXPECT_TRUE(out.b.zero);
    ASSERT_EQ(out.nu.atoms().size(), 1U);
    EXPECT_EQ(out.nu.atom(0.0), 0.25);
    EXPECT_EQ(out.h(0.0, 0.0), 1.0);
    EXPECT_NEAR(out.h(0.0, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(out.nu.density(3.0), 1.0, 1e-15);
}

TEST(AbsorbDrift, ForcedTransformAgreesWithEuler) {
    SdeltSpec s;
    s.b = expr::constant(0.5);
    const auto g = TimeGrid::dyadic(12);
    const RngStream rng(3, 0);
    const auto direct = SdeltSolver(s).solve(g, rng).X;
    const auto forced = SdeltSolver(s, true).solve(g, rng).X;
    EXPECT_NEAR(direct.terminal(), forced.terminal(), 0.02);
}

TEST(VerifySdelt, ZeroMeasureExact) {
    SdeltSpec s;
    s.b = expr::poly_x({0.0, -1.0});
    s.sigma = expr::constant(0.5);
    const auto sol = SdeltSolver(s).solve(TimeGrid::dyadic(10), RngStream(8, 8));
    const auto r = verify_sdelt(sol.X, s, sol.driver);
    EXPECT_LT(r.sup_abs, 1e-12);
}

TEST(VerifySdelt, GridMismatch) {
    SdeltSpec s;
    const auto a = brownian_path(TimeGrid::dyadic(8), RngStream(1, 1));
    const auto b = brownian_path(TimeGrid::dyadic(9), RngStream(1, 1));
    EXPECT_THROW(verify_sdelt(a, s, b), ContractError);
}

TEST(VerifySdelt, ContinuousMeasureSmallResidual) {
    const auto s = decaying_spec();
    const auto sol = SdeltSolver(s).solve(TimeGrid::dyadic(14), RngStream(6, 0));
    const auto r = verify_sdelt(sol.X, s, sol.driver);
    EXPECT_LT(r.terminal_abs, 0.05);
}

TEST(SpecJson, RoundTrip) {
    const nlohmann::json j = {{"b", {{"kind", "poly_x"}, {"coeffs", {0.0, -0.5}}}},
                              {"sigma", 1.0},
                              {"h", {{"kind", "exp_t"}, {"scale", 1.0}, {"rate", -1.0}}},
                              {"nu", {{"atoms", {{0.0, 0.3}}}, {"density", 1.0}, {"support", {0.0, 1.0}}}},
                              {"x0", 0.2}};
    const auto s = spec_from_json(j);
    EXPECT_EQ(s.nu.atom(0.0), 0.3);
    EXPECT_DOUBLE_EQ(s.h(1.0, 0.0), std::exp(-1.0));
    const auto again = spec_from_json(spec_to_json(s));
    EXPECT_EQ(spec_to_json(again), spec_to_json(s));
    EXPECT_EQ(again.x0, 0.2);
    EXPECT_DOUBLE_EQ(again.b(0.0, 2.0), -1.0);
}

TEST(SpecJson, MalformedAtom) {
    EXPECT_THROW(spec_from_json({{"nu", {{"atoms", {{0.0}}}}}}), ContractError);
    EXPECT_THROW(spec_from_json(nlohmann::json::array()), ContractError);
}

TEST(SkewSpec, Contract) {
    EXPECT_THROW(skew_spec(0.5), ContractError);
    EXPECT_THROW(skew_spec(-0.7), ContractError);
    EXPECT_TRUE(skew_spec(0.0).nu.is_zero());
}
