#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sdmem;

TEST(History, ConstantValue) {
    const auto h = InitialHistory::constant(3.0, 1.0);
    EXPECT_EQ(h(-0.7)[0], 3.0);
    EXPECT_EQ(h.derivative(-0.7)[0], 0.0);
}

TEST(History, PolynomialValue) {
    const InitialHistory h(InitialHistory::Polynomial{{{1.0}, {2.0}}}, 1.0);
    EXPECT_DOUBLE_EQ(h(-0.5)[0], 0.0);
    EXPECT_DOUBLE_EQ(h.derivative(-0.5)[0], 2.0);
}

TEST(History, SinusoidValue) {
    const InitialHistory h(InitialHistory::Sinusoid{{2.0}, {3.0}, {0.5}, {1.0}}, 2.0);
    EXPECT_NEAR(h(-0.4)[0], 1.0 + 2.0 * std::sin(-1.2 + 0.5), 1e-15);
}

TEST(History, ConstantLeftEndpointExtension) {
    const InitialHistory h(InitialHistory::Tabulated{{-1.0, -0.5, 0.0}, {{2.0}, {1.0}, {0.5}}}, 1.0);
    EXPECT_EQ(h(-10.0)[0], 2.0);
    EXPECT_EQ(h(-0.5)[0], 1.0);
}

TEST(History, AnalyticExtension) {
    const InitialHistory h(InitialHistory::Polynomial{{{1.0}, {2.0}}}, 1.0, ExtensionPolicy::analytic_if_available);
    EXPECT_DOUBLE_EQ(h(-3.0)[0], -5.0);
    const InitialHistory c(InitialHistory::Polynomial{{{1.0}, {2.0}}}, 1.0);
    EXPECT_DOUBLE_EQ(c(-3.0)[0], -1.0);
}

TEST(History, PositiveTimeIsDomainError) {
    const auto h = InitialHistory::constant(1.0, 1.0);
    EXPECT_THROW(h(0.1), DomainError);
}

TEST(History, RoutineDerivativeByFiniteDifference) {
    const InitialHistory h(
        InitialHistory::Routine{1, [](double t) { return State{std::exp(t)}; }, nullptr}, 1.0);
    EXPECT_NEAR(h.derivative(-0.5)[0], std::exp(-0.5), 1e-8);
}

TEST(History, ValidationFlagsJump) {
    const InitialHistory smooth(InitialHistory::Sinusoid{{1.0}, {4.0}, {0.0}, {0.0}}, 1.0);
    EXPECT_TRUE(validate_history(smooth).passed());
    const InitialHistory jump(InitialHistory::Routine{1, [](double t) { return State{t < -0.5 ? 0.0 : 1.0}; }, nullptr},
                              1.0);
    const auto rep = validate_history(jump);
    EXPECT_FALSE(rep.passed());
    EXPECT_NE(rep.first_failure().find("continuous"), std::string::npos);
}

TEST(Delay, AffineClampedStaysInBounds) {
    const auto d = DelaySpec::affine_clamped(0.5, 2.0, 0.2, 0.9);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(-1e3, 1e3), ut(0.0, 1e3);
    for (int i = 0; i < 10000; ++i) {
        const double tau = d(State{ux(rng)}, ut(rng));
        ASSERT_GE(tau, 0.2);
        ASSERT_LE(tau, 0.9);
    }
    EXPECT_EQ(d.lipschitz(), 2.0);
}

TEST(Delay, RoutineOutsideBoundsIsDomainError) {
    const auto d = DelaySpec::routine([](const State& x, double) { return x[0]; }, 0.5, 1.0, 1.0);
    EXPECT_DOUBLE_EQ(d(State{0.7}, 0.0), 0.7);
    EXPECT_THROW(d(State{2.0}, 0.0), DomainError);
}

TEST(Kernel, GammaNonnegativeAndUnimodal) {
    for (double beta : {0.5, 1.0, 4.0}) {
        const auto k = KernelSpec::gamma(2, beta);
        const double mode = 1.0 / beta;
        double prev = -1.0;
        for (int i = 0; i <= 400; ++i) {
            const double s = 20.0 / beta * i / 400.0;
            const double v = k.lag_value(s);
            ASSERT_GE(v, 0.0);
            if (s <= mode) ASSERT_GE(v, prev);
            if (s > mode + 1e-12) ASSERT_LE(v, prev);
            prev = v;
        }
        EXPECT_NEAR(k.lag_value(mode), beta * std::exp(-1.0), 1e-15);
    }
}

TEST(Kernel, TruncationHorizonMeetsTailTolerance) {
    for (int p : {1, 2, 3, 5})
        for (double tol : {1e-6, 1e-10}) {
            const double H = KernelSpec::gamma_truncation_horizon(p, 2.0, tol);
            EXPECT_NEAR(detail::gamma_tail(p, 2.0 * H), tol, 1e-6 * tol) << "p=" << p;
        }
}

TEST(Kernel, TabulatedReproducesSamples) {
    const auto k = KernelSpec::tabulated({0.0, 1.0, 0.5, 0.25, 0.0}, 2.0);
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(k.lag_value(0.5 * i), (std::vector<double>{0, 1, .5, .25, 0})[i]);
    EXPECT_EQ(k.lag_value(2.5), 0.0);
}

TEST(Validate, BenchmarkPasses) {
    const auto m = ModelSpec::logistic({1.0, 1.0, 0.5}, DelaySpec::constant(1.0), KernelSpec::gamma(2, 1.0));
    const auto rep = validate(m);
    EXPECT_TRUE(rep.passed()) << rep.first_failure();
    for (const auto& c : rep.checks) EXPECT_EQ(c.status, CheckStatus::pass) << c.name;
}

TEST(Validate, ZeroDelayFailsA1) {
    const auto m = ModelSpec::logistic({1.0, 1.0, 0.5}, DelaySpec::constant(0.0), KernelSpec::gamma(2, 1.0));
    const auto rep = validate(m);
    EXPECT_FALSE(rep.passed());
    EXPECT_NE(rep.first_failure().find("(A1)"), std::string::npos);
}

TEST(Validate, NegativeTabulatedSampleFailsA2) {
    const auto m = ModelSpec::logistic({1.0, 1.0, 0.5}, DelaySpec::constant(1.0),
                                       KernelSpec::tabulated({0.0, 1.0, -0.1, 0.0}, 1.0));
    const auto rep = validate(m);
    EXPECT_FALSE(rep.passed());
    EXPECT_NE(rep.first_failure().find("(A2)"), std::string::npos);
}

TEST(Validate, CallerRoutinesAreUnknown) {
    const auto m = oracle::pure_delay_model();
    const auto rep = validate(m);
    EXPECT_TRUE(rep.passed());
    bool unknown = false;
    for (const auto& c : rep.checks) unknown |= c.status == CheckStatus::unknown;
    EXPECT_TRUE(unknown);
}

TEST(Trajectory, ReproducesNodesAndRejectsOutside) {
    Trajectory tr(2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double t = -1.0;
    for (int i = 0; i < 200; ++i) {
        const double x[2] = {u(rng), u(rng)}, f[2] = {u(rng), u(rng)};
        tr.push_back(t, x, f);
        t += 0.01 + 0.05 * std::abs(u(rng));
    }
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const State v = tr(tr.times()[i]);
        for (int c = 0; c < 2; ++c)
            ASSERT_LE(std::abs(v[c] - tr.state(i)[c]), 1e-14 * std::max(1.0, std::abs(tr.state(i)[c])));
    }
    // continuity: both neighbouring intervals agree at an interior node
    State left(2), right(2);
    tr.eval_in(10, std::nextafter(tr.times()[11], -1e9), left);
    tr.eval_in(11, tr.times()[11], right);
    EXPECT_NEAR(left[0], right[0], 1e-12);
    EXPECT_THROW(tr(-1.5), DomainError);
    EXPECT_THROW(tr(tr.t_end() + 1e-9), DomainError);
}

TEST(Trajectory, HermiteIsExactForCubics) {
    Trajectory tr(1);
    auto p = [](double t) { return 1.0 - 2.0 * t + 0.5 * t * t * t; };
    auto dp = [](double t) { return -2.0 + 1.5 * t * t; };
    for (double t : {0.0, 0.3, 1.0}) {
        const double x[1] = {p(t)}, f[1] = {dp(t)};
        tr.push_back(t, x, f);
    }
    for (double t = 0.0; t <= 1.0; t += 0.0625) EXPECT_NEAR(tr(t)[0], p(t), 1e-14);
}

TEST(Model, LogisticEvaluation) {
    const auto m = ModelSpec::logistic({2.0, 4.0, 0.5}, DelaySpec::constant(1.0), KernelSpec::gamma(2, 1.0));
    EXPECT_DOUBLE_EQ(m.evaluate(0.0, {1.0}, {9.0}, {2.0})[0], 2.0 * 1.0 * 0.75 - 1.0);
}
