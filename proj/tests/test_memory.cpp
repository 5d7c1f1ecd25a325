#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace sdmem;

namespace {

/// Mesh of x(t) = 2 + cos t with exact derivatives on [t0, t1].
Trajectory cosine_trajectory(double t0, double t1, double dt) {
    Trajectory tr(1);
    const int n = static_cast<int>(std::lround((t1 - t0) / dt));
    for (int i = 0; i <= n; ++i) {
        const double t = t0 + (t1 - t0) * i / n;
        const double x[1] = {2.0 + std::cos(t)}, f[1] = {-std::sin(t)};
        tr.push_back(t, x, f);
    }
    return tr;
}

InitialHistory cosine_history(double tau_max) {
    return InitialHistory(InitialHistory::Sinusoid{{1.0}, {1.0}, {std::numbers::pi / 2}, {2.0}}, tau_max,
                          ExtensionPolicy::analytic_if_available);
}

}  // namespace

TEST(KernelMass, FullGammaIsOne) {
    for (double beta : {0.5, 1.0, 5.0}) EXPECT_NEAR(kernel_mass(KernelSpec::gamma(2, beta)), 1.0, 1e-12);
    EXPECT_NEAR(kernel_mass(KernelSpec::gamma(2, 1.0).scaled(0.25)), 0.25, 1e-15);
}

TEST(KernelMass, TruncatedGamma) {
    // int_0^H beta^2 s e^{-beta s} ds = 1 - e^{-beta H} (1 + beta H)
    const double beta = 1.5, H = 2.0;
    EXPECT_NEAR(kernel_mass(KernelSpec::gamma(2, beta, H)), 1.0 - std::exp(-beta * H) * (1.0 + beta * H), 1e-14);
}

TEST(KernelMass, Tabulated) {
    // hat function on [0, 2] with peak 1 at s = 1: area 1; PCHIP keeps the linear pieces
    EXPECT_NEAR(kernel_mass(KernelSpec::tabulated({0.0, 0.5, 1.0, 0.5, 0.0}, 2.0)), 1.0, 1e-12);
}

TEST(KernelMass, NonautonomousUnsupported) {
    EXPECT_THROW(kernel_mass(KernelSpec::nonautonomous([](double, double) { return 1.0; }, 1.0)), UnsupportedError);
}

TEST(LipschitzBound, ConvolutionEqualsMass) {
    const auto k = KernelSpec::gamma(3, 2.0).scaled(0.7);
    const auto b = memory_lipschitz_bound(k, 0.0, 10.0);
    EXPECT_NEAR(b.value, 0.7, 1e-12);
    EXPECT_FALSE(b.sampled);
}

TEST(LipschitzBound, NonautonomousSampled) {
    // K(t, s) = 1 + sin^2 t on a window of length 1: sup = 2 at t = pi/2
    const auto k = KernelSpec::nonautonomous([](double t, double) { return 1.0 + std::sin(t) * std::sin(t); }, 1.0);
    const auto b = memory_lipschitz_bound(k, 0.0, std::numbers::pi, 3);
    EXPECT_TRUE(b.sampled);
    EXPECT_NEAR(b.value, 2.0, 1e-12);
}

TEST(MemoryQuadrature, GammaClosedForms) {
    const auto tr = cosine_trajectory(0.0, 6.0, 0.01);
    const auto phi = cosine_history(1.0);
    for (double t : {0.0, 0.5, 2.0, 6.0}) {
        const auto m2 = eval_memory_quadrature(tr, KernelSpec::gamma(2, 1.0, std::nullopt, 1e-14), t, &phi);
        EXPECT_NEAR(m2.value[0], 2.0 + 0.5 * std::sin(t), 1e-9) << t;
        const auto m1 = eval_memory_quadrature(tr, KernelSpec::gamma(1, 1.0, std::nullopt, 1e-14), t, &phi);
        EXPECT_NEAR(m1.value[0], 2.0 + 0.5 * (std::cos(t) + std::sin(t)), 1e-9) << t;
        EXPECT_LE(m2.error[0], 1e-6);
    }
}

TEST(MemoryQuadrature, ConstantHistory) {
    Trajectory tr(1);
    const double x[1] = {3.0}, f[1] = {0.0};
    tr.push_back(0.0, x, f);
    const auto phi = InitialHistory::constant(3.0, 1.0);
    const auto m = eval_memory_quadrature(tr, KernelSpec::gamma(2, 1.0), 0.0, &phi);
    // tail mass 1e-10 is dropped; Simpson adds O(1e-11)
    EXPECT_NEAR(m.value[0], 3.0 * (1.0 - 1e-10), 2e-10);
}

TEST(MemoryQuadrature, Linearity) {
    const auto k = KernelSpec::gamma(2, 2.0, 3.0);
    const auto a = cosine_trajectory(-3.0, 2.0, 0.1);
    Trajectory b(1), c(1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a.times()[i];
        const double xb[1] = {t * t}, fb[1] = {2.0 * t};
        b.push_back(t, xb, fb);
        const double xc[1] = {2.0 * a.state(i)[0] - 3.0 * t * t}, fc[1] = {2.0 * a.derivative(i)[0] - 6.0 * t};
        c.push_back(t, xc, fc);
    }
    const double ma = eval_memory_quadrature(a, k, 1.5).value[0];
    const double mb = eval_memory_quadrature(b, k, 1.5).value[0];
    const double mc = eval_memory_quadrature(c, k, 1.5).value[0];
    EXPECT_NEAR(mc, 2.0 * ma - 3.0 * mb, 1e-12);
}

TEST(MemoryQuadrature, WindowBelowMeshWithoutHistory) {
    const auto tr = cosine_trajectory(0.0, 1.0, 0.1);
    EXPECT_THROW(eval_memory_quadrature(tr, KernelSpec::gamma(2, 1.0, 2.0), 1.0), DomainError);
}

TEST(MemoryQuadrature, NodesPerStepMultipleOfFour) {
    const auto tr = cosine_trajectory(-2.0, 1.0, 0.1);
    QuadratureOptions q;
    q.nodes_per_step = 6;
    EXPECT_THROW(eval_memory_quadrature(tr, KernelSpec::gamma(2, 1.0, 2.0), 1.0, nullptr, q), std::invalid_argument);
}

TEST(Chain, ConstantStateIsInvariant) {
    const auto phi = InitialHistory::constant(0.3, 1.0);
    const auto chain = chain_reduce(KernelSpec::gamma(4, 2.0), phi);
    ASSERT_EQ(chain.size(), 4u);
    for (double y : chain.aux_state()) EXPECT_EQ(y, 0.3);
    std::vector<double> dy(4);
    const double x[1] = {0.3};
    chain.derivative(x, chain.aux_state(), dy);
    for (double d : dy) EXPECT_EQ(d, 0.0);
}

TEST(Chain, InitialisationMatchesClosedForm) {
    const auto phi = cosine_history(1.0);
    QuadratureOptions q;
    q.history_panel = 0.01;
    const auto chain = chain_reduce(KernelSpec::gamma(2, 1.0, std::nullopt, 1e-14), phi, q);
    // y_1(0) = Gamma(1,1) memory at t = 0, y_2(0) = Gamma(2,1) memory at t = 0
    EXPECT_NEAR(chain.aux_state()[0], 2.5, 1e-10);
    EXPECT_NEAR(chain.aux_state()[1], 2.0, 1e-10);
    std::vector<double> m(1);
    chain.output(chain.aux_state(), m);
    EXPECT_EQ(m[0], chain.aux_state()[1]);
}

TEST(Chain, RequiresFullSupportGamma) {
    const auto phi = InitialHistory::constant(1.0, 1.0);
    EXPECT_THROW(chain_reduce(KernelSpec::gamma(2, 1.0, 5.0), phi), UnsupportedError);
    EXPECT_THROW(chain_reduce(KernelSpec::tabulated({1.0, 1.0}, 1.0), phi), UnsupportedError);
}
