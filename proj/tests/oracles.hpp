#pragma once

// Independent reference computations used by the tests. Nothing here calls
// the analysis code it is checked against.

#include <sdmem/sdmem.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace oracle {

/// Right-hand side of the benchmark written as an explicit chain ODE in (x, y1, y2).
template <class T>
std::array<T, 3> chain_rhs(const std::array<T, 3>& z, double r, double K_c, double alpha, double beta) {
    return {r * z[0] * (1.0 - z[0] / K_c) - alpha * z[2], beta * (z[0] - z[1]), beta * (z[1] - z[2])};
}

/// Jacobian of chain_rhs at (x*, x*, x*) by complex-step differentiation.
inline std::array<std::array<double, 3>, 3> chain_jacobian(double r, double K_c, double alpha, double beta,
                                                           double x_star) {
    constexpr double step = 1e-30;
    std::array<std::array<double, 3>, 3> J{};
    for (int j = 0; j < 3; ++j) {
        std::array<std::complex<double>, 3> z{x_star, x_star, x_star};
        z[j] += std::complex<double>(0.0, step);
        const auto f = chain_rhs(z, r, K_c, alpha, beta);
        for (int i = 0; i < 3; ++i) J[i][j] = f[i].imag() / step;
    }
    return J;
}

/// Monic characteristic polynomial lambda^3 + A lambda^2 + B lambda + C of a 3x3 matrix.
inline std::array<double, 3> charpoly(const std::array<std::array<double, 3>, 3>& J) {
    const double tr = J[0][0] + J[1][1] + J[2][2];
    const double minors = J[0][0] * J[1][1] - J[0][1] * J[1][0] + J[0][0] * J[2][2] - J[0][2] * J[2][0] +
                          J[1][1] * J[2][2] - J[1][2] * J[2][1];
    const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                       J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                       J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    return {-tr, minors, -det};
}

/// Logistic solution x(t) = K / (1 + (K/x0 - 1) e^{-r t}).
inline double logistic(double r, double K_c, double x0, double t) {
    return K_c / (1.0 + (K_c / x0 - 1.0) * std::exp(-r * t));
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

/// Manufactured problem with exact solution x(t) = 2 + cos t, a clamped affine
/// state-dependent delay and a Gamma(2, 1) memory, for which
/// M[x](t) = 2 + sin(t) / 2 in closed form.
struct Manufactured {
    static double exact(double t) { return 2.0 + std::cos(t); }
    static double exact_derivative(double t) { return -std::sin(t); }
    static double exact_memory(double t) { return 2.0 + 0.5 * std::sin(t); }
    static double delay(double x) { return std::clamp(0.5 + 0.1 * x, 0.3, 1.0); }

    static sdmem::ModelSpec model() {
        sdmem::RhsFunction f = [](double t, const sdmem::State& x, const sdmem::State& xd, const sdmem::State& m) {
            const double xe = exact(t);
            const double xde = exact(t - delay(xe));
            return sdmem::State{exact_derivative(t) + (x[0] - xe) + (xd[0] - xde) + (m[0] - exact_memory(t))};
        };
        return sdmem::ModelSpec::custom(1, f, sdmem::DelaySpec::affine_clamped(0.5, 0.1, 0.3, 1.0),
                                        sdmem::KernelSpec::gamma(2, 1.0, std::nullopt, 1e-15));
    }

    static sdmem::InitialHistory history() {
        return sdmem::InitialHistory(sdmem::InitialHistory::Sinusoid{{1.0}, {1.0}, {std::numbers::pi / 2}, {2.0}}, 1.0,
                                     sdmem::ExtensionPolicy::analytic_if_available);
    }

    /// Max nodal error on [0, t_end] of a chain-mode run with step h.
    static double error(double h, double t_end) {
        sdmem::SolveConfig cfg;
        cfg.h = h;
        cfg.t_end = t_end;
        cfg.quadrature.history_panel = 0.01;
        const auto res = sdmem::integrate(model(), history(), cfg);
        double err = 0.0;
        const auto& tr = res.trajectory;
        for (std::size_t i = 0; i < tr.size(); ++i)
            if (tr.times()[i] >= 0.0) err = std::max(err, std::abs(tr.state(i)[0] - exact(tr.times()[i])));
        return err;
    }
};

/// Scalar pure-delay problem x' = -x(t - 1), phi = 1; x(t) = 1 - t on [0, 1].
inline sdmem::ModelSpec pure_delay_model() {
    sdmem::RhsFunction f = [](double, const sdmem::State&, const sdmem::State& xd, const sdmem::State&) {
        return sdmem::State{-xd[0]};
    };
    auto m = sdmem::ModelSpec::custom(1, f, sdmem::DelaySpec::constant(1.0), std::nullopt);
    m.lipschitz = sdmem::LipschitzData{1.0, 0.0, std::nullopt};
    return m;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("sdmem_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
