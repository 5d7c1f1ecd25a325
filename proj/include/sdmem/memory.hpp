#pragma once

// Distributed memory M[x](t) = int K(t,s) x(s) ds: kernel mass, Lipschitz
// bound, composite Simpson quadrature over a trajectory, and the exact
// linear-chain reduction of Gamma kernels.

#include <sdmem/core.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace sdmem {

struct QuadratureOptions {
    /// Simpson subintervals per mesh panel; must be a positive multiple of 4
    /// so the Richardson companion (every other node) is also Simpson.
    int nodes_per_step = 8;
    /// Panel width used where the integrand comes from the initial history.
    double history_panel = 0.05;
};

/// Memory value with a Richardson error estimate |S_m - S_{m/2}| / 15 per component.
struct MemoryValue {
    State value;
    State error;
};

namespace detail {

/// Composite Simpson on [0, span] for uniform samples; 3/8 rule closes an
/// odd interval count, trapezoid when only two samples exist.
inline double simpson_uniform(std::span<const double> y, double span) {
    const std::size_t n = y.size() - 1;
    const double h = span / static_cast<double>(n);
    if (n == 1) return 0.5 * h * (y[0] + y[1]);
    auto simpson = [&](std::size_t a, std::size_t b) {
        double s = y[a] + y[b];
        for (std::size_t i = a + 1; i < b; ++i) s += ((i - a) % 2 ? 4.0 : 2.0) * y[i];
        return s * h / 3.0;
    };
    if (n % 2 == 0) return simpson(0, n);
    const std::size_t m = n - 3;
    const double tail = 3.0 * h / 8.0 * (y[m] + 3.0 * y[m + 1] + 3.0 * y[m + 2] + y[m + 3]);
    return (m > 0 ? simpson(0, m) : 0.0) + tail;
}

/// A quadrature panel [a, b]; source < 0 reads the history, otherwise the
/// trajectory interval with that index.
struct Panel {
    double a, b;
    std::ptrdiff_t source;
};

inline void check_nodes_per_step(int m) {
    if (m < 4 || m % 4 != 0) throw std::invalid_argument("nodes_per_step must be a positive multiple of 4");
}

/// Simpson over each panel with m subintervals; path(panel, u, out) writes x(u).
template <class Path>
MemoryValue convolve_panels(const KernelSpec& k, double t, std::span<const Panel> panels, std::size_t n, int m,
                            Path&& path) {
    check_nodes_per_step(m);
    State fine(n, 0.0), coarse(n, 0.0), x(n);
    for (const Panel& p : panels) {
        if (!(p.b > p.a)) continue;
        const double sub = (p.b - p.a) / m;
        for (int j = 0; j <= m; ++j) {
            const double u = j == m ? p.b : p.a + sub * j;
            const double kv = k(t, u);
            if (kv == 0.0) continue;
            path(p, u, std::span<double>(x));
            const double wf = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            double wc = 0.0;
            if (j % 2 == 0) wc = (j == 0 || j == m) ? 1.0 : ((j / 2) % 2 ? 4.0 : 2.0);
            for (std::size_t c = 0; c < n; ++c) {
                fine[c] += wf * sub / 3.0 * kv * x[c];
                coarse[c] += wc * 2.0 * sub / 3.0 * kv * x[c];
            }
        }
    }
    MemoryValue out{fine, State(n)};
    for (std::size_t c = 0; c < n; ++c) out.error[c] = std::abs(fine[c] - coarse[c]) / 15.0;
    return out;
}

/// Uniform panels of width about `width` covering [a, b], split at `cut` when inside.
inline void append_history_panels(std::vector<Panel>& panels, double a, double b, double width, double cut) {
    auto fill = [&](double lo, double hi) {
        if (!(hi > lo)) return;
        const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
        const double w = (hi - lo) / static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i)
            panels.push_back({lo + w * static_cast<double>(i), i + 1 == count ? hi : lo + w * static_cast<double>(i + 1), -1});
    };
    if (cut > a && cut < b) {
        fill(a, cut);
        fill(cut, b);
    } else {
        fill(a, b);
    }
}

/// Trajectory mesh intervals clipped to [a, b].
inline void append_mesh_panels(std::vector<Panel>& panels, const Trajectory& traj, double a, double b) {
    if (!(b > a)) return;
    const auto ts = traj.times();
    std::size_t i = traj.interval_of(a);
    for (; i + 1 < ts.size() && ts[i] < b; ++i) {
        const double lo = std::max(ts[i], a), hi = std::min(ts[i + 1], b);
        if (hi > lo) panels.push_back({lo, hi, static_cast<std::ptrdiff_t>(i)});
    }
}

}  // namespace detail

/// kappa = int K(s) ds over the kernel's support.
inline double kernel_mass(const KernelSpec& k) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KernelSpec::Gamma>) {
                if (!k.horizon()) return k.weight();
                return k.weight() * (1.0 - detail::gamma_tail(v.order, v.rate * *k.horizon()));
            } else if constexpr (std::is_same_v<T, KernelSpec::Tabulated>) {
                return k.weight() * detail::simpson_uniform(v.samples, v.span);
            } else {
                throw UnsupportedError("kernel mass of a nonautonomous kernel is time-dependent");
            }
        },
        k.variant());
}

struct LipschitzBound {
    double value;
    /// True when the value is a sampled lower bound (nonautonomous kernels).
    bool sampled = false;
    double grid_spacing = 0.0;
};

/// C_K = sup_t int |K(t,s)| ds. Exact for convolution kernels; sampled on a
/// time grid of `grid_points` over [t0, t1] otherwise.
inline LipschitzBound memory_lipschitz_bound(const KernelSpec& k, double t0, double t1, int grid_points = 101) {
    if (auto* tab = std::get_if<KernelSpec::Tabulated>(&k.variant())) {
        std::vector<double> a(tab->samples.size());
        std::transform(tab->samples.begin(), tab->samples.end(), a.begin(), [](double s) { return std::abs(s); });
        return {std::abs(k.weight()) * detail::simpson_uniform(a, tab->span)};
    }
    if (k.is_convolution()) return {std::abs(kernel_mass(k))};

    const double w = k.support();
    grid_points = std::max(grid_points, 2);
    const double dt = (t1 - t0) / (grid_points - 1);
    double sup = 0.0;
    std::vector<double> y(257);
    for (int g = 0; g < grid_points; ++g) {
        const double t = t0 + dt * g;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double s = t - w + w * static_cast<double>(i) / static_cast<double>(y.size() - 1);
            y[i] = std::abs(k(t, s));
        }
        sup = std::max(sup, detail::simpson_uniform(y, w));
    }
    return {sup, true, dt};
}

/// M[x](t) by composite Simpson over panels aligned with the trajectory mesh.
///
/// With `history` given, arguments u <= 0 read phi directly (including the
/// extension policy below -tau_max) on uniform panels split at -tau_max;
/// without it the whole window must lie inside the trajectory mesh.
inline MemoryValue eval_memory_quadrature(const Trajectory& traj, const KernelSpec& k, double t,
                                          const InitialHistory* history = nullptr,
                                          const QuadratureOptions& opts = {}) {
    if (traj.empty() || t > traj.t_end() || t < traj.t_start())
        throw DomainError("memory evaluation time outside the trajectory");
    const double lo = t - k.support();
    std::vector<detail::Panel> panels;
    if (history) {
        const double split = std::min(t, 0.0);
        detail::append_history_panels(panels, lo, split, opts.history_panel, history->domain_start());
        detail::append_mesh_panels(panels, traj, std::max(lo, 0.0), t);
    } else {
        if (lo < traj.t_start()) throw DomainError("memory window extends below the trajectory and no history was given");
        detail::append_mesh_panels(panels, traj, lo, t);
    }
    return detail::convolve_panels(k, t, panels, traj.dimension(), opts.nodes_per_step,
                                   [&](const detail::Panel& p, double u, std::span<double> out) {
                                       if (p.source < 0) {
                                           const State v = (*history)(std::min(u, 0.0));
                                           std::copy(v.begin(), v.end(), out.begin());
                                       } else {
                                           traj.eval_in(static_cast<std::size_t>(p.source), u, out);
                                       }
                                   });
}

/// Linear chain equivalent of a Gamma(p, beta) memory kernel:
///   y_1' = beta (x - y_1),  y_j' = beta (y_{j-1} - y_j),  M = weight * y_p.
/// Each y_j is a state vector of the model's dimension. Instances hold
/// per-integration state and are not meant to be shared.
class ChainSystem {
public:
    ChainSystem(double rate, int order, std::size_t dimension, double weight = 1.0)
        : rate_(rate), order_(order), n_(dimension), weight_(weight),
          aux_(static_cast<std::size_t>(order) * dimension, 0.0) {
        if (order < 1 || !(rate > 0.0)) throw std::invalid_argument("chain needs order >= 1 and rate > 0");
    }

    double rate() const { return rate_; }
    int order() const { return order_; }
    std::size_t dimension() const { return n_; }
    /// Number of auxiliary scalars, order * dimension.
    std::size_t size() const { return aux_.size(); }
    std::span<const double> aux_state() const { return aux_; }
    std::span<double> aux_state() { return aux_; }

    /// dy/dt for aux state y driven by x.
    void derivative(std::span<const double> x, std::span<const double> y, std::span<double> dy) const {
        for (std::size_t c = 0; c < n_; ++c) dy[c] = rate_ * (x[c] - y[c]);
        for (std::size_t j = 1; j < static_cast<std::size_t>(order_); ++j)
            for (std::size_t c = 0; c < n_; ++c)
                dy[j * n_ + c] = rate_ * (y[(j - 1) * n_ + c] - y[j * n_ + c]);
    }

    /// M = weight * y_p.
    void output(std::span<const double> y, std::span<double> m) const {
        const std::size_t off = static_cast<std::size_t>(order_ - 1) * n_;
        for (std::size_t c = 0; c < n_; ++c) m[c] = weight_ * y[off + c];
    }

private:
    double rate_;
    int order_;
    std::size_t n_;
    double weight_;
    std::vector<double> aux_;
};

/// Builds the chain for a full-support Gamma kernel with
/// y_j(0) = int_0^inf K_j(s) phi(-s) ds, K_j the Gamma(j, beta) density.
/// The integrals share the Simpson machinery and the kernel's tail_tol;
/// a constant history gives y_j(0) = phi exactly.
inline ChainSystem chain_reduce(const KernelSpec& k, const InitialHistory& phi, const QuadratureOptions& opts = {}) {
    const auto* g = k.as_gamma();
    if (!g) throw UnsupportedError("chain reduction needs a Gamma kernel");
    if (k.horizon()) throw UnsupportedError("chain reduction needs the full-support Gamma kernel (no horizon)");
    const std::size_t n = phi.dimension();
    ChainSystem chain(g->rate, g->order, n, k.weight());
    auto y = chain.aux_state();

    if (auto* c = std::get_if<InitialHistory::Constant>(&phi.form())) {
        for (int j = 0; j < g->order; ++j)
            std::copy(c->value.begin(), c->value.end(), y.begin() + static_cast<std::ptrdiff_t>(j * n));
        return chain;
    }

    const double horizon = KernelSpec::gamma_truncation_horizon(g->order, g->rate, k.tail_tol());
    std::vector<detail::Panel> panels;
    detail::append_history_panels(panels, -horizon, 0.0, opts.history_panel, phi.domain_start());
    for (int j = 1; j <= g->order; ++j) {
        const KernelSpec kj = KernelSpec::gamma(j, g->rate, std::nullopt, k.tail_tol());
        const MemoryValue v = detail::convolve_panels(
            kj, 0.0, panels, n, opts.nodes_per_step, [&](const detail::Panel&, double u, std::span<double> out) {
                const State s = phi(std::min(u, 0.0));
                std::copy(s.begin(), s.end(), out.begin());
            });
        std::copy(v.value.begin(), v.value.end(), y.begin() + static_cast<std::ptrdiff_t>((j - 1) * n));
    }
    return chain;
}

}  // namespace sdmem
