#pragma once

// Time integration of x'(t) = F(t, x(t), x(t - tau(x(t),t)), M[x](t)).
//
// integrate():   fixed-step classical RK4; delayed states are read from the
//                cubic Hermite dense output of the computed past, memory is
//                co-integrated as a linear chain (Gamma kernels) or evaluated
//                by Simpson quadrature.
// picard_solve(): iterates the integral operator
//                (Tx)(t) = phi(0) + int_0^t F(s, x(s), x(s - tau), M[x](s)) ds
//                on a uniform grid with trapezoidal quadrature.

#include <sdmem/core.hpp>
#include <sdmem/memory.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace sdmem {

enum class MemoryMode { chain, quadrature };
enum class WithinStepPolicy { reject, fixed_point_iterate };

struct SolveConfig {
    double h = 1e-3;
    double t_end = 10.0;
    MemoryMode memory_mode = MemoryMode::chain;
    double blowup_threshold = 1e8;
    WithinStepPolicy within_step = WithinStepPolicy::reject;
    int fixed_point_max_iter = 10;
    double fixed_point_tol = 1e-12;
    QuadratureOptions quadrature;

    /// h <= tau_min / 2 unless the within-step fixed-point policy is active.
    void check(const DelaySpec& delay) const {
        if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("step h must be positive");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end must be positive");
        if (!(blowup_threshold > 0.0)) throw ValidationError("blowup_threshold must be positive");
        if (within_step == WithinStepPolicy::reject && h > 0.5 * delay.tau_min())
            throw ValidationError("step h = " + std::to_string(h) + " exceeds tau_min/2 = " +
                                  std::to_string(0.5 * delay.tau_min()) + " (A1)");
        detail::check_nodes_per_step(quadrature.nodes_per_step);
    }
};

struct IntegrationResult {
    /// Covers [-tau_max, t_final]; aux columns hold the chain variables (NaN on the history part).
    Trajectory trajectory;
    bool blowup = false;
    double t_final = 0.0;
};

namespace detail {

class RungeKuttaDde {
public:
    RungeKuttaDde(const ModelSpec& model, const InitialHistory& phi, const SolveConfig& cfg)
        : model_(model), phi_(phi), cfg_(cfg), n_(model.dimension) {
        if (phi.dimension() != n_) throw ValidationError("history dimension does not match the model");
        if (phi.tau_max() < model.delay.tau_max())
            throw ValidationError("history must be defined on [-tau_max, 0] of the delay (A1)");
        cfg.check(model.delay);
        if (model.kernel) {
            if (cfg.memory_mode == MemoryMode::chain) {
                if (!model.kernel->chain_capable())
                    throw UnsupportedError("chain memory mode needs a full-support Gamma kernel; use quadrature");
                chain_.emplace(chain_reduce(*model.kernel, phi, cfg.quadrature));
            } else {
                quadrature_ = true;
            }
        }
        na_ = chain_ ? chain_->size() : 0;
        traj_ = Trajectory(n_, na_);
    }

    IntegrationResult run() {
        const double t_end = cfg_.t_end;
        const auto steps = static_cast<std::size_t>(std::ceil(t_end / cfg_.h - 1e-9));
        const double tau_max = phi_.tau_max();
        const auto hist_nodes = static_cast<std::size_t>(std::ceil(tau_max / cfg_.h - 1e-9));
        traj_.reserve(hist_nodes + steps + 1);
        for (std::size_t k = 0; k < hist_nodes; ++k) {
            const double t = -tau_max + tau_max * static_cast<double>(k) / static_cast<double>(hist_nodes);
            traj_.push_back(t, phi_(t), phi_.derivative(t));
        }

        std::vector<double> z(n_ + na_);
        const State x0 = phi_(0.0);
        std::copy(x0.begin(), x0.end(), z.begin());
        if (chain_) std::copy(chain_->aux_state().begin(), chain_->aux_state().end(), z.begin() + n_);
        std::vector<double> dz(z.size());
        head_ = {};
        rhs(0.0, z, dz);
        traj_.push_back(0.0, std::span(z).first(n_), std::span(dz).first(n_), std::span(z).subspan(n_));

        IntegrationResult res;
        std::vector<double> znext(z.size()), dznext(z.size());
        for (std::size_t k = 0; k < steps; ++k) {
            const double t0 = cfg_.h * static_cast<double>(k);
            const double t1 = k + 1 == steps ? t_end : cfg_.h * static_cast<double>(k + 1);
            if (!step(t0, t1, z, dz, znext, dznext)) {
                res.blowup = true;
                break;
            }
            traj_.push_back(t1, std::span(znext).first(n_), std::span(dznext).first(n_),
                            std::span(znext).subspan(n_));
            z.swap(znext);
            dz.swap(dznext);
        }
        res.t_final = traj_.t_end();
        res.trajectory = std::move(traj_);
        return res;
    }

private:
    struct StepContext {
        bool active = false;
        double t0 = 0.0, t1 = 0.0;
        std::vector<double> x0, f0, x1, f1;  // provisional Hermite data on [t0, t1]
        bool used = false;
    };

    State lookup(double arg) {
        if (arg <= 0.0) return phi_(arg);
        if (arg <= traj_.t_end()) return traj_(arg);
        if (!head_.active || cfg_.within_step == WithinStepPolicy::reject)
            throw DomainError("delayed argument t - tau = " + std::to_string(arg) +
                              " falls inside the current step; reduce h or enable fixed-point-iterate");
        head_.used = true;
        const double h = head_.t1 - head_.t0;
        const auto b = hermite_basis((arg - head_.t0) / h);
        State out(n_);
        for (std::size_t c = 0; c < n_; ++c)
            out[c] = b.h00 * head_.x0[c] + b.h10 * h * head_.f0[c] + b.h01 * head_.x1[c] + b.h11 * h * head_.f1[c];
        return out;
    }

    State quadrature_memory(double t, std::span<const double> x) {
        const KernelSpec& k = *model_.kernel;
        const double lo = t - k.support();
        const double t_last = traj_.t_end();
        std::vector<Panel> panels;
        append_history_panels(panels, lo, std::min(0.0, t), cfg_.quadrature.history_panel, phi_.domain_start());
        // before the node at t = 0 exists only the history contributes
        if (t_last >= 0.0) {
            append_mesh_panels(panels, traj_, std::max(lo, 0.0), std::min(t, t_last));
            if (t > t_last) panels.push_back({std::max(lo, t_last), t, -2});
        }

        const double dt = t - t_last;
        std::vector<double> curv(n_, 0.0);
        if (t_last >= 0.0 && dt > 0.0) {
            const auto xn = traj_.state(traj_.size() - 1);
            const auto fn = traj_.derivative(traj_.size() - 1);
            for (std::size_t c = 0; c < n_; ++c) curv[c] = (x[c] - xn[c] - fn[c] * dt) / (dt * dt);
        }
        auto mv = convolve_panels(k, t, panels, n_, cfg_.quadrature.nodes_per_step,
                                  [&](const Panel& p, double u, std::span<double> out) {
                                      if (p.source == -1) {
                                          const State v = phi_(std::min(u, 0.0));
                                          std::copy(v.begin(), v.end(), out.begin());
                                      } else if (p.source == -2) {
                                          const auto xn = traj_.state(traj_.size() - 1);
                                          const auto fn = traj_.derivative(traj_.size() - 1);
                                          const double s = u - t_last;
                                          for (std::size_t c = 0; c < n_; ++c)
                                              out[c] = xn[c] + fn[c] * s + curv[c] * s * s;
                                      } else {
                                          traj_.eval_in(static_cast<std::size_t>(p.source), u, out);
                                      }
                                  });
        return std::move(mv.value);
    }

    void rhs(double t, std::span<const double> z, std::span<double> dz) {
        const State x(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n_));
        const double tau = model_.delay(x, t);
        const State xd = lookup(t - tau);
        State m(n_, 0.0);
        if (chain_) {
            chain_->output(z.subspan(n_), m);
        } else if (quadrature_) {
            m = quadrature_memory(t, x);
        }
        const State f = model_.evaluate(t, x, xd, m);
        std::copy(f.begin(), f.end(), dz.begin());
        if (chain_) chain_->derivative(x, z.subspan(n_), dz.subspan(n_));
    }

    /// One RK4 step; false signals blow-up.
    bool step(double t0, double t1, std::span<const double> z, std::span<const double> dz, std::vector<double>& znext,
              std::vector<double>& dznext) {
        const double h = t1 - t0;
        const std::size_t dim = z.size();
        head_.active = true;
        head_.t0 = t0;
        head_.t1 = t1;
        head_.x0.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n_));
        head_.f0.assign(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(n_));
        head_.x1.resize(n_);
        head_.f1 = head_.f0;
        for (std::size_t c = 0; c < n_; ++c) head_.x1[c] = head_.x0[c] + h * head_.f0[c];

        std::vector<double> k2(dim), k3(dim), k4(dim), tmp(dim);
        const int max_pass = cfg_.within_step == WithinStepPolicy::fixed_point_iterate ? cfg_.fixed_point_max_iter : 1;
        std::vector<double> prev;
        for (int pass = 0; pass < max_pass; ++pass) {
            head_.used = false;
            double peak = max_abs(z);
            auto stage = [&](std::span<const double> k, double frac, std::vector<double>& out, double ts) {
                for (std::size_t i = 0; i < dim; ++i) tmp[i] = z[i] + frac * h * k[i];
                peak = std::max(peak, max_abs(tmp));
                if (!all_finite(tmp)) return false;
                rhs(ts, tmp, out);
                return true;
            };
            const bool stages_ok = stage(dz, 0.5, k2, t0 + 0.5 * h) && stage(k2, 0.5, k3, t0 + 0.5 * h) &&
                                   stage(k3, 1.0, k4, t1);
            bool has_nan = std::any_of(tmp.begin(), tmp.end(), [](double v) { return std::isnan(v); });
            if (stages_ok) {
                for (std::size_t i = 0; i < dim; ++i)
                    znext[i] = z[i] + h / 6.0 * (dz[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                has_nan = std::any_of(znext.begin(), znext.end(), [](double v) { return std::isnan(v); });
                peak = std::max(peak, max_abs(znext));
            }
            // inf, or a NaN born from overflowing stages, is blow-up; a NaN from moderate values is an error
            if (has_nan && !(peak > cfg_.blowup_threshold))
                throw NumericalError("non-finite state at t = " + std::to_string(t1));
            if (!stages_ok || has_nan || !(max_abs(std::span(znext).first(n_)) <= cfg_.blowup_threshold))
                return false;
            rhs(t1, znext, dznext);
            if (!head_.used) break;
            // refine the provisional interpolant on [t0, t1] and repeat
            std::copy_n(znext.begin(), n_, head_.x1.begin());
            std::copy_n(dznext.begin(), n_, head_.f1.begin());
            if (pass > 0) {
                double change = 0.0;
                for (std::size_t c = 0; c < dim; ++c) change = std::max(change, std::abs(znext[c] - prev[c]));
                if (change < cfg_.fixed_point_tol) break;
            }
            prev = znext;
            if (pass + 1 == max_pass)
                throw NumericalError("within-step fixed-point iteration did not converge at t = " + std::to_string(t1));
        }
        head_.active = false;
        if (!all_finite(dznext)) throw NumericalError("non-finite derivative at t = " + std::to_string(t1));
        return true;
    }

    const ModelSpec& model_;
    const InitialHistory& phi_;
    const SolveConfig& cfg_;
    std::size_t n_, na_ = 0;
    std::optional<ChainSystem> chain_;
    bool quadrature_ = false;
    Trajectory traj_;
    StepContext head_;
};

}  // namespace detail

/// Fixed-step RK4 with dense-output delay lookup. Stops early with
/// blowup = true once |x| exceeds cfg.blowup_threshold. The mesh is not
/// adapted to breaking points (derivative jumps propagated from t = 0).
inline IntegrationResult integrate(const ModelSpec& model, const InitialHistory& phi, const SolveConfig& cfg) {
    detail::RungeKuttaDde solver(model, phi, cfg);
    return solver.run();
}

// ---------------------------------------------------------------------------
// Well-posedness certificate
// ---------------------------------------------------------------------------

/// Contraction constants: C_tau = L_x L_tau + 1, L = L_F (1 + C_tau + C_K),
/// and the existence time T0 = safety / L, so L T0 < 1.
struct Certificate {
    double C_tau;
    double L;
    double T0;
    double safety;
    double L_F, L_x, L_tau, C_K;
    std::optional<double> R;
};

inline Certificate wellposedness_certificate(double L_F, double L_x, double L_tau, double C_K, double safety = 0.9,
                                             std::optional<double> R = std::nullopt) {
    for (double v : {L_F, L_x, L_tau, C_K, safety})
        if (!std::isfinite(v)) throw std::invalid_argument("certificate inputs must be finite");
    if (R && !std::isfinite(*R)) throw std::invalid_argument("certificate inputs must be finite");
    if (!(L_F > 0.0)) throw std::invalid_argument("L_F must be positive");
    if (L_x < 0.0 || L_tau < 0.0 || C_K < 0.0) throw std::invalid_argument("Lipschitz inputs must be nonnegative");
    if (!(safety > 0.0 && safety < 1.0)) throw std::invalid_argument("safety must lie in (0, 1)");
    Certificate c{};
    c.C_tau = L_x * L_tau + 1.0;
    c.L = L_F * (1.0 + c.C_tau + C_K);
    c.T0 = safety / c.L;
    c.safety = safety;
    c.L_F = L_F;
    c.L_x = L_x;
    c.L_tau = L_tau;
    c.C_K = C_K;
    c.R = R;
    return c;
}

// ---------------------------------------------------------------------------
// Picard iteration
// ---------------------------------------------------------------------------

struct PicardOptions {
    std::size_t grid_n = 1000;
    double tol = 1e-12;
    int max_iter = 100;
    QuadratureOptions quadrature;
};

struct PicardResult {
    /// Final iterate; derivatives at grid nodes are F along the previous iterate.
    Trajectory trajectory;
    bool converged = false;
    int iterations = 0;
    /// sup-norm of successive differences, one per iteration
    std::vector<double> differences;
    /// differences[k] / differences[k-1], omitted once differences reach round-off
    std::vector<double> contraction_ratios;
    std::vector<std::string> warnings;
};

/// Iterates x^{k+1} = T x^k from x^0(t) = phi(0) on a uniform grid of grid_n
/// points over [0, T]. Memory terms use Simpson quadrature on the iterate.
inline PicardResult picard_solve(const ModelSpec& model, const InitialHistory& phi, double T,
                                 const PicardOptions& opts = {}) {
    if (!(T > 0.0)) throw std::invalid_argument("Picard horizon T must be positive");
    if (opts.grid_n < 2) throw std::invalid_argument("Picard grid needs at least two points");
    const std::size_t n = model.dimension;
    if (phi.dimension() != n) throw ValidationError("history dimension does not match the model");

    PicardResult res;
    if (model.lipschitz && model.lipschitz->L_F) {
        const double C_K = model.kernel ? memory_lipschitz_bound(*model.kernel, 0.0, T).value : 0.0;
        const auto cert = wellposedness_certificate(*model.lipschitz->L_F, model.lipschitz->L_x,
                                                    model.delay.lipschitz(), C_K);
        if (T > cert.T0)
            res.warnings.push_back("T = " + std::to_string(T) + " exceeds certificate T0 = " + std::to_string(cert.T0));
    }

    const std::size_t N = opts.grid_n;
    const double dt = T / static_cast<double>(N - 1);
    std::vector<double> grid(N);
    for (std::size_t j = 0; j < N; ++j) grid[j] = j + 1 == N ? T : dt * static_cast<double>(j);

    const double tau_max = phi.tau_max();
    const auto hist_nodes =
        std::min<std::size_t>(100000, static_cast<std::size_t>(std::ceil(tau_max / dt - 1e-9)));
    auto build = [&](const std::vector<double>& x, const std::vector<double>& f) {
        Trajectory tr(n);
        tr.reserve(hist_nodes + N);
        for (std::size_t k = 0; k < hist_nodes; ++k) {
            const double t = -tau_max + tau_max * static_cast<double>(k) / static_cast<double>(hist_nodes);
            tr.push_back(t, phi(t), phi.derivative(t));
        }
        for (std::size_t j = 0; j < N; ++j)
            tr.push_back(grid[j], std::span(x).subspan(j * n, n), std::span(f).subspan(j * n, n));
        return tr;
    };

    const State x0 = phi(0.0);
    std::vector<double> x(N * n), f(N * n, 0.0), xn(N * n), fn(N * n);
    for (std::size_t j = 0; j < N; ++j) std::copy(x0.begin(), x0.end(), x.begin() + static_cast<std::ptrdiff_t>(j * n));
    Trajectory cur = build(x, f);

    double scale = std::max(1.0, detail::max_abs(x0));
    for (int it = 0; it < opts.max_iter; ++it) {
        for (std::size_t j = 0; j < N; ++j) {
            const double t = grid[j];
            const State xj(x.begin() + static_cast<std::ptrdiff_t>(j * n), x.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
            const double arg = t - model.delay(xj, t);
            const State xd = arg <= 0.0 ? phi(arg) : cur(arg);
            State m(n, 0.0);
            if (model.kernel) m = eval_memory_quadrature(cur, *model.kernel, t, &phi, opts.quadrature).value;
            const State fj = model.evaluate(t, xj, xd, m);
            std::copy(fj.begin(), fj.end(), fn.begin() + static_cast<std::ptrdiff_t>(j * n));
        }
        std::copy(x0.begin(), x0.end(), xn.begin());
        for (std::size_t j = 1; j < N; ++j)
            for (std::size_t c = 0; c < n; ++c)
                xn[j * n + c] = xn[(j - 1) * n + c] + 0.5 * (grid[j] - grid[j - 1]) * (fn[(j - 1) * n + c] + fn[j * n + c]);
        if (!detail::all_finite(xn)) throw NumericalError("Picard iterate became non-finite");

        double diff = 0.0;
        for (std::size_t i = 0; i < xn.size(); ++i) diff = std::max(diff, std::abs(xn[i] - x[i]));
        scale = std::max(scale, detail::max_abs(xn));
        if (!res.differences.empty() && res.differences.back() > 1e-12 * scale)
            res.contraction_ratios.push_back(diff / res.differences.back());
        res.differences.push_back(diff);
        x.swap(xn);
        f.swap(fn);
        cur = build(x, f);
        res.iterations = it + 1;
        if (diff < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.trajectory = std::move(cur);
    return res;
}

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

struct CrossValidationOptions {
    PicardOptions picard;
    /// RK step; defaults to the largest of 1e-3 and tau_min/2 that divides T evenly.
    std::optional<double> h;
    double pass_tol = 1e-5;
};

struct CrossValidation {
    double sup_diff;
    bool pass;
    double h;
    int picard_iterations;
    std::vector<double> contraction_ratios;
};

/// Runs integrate() and picard_solve() on [0, T] and compares them on the Picard grid.
inline CrossValidation cross_validate(const ModelSpec& model, const InitialHistory& phi, double T,
                                      const CrossValidationOptions& opts = {}) {
    const PicardResult pic = picard_solve(model, phi, T, opts.picard);
    if (!pic.converged)
        throw NumericalError("Picard iteration did not converge in " + std::to_string(opts.picard.max_iter) +
                             " iterations (L T >= 1 or T too large)");
    SolveConfig cfg;
    const double h_target = opts.h ? *opts.h : std::min(1e-3, 0.5 * model.delay.tau_min());
    cfg.h = T / std::ceil(T / h_target - 1e-9);
    cfg.t_end = T;
    cfg.memory_mode = model.kernel && model.kernel->chain_capable() ? MemoryMode::chain : MemoryMode::quadrature;
    cfg.quadrature = opts.picard.quadrature;
    const IntegrationResult rk = integrate(model, phi, cfg);
    if (rk.blowup) throw NumericalError("integration blew up during cross validation");

    double sup = 0.0;
    const auto& ptraj = pic.trajectory;
    State xr(model.dimension);
    for (std::size_t i = 0; i < ptraj.size(); ++i) {
        const double t = ptraj.times()[i];
        if (t < 0.0) continue;
        rk.trajectory.eval_into(t, xr);
        const auto xp = ptraj.state(i);
        for (std::size_t c = 0; c < model.dimension; ++c) sup = std::max(sup, std::abs(xr[c] - xp[c]));
    }
    return {sup, sup <= opts.pass_tol, cfg.h, pic.iterations, pic.contraction_ratios};
}

}  // namespace sdmem
