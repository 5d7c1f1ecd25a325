#pragma once

// Stability and Hopf analysis of the logistic benchmark
//
//   x' = r x (1 - x/K_c) - alpha int_0^inf beta^2 s e^{-beta s} x(t - s) ds.
//
// Two cubic provenances are kept side by side:
//   derived    multiply lambda = a - alpha beta^2/(lambda+beta)^2 through by
//              (lambda+beta)^2, with a the linearization coefficient
//   reference  the published closed-form coefficients
//                A = 2 beta + r - alpha, B = beta^2 + 2 beta (r - alpha), C = beta^2 (r - 2 alpha)
// together with the published threshold alpha_H = r (beta + r) / (2 beta + r).

#include <sdmem/core.hpp>
#include <sdmem/io.hpp>
#include <sdmem/memory.hpp>
#include <sdmem/solver.hpp>

#include <array>
#include <complex>
#include <cstdio>
#include <future>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sdmem {

// ---------------------------------------------------------------------------
// Equilibria and linearization
// ---------------------------------------------------------------------------

/// Always {0}; adds K_c (1 - alpha kappa / r) when r > alpha kappa.
inline std::vector<double> equilibria(double r, double K_c, double alpha, double kappa) {
    if (!(r > 0.0) || !(K_c > 0.0) || alpha < 0.0 || kappa < 0.0)
        throw std::invalid_argument("equilibria need r > 0, K_c > 0, alpha >= 0, kappa >= 0");
    std::vector<double> out{0.0};
    if (r > alpha * kappa) out.push_back(K_c * (1.0 - alpha * kappa / r));
    return out;
}

/// Positive equilibrium, if it exists.
inline std::optional<double> positive_equilibrium(double r, double K_c, double alpha, double kappa) {
    const auto eq = equilibria(r, K_c, alpha, kappa);
    if (eq.size() < 2) return std::nullopt;
    return eq[1];
}

enum class LinearizationMode {
    direct,                ///< a = r - 2 r x* / K_c
    reference_simplified,  ///< a = alpha kappa - r, as printed for the positive equilibrium
};

inline const char* to_string(LinearizationMode m) {
    return m == LinearizationMode::direct ? "direct" : "reference-simplified";
}

/// y' = a_inst y(t) - a_del int K(s) y(t - s) ds
struct LinearizationResult {
    double x_star;
    double a_inst;
    double a_del;
    LinearizationMode mode;
};

inline LinearizationResult linearize(double r, double K_c, double alpha, double kappa, double x_star,
                                     LinearizationMode mode) {
    if (mode == LinearizationMode::direct) return {x_star, r - 2.0 * r * x_star / K_c, alpha, mode};
    if (x_star == 0.0) throw UnsupportedError("the simplified linearization applies only at the positive equilibrium");
    return {x_star, alpha * kappa - r, alpha, mode};
}

// ---------------------------------------------------------------------------
// Characteristic cubic
// ---------------------------------------------------------------------------

enum class CubicSource { derived, reference };

inline const char* to_string(CubicSource s) { return s == CubicSource::derived ? "derived" : "reference"; }

/// lambda^3 + A lambda^2 + B lambda + C
struct CharacteristicCubic {
    double A, B, C;
    CubicSource source;

    template <class T>
    T operator()(T lambda) const {
        return ((lambda + A) * lambda + B) * lambda + C;
    }
    template <class T>
    T derivative(T lambda) const {
        return (3.0 * lambda + 2.0 * A) * lambda + B;
    }
    double scale() const { return std::max({1.0, std::abs(A), std::abs(B), std::abs(C)}); }
};

/// A = 2 beta - a, B = beta^2 - 2 beta a, C = beta^2 (alpha - a).
inline CharacteristicCubic characteristic_cubic(const LinearizationResult& lin, double beta) {
    const double a = lin.a_inst;
    return {2.0 * beta - a, beta * beta - 2.0 * beta * a, beta * beta * (lin.a_del - a), CubicSource::derived};
}

inline CharacteristicCubic reference_cubic(double r, double alpha, double beta) {
    return {2.0 * beta + r - alpha, beta * beta + 2.0 * beta * (r - alpha), beta * beta * (r - 2.0 * alpha),
            CubicSource::reference};
}

/// Derived cubic at the positive equilibrium for memory strength alpha.
inline CharacteristicCubic benchmark_cubic(double r, double K_c, double alpha, double beta, double kappa,
                                           CubicSource source) {
    if (source == CubicSource::reference) return reference_cubic(r, alpha, beta);
    const auto xs = positive_equilibrium(r, K_c, alpha, kappa);
    if (!xs) throw DomainError("positive equilibrium does not exist (r <= alpha kappa)");
    return characteristic_cubic(linearize(r, K_c, alpha, kappa, *xs, LinearizationMode::direct), beta);
}

using CubicRoots = std::array<std::complex<double>, 3>;

/// Roots of the cubic: depressed-cubic closed form (trigonometric for three
/// real roots, Cardano otherwise), one Newton polish per root, sorted by
/// descending real part with ties broken by descending imaginary part.
inline CubicRoots cubic_roots(const CharacteristicCubic& c) {
    using cd = std::complex<double>;
    const double A = c.A, B = c.B, C = c.C;
    const double shift = A / 3.0;
    const double p = B - A * A / 3.0;
    const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
    const double disc = q * q / 4.0 + p * p * p / 27.0;

    CubicRoots roots;
    if (disc < 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots[k] = cd(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - shift, 0.0);
    } else {
        const double s = std::sqrt(disc);
        const double w = -q / 2.0 + (q > 0.0 ? -s : s);  // avoid cancellation
        const double u = std::cbrt(w);
        const double v = u == 0.0 ? 0.0 : -p / (3.0 * u);
        roots[0] = cd(u + v - shift, 0.0);
        roots[1] = cd(-(u + v) / 2.0 - shift, std::sqrt(3.0) / 2.0 * std::abs(u - v));
        roots[2] = std::conj(roots[1]);
    }

    auto polish = [&](cd z) {
        const cd d = c.derivative(z);
        if (std::abs(d) == 0.0) return z;
        const cd next = z - c(z) / d;
        return std::abs(c(next)) <= std::abs(c(z)) ? next : z;
    };
    if (disc < 0.0 || roots[1].imag() == 0.0) {
        for (auto& z : roots) z = cd(polish(cd(z.real(), 0.0)).real(), 0.0);
    } else {
        roots[0] = cd(polish(roots[0]).real(), 0.0);
        roots[1] = polish(roots[1]);
        roots[2] = std::conj(roots[1]);
    }

    double mag = 1.0;
    for (const auto& z : roots) mag = std::max(mag, std::abs(z));
    const double tie = 1e-12 * mag;
    auto before = [&](const cd& a, const cd& b) {
        if (a.real() > b.real() + tie) return true;
        if (std::abs(a.real() - b.real()) <= tie) return a.imag() > b.imag();
        return false;
    };
    for (std::size_t i = 1; i < roots.size(); ++i)
        for (std::size_t j = i; j > 0 && before(roots[j], roots[j - 1]); --j) std::swap(roots[j], roots[j - 1]);
    return roots;
}

inline double max_real_part(const CubicRoots& roots) {
    return std::max({roots[0].real(), roots[1].real(), roots[2].real()});
}

// ---------------------------------------------------------------------------
// Routh-Hurwitz
// ---------------------------------------------------------------------------

enum class Stability { stable, unstable, marginal };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::marginal: return "marginal";
    }
    return "?";
}

struct RouthHurwitzResult {
    Stability verdict;
    double max_real;
    /// verdict agrees with the sign of max Re lambda from cubic_roots
    bool consistent;
};

/// stable iff A > 0, C > 0, AB > C; marginal when a root sits on the
/// imaginary axis (AB = C with A >= 0, B > 0; or C = 0 with A, B > 0).
inline RouthHurwitzResult routh_hurwitz(const CharacteristicCubic& c) {
    const double ab = c.A * c.B;
    const double rel = 1e-12 * std::max({std::abs(ab), std::abs(c.C), 1e-300});
    Stability v;
    if (c.B > 0.0 && c.A >= 0.0 && std::abs(ab - c.C) <= rel) {
        v = Stability::marginal;
    } else if (c.A > 0.0 && c.B > 0.0 && std::abs(c.C) <= 1e-12 * c.scale()) {
        v = Stability::marginal;
    } else if (c.A > 0.0 && c.C > 0.0 && ab > c.C) {
        v = Stability::stable;
    } else {
        v = Stability::unstable;
    }
    const double mr = max_real_part(cubic_roots(c));
    const double axis = 1e-6 * c.scale();
    bool ok = false;
    switch (v) {
        case Stability::stable: ok = mr < 0.0; break;
        case Stability::unstable: ok = mr > 0.0; break;
        case Stability::marginal: ok = std::abs(mr) <= axis; break;
    }
    return {v, mr, ok};
}

// ---------------------------------------------------------------------------
// Hopf threshold
// ---------------------------------------------------------------------------

enum class HopfMethod { closed_form, numeric, simulation_onset };
enum class HopfStatus { found, no_crossing, outside_validity };

inline const char* to_string(HopfStatus s) {
    switch (s) {
        case HopfStatus::found: return "found";
        case HopfStatus::no_crossing: return "no-crossing";
        case HopfStatus::outside_validity: return "outside-validity";
    }
    return "?";
}

inline const char* to_string(HopfMethod m) {
    switch (m) {
        case HopfMethod::closed_form: return "closed-form";
        case HopfMethod::numeric: return "numeric";
        case HopfMethod::simulation_onset: return "simulation-onset";
    }
    return "?";
}

struct HopfResult {
    double alpha_H = std::numeric_limits<double>::quiet_NaN();
    double omega_H = std::numeric_limits<double>::quiet_NaN();
    HopfMethod method = HopfMethod::numeric;
    HopfStatus status = HopfStatus::no_crossing;
    /// numeric method: the cubic at alpha_H has a pair with |Re| <= 1e-8 and |Im| = omega_H +- 1e-6
    bool verified = false;
};

/// Published closed forms: alpha_H = r (beta + r) / (2 beta + r), omega_H^2 = beta^2 + 2 beta (r - alpha_H).
inline HopfResult hopf_closed_form(double r, double beta) {
    if (!(r > 0.0) || !(beta > 0.0)) throw std::invalid_argument("hopf_closed_form needs r > 0 and beta > 0");
    HopfResult h;
    h.method = HopfMethod::closed_form;
    h.alpha_H = r * (beta + r) / (2.0 * beta + r);
    const double radicand = beta * beta + 2.0 * beta * (r - h.alpha_H);
    if (radicand > 0.0) {
        h.omega_H = std::sqrt(radicand);
        h.status = HopfStatus::found;
    } else {
        h.status = HopfStatus::outside_validity;
    }
    return h;
}

/// Default bracket [1e-6, min(r/kappa, r/2 + beta) - 1e-6].
inline std::pair<double, double> default_alpha_range(double r, double beta, double kappa) {
    const double top = kappa > 0.0 ? std::min(r / kappa, r / 2.0 + beta) : r / 2.0 + beta;
    return {1e-6, top - 1e-6};
}

struct HopfSearchOptions {
    std::optional<std::pair<double, double>> alpha_range;
    double tol = 1e-10;
    double kappa = 1.0;
    int scan_points = 2000;
    int max_bisections = 200;
};

/// Hopf point where lambda = +- i omega solves the cubic: omega^2 = B and
/// A omega^2 = C, i.e. g(alpha) = A B - C = 0 with B > 0. Bisection on the
/// first sign change of g found by a uniform scan of the range.
inline HopfResult hopf_threshold_numeric(double r, double K_c, double beta, CubicSource source,
                                         const HopfSearchOptions& opts = {}) {
    if (!(r > 0.0) || !(K_c > 0.0) || !(beta > 0.0) || !(opts.tol > 0.0))
        throw std::invalid_argument("hopf_threshold_numeric needs r, K_c, beta, tol > 0");
    const auto [lo, hi] = opts.alpha_range ? *opts.alpha_range : default_alpha_range(r, beta, opts.kappa);
    if (!(lo > 0.0) || !(hi > lo) || (opts.kappa > 0.0 && hi >= r / opts.kappa))
        throw std::invalid_argument("invalid alpha range: needs 0 < lo < hi < r/kappa");

    auto cubic = [&](double a) { return benchmark_cubic(r, K_c, a, beta, opts.kappa, source); };
    auto g = [&](const CharacteristicCubic& c) { return c.A * c.B - c.C; };

    HopfResult res;
    res.method = HopfMethod::numeric;
    const int n = std::max(opts.scan_points, 2);
    double a_prev = lo;
    auto c_prev = cubic(a_prev);
    for (int i = 1; i <= n; ++i) {
        const double a = i == n ? hi : lo + (hi - lo) * i / n;
        const auto c = cubic(a);
        if (c_prev.B > 0.0 && c.B > 0.0 && g(c_prev) * g(c) <= 0.0) {
            double left = a_prev, right = a;
            const bool left_neg = g(c_prev) < 0.0;
            if (g(c_prev) == 0.0) {
                right = left;
            } else if (g(c) == 0.0) {
                left = right;
            }
            for (int it = 0; it < opts.max_bisections && right - left > 0.0; ++it) {
                const double mid = 0.5 * (left + right);
                if (mid <= left || mid >= right) break;
                ((g(cubic(mid)) < 0.0) == left_neg ? left : right) = mid;
            }
            const double a_h = std::abs(g(cubic(left))) <= std::abs(g(cubic(right))) ? left : right;
            const auto ch = cubic(a_h);
            if (std::abs(g(ch)) > opts.tol)
                throw NumericalError("Hopf bisection stalled with |AB - C| = " + format_double(std::abs(g(ch))));
            res.alpha_H = a_h;
            res.omega_H = std::sqrt(ch.B);
            res.status = HopfStatus::found;
            for (const auto& z : cubic_roots(ch))
                if (std::abs(z.real()) <= 1e-8 && std::abs(std::abs(z.imag()) - res.omega_H) <= 1e-6)
                    res.verified = true;
            return res;
        }
        a_prev = a;
        c_prev = c;
    }
    res.status = HopfStatus::no_crossing;
    return res;
}

// ---------------------------------------------------------------------------
// Benchmark simulation
// ---------------------------------------------------------------------------

/// Logistic memory model with a full-support Gamma(2, beta) kernel.
inline ModelSpec benchmark_model(double r, double K_c, double alpha, double beta) {
    return ModelSpec::logistic({r, K_c, alpha}, DelaySpec::constant(1.0), KernelSpec::gamma(2, beta));
}

struct OnsetRow {
    double alpha;
    double amplitude;  ///< max - min of x over the retained tail; inf after blow-up
    bool blowup = false;
    std::string error;
};

struct OnsetScan {
    std::vector<OnsetRow> rows;
    std::optional<double> alpha_c;
};

struct OnsetOptions {
    SolveConfig sim = [] {
        SolveConfig c;
        c.h = 0.01;
        c.t_end = 1000.0;
        return c;
    }();
    double transient_fraction = 0.5;
    /// absolute amplitude threshold; defaults to 1e-3 K_c
    std::optional<double> amp_tol;
    /// extra bisection refinements of the first crossing cell
    int refine = 0;
    bool parallel = true;
};

/// Tail amplitude of x started from phi == 0.9 x1*(alpha).
inline OnsetRow simulate_tail_amplitude(double r, double K_c, double beta, double alpha, const OnsetOptions& opts) {
    OnsetRow row{alpha, 0.0};
    try {
        const auto xs = positive_equilibrium(r, K_c, alpha, 1.0);
        if (!xs) throw DomainError("no positive equilibrium");
        const ModelSpec model = benchmark_model(r, K_c, alpha, beta);
        const auto phi = InitialHistory::constant(0.9 * *xs, model.delay.tau_max());
        const IntegrationResult res = integrate(model, phi, opts.sim);
        if (res.blowup) {
            row.blowup = true;
            row.amplitude = std::numeric_limits<double>::infinity();
            return row;
        }
        const auto& tr = res.trajectory;
        const double cut = opts.transient_fraction * opts.sim.t_end;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.times()[i] < cut) continue;
            lo = std::min(lo, tr.state(i)[0]);
            hi = std::max(hi, tr.state(i)[0]);
        }
        row.amplitude = hi - lo;
    } catch (const std::exception& e) {
        row.blowup = true;
        row.amplitude = std::numeric_limits<double>::infinity();
        row.error = e.what();
    }
    return row;
}

/// Empirical onset of sustained oscillation over an increasing alpha grid:
/// alpha_c is the midpoint of the first cell whose amplitude crosses amp_tol.
inline OnsetScan oscillation_onset_scan(double r, double K_c, double beta, const std::vector<double>& alpha_grid,
                                        const OnsetOptions& opts = {}) {
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
        if (!(alpha_grid[i] >= 0.0 && alpha_grid[i] < r)) throw std::invalid_argument("alpha grid must lie in [0, r)");
        if (i && !(alpha_grid[i] > alpha_grid[i - 1])) throw std::invalid_argument("alpha grid must be increasing");
    }
    const double tol = opts.amp_tol ? *opts.amp_tol : 1e-3 * K_c;
    OnsetScan scan;
    scan.rows.resize(alpha_grid.size());
    if (opts.parallel) {
        std::vector<std::future<OnsetRow>> jobs;
        for (double a : alpha_grid)
            jobs.push_back(std::async(std::launch::async, [=, &opts] { return simulate_tail_amplitude(r, K_c, beta, a, opts); }));
        for (std::size_t i = 0; i < jobs.size(); ++i) scan.rows[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < alpha_grid.size(); ++i)
            scan.rows[i] = simulate_tail_amplitude(r, K_c, beta, alpha_grid[i], opts);
    }
    for (std::size_t i = 0; i + 1 < scan.rows.size(); ++i) {
        if (scan.rows[i].amplitude <= tol && scan.rows[i + 1].amplitude > tol) {
            double left = scan.rows[i].alpha, right = scan.rows[i + 1].alpha;
            for (int k = 0; k < opts.refine; ++k) {
                const double mid = 0.5 * (left + right);
                (simulate_tail_amplitude(r, K_c, beta, mid, opts).amplitude > tol ? right : left) = mid;
            }
            scan.alpha_c = 0.5 * (left + right);
            break;
        }
    }
    return scan;
}

// ---------------------------------------------------------------------------
// Audit of the published formulas
// ---------------------------------------------------------------------------

namespace detail {

/// Ascending-coefficient polynomial arithmetic, used for the independent expansion.
struct Poly {
    std::vector<double> c;

    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly out{std::vector<double>(a.c.size() + b.c.size() - 1, 0.0)};
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) out.c[i + j] += a.c[i] * b.c[j];
        return out;
    }
    friend Poly operator+(const Poly& a, const Poly& b) {
        Poly out{std::vector<double>(std::max(a.c.size(), b.c.size()), 0.0)};
        for (std::size_t i = 0; i < a.c.size(); ++i) out.c[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) out.c[i] += b.c[i];
        return out;
    }
    friend Poly operator*(double s, const Poly& a) {
        Poly out = a;
        for (auto& v : out.c) v *= s;
        return out;
    }
    double coeff(std::size_t k) const { return k < c.size() ? c[k] : 0.0; }
};

}  // namespace detail

/// Coefficients of lambda (lambda+beta)^2 - a (lambda+beta)^2 + alpha beta^2
/// by polynomial multiplication (not by the closed-form coefficient formulas).
inline CharacteristicCubic expand_characteristic(double a, double alpha, double beta) {
    using detail::Poly;
    const Poly lambda{{0.0, 1.0}};
    const Poly shifted{{beta, 1.0}};
    const Poly sq = shifted * shifted;
    const Poly p = lambda * sq + (-a) * sq + Poly{{alpha * beta * beta}};
    const double lead = p.coeff(3);
    return {p.coeff(2) / lead, p.coeff(1) / lead, p.coeff(0) / lead, CubicSource::derived};
}

struct AuditRow {
    std::string check_name;
    std::string expected_source;
    double value_a;
    double value_b;
    double abs_diff;
    std::string flag;  ///< "match", "MISMATCH", "no-crossing", "no-onset"
};

struct AuditOptions {
    bool simulate = true;
    OnsetOptions onset;
    double grid_step = 0.005;
    double grid_halfwidth = 0.1;
    double onset_tolerance = 0.02;
};

struct AuditReport {
    double r, K_c, beta;
    std::vector<AuditRow> rows;
    HopfResult closed, numeric_derived, numeric_reference;
    std::optional<double> onset;
    std::string text;

    const AuditRow* find(const std::string& name) const {
        for (const auto& row : rows)
            if (row.check_name == name) return &row;
        return nullptr;
    }

    CsvTable csv() const {
        CsvTable t({"check_name", "expected_source", "value_a", "value_b", "abs_diff", "flag"});
        for (const auto& row : rows)
            t.add_row({row.check_name, row.expected_source, format_double(row.value_a), format_double(row.value_b),
                       format_double(row.abs_diff), row.flag});
        return t;
    }
};

/// Cross-checks the published linearization, cubic, and closed-form threshold
/// against the direct derivation, the numeric threshold, and (optionally)
/// simulation onset. Deterministic for fixed inputs.
inline AuditReport audit_reference_formulas(double r, double K_c, double beta, const AuditOptions& opts = {}) {
    if (!(r > 0.0) || !(K_c > 0.0) || !(beta > 0.0)) throw std::invalid_argument("audit needs r, K_c, beta > 0");
    const double kappa = 1.0;
    AuditReport rep{r, K_c, beta, {}, {}, {}, {}, std::nullopt, {}};
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
    auto add = [&](std::string name, std::string src, double a, double b, std::optional<std::string> flag = {}) {
        const double d = std::abs(a - b);
        rep.rows.push_back({std::move(name), std::move(src), a, b, d, flag ? *flag : (close(a, b) ? "match" : "MISMATCH")});
    };

    rep.closed = hopf_closed_form(r, beta);
    const double alpha_closed = rep.closed.alpha_H;

    // linearization and cubic coefficients at alpha = 0 and at the closed-form threshold
    const std::array<std::pair<const char*, double>, 2> probes{{{"alpha_zero", 0.0}, {"alpha_H_closed", alpha_closed}}};
    for (const auto& [label, alpha] : probes) {
        const std::string at = std::string("@") + label;
        const auto xs = positive_equilibrium(r, K_c, alpha, kappa);
        if (!xs) continue;
        const double a_direct = linearize(r, K_c, alpha, kappa, *xs, LinearizationMode::direct).a_inst;
        const double a_ref = linearize(r, K_c, alpha, kappa, *xs, LinearizationMode::reference_simplified).a_inst;
        add("a_inst_direct_vs_reference" + at, "linearization", a_direct, a_ref);

        const auto printed = reference_cubic(r, alpha, beta);
        const auto exp_ref = expand_characteristic(a_ref, alpha, beta);
        const auto exp_direct = expand_characteristic(a_direct, alpha, beta);
        const auto formula_direct =
            characteristic_cubic(linearize(r, K_c, alpha, kappa, *xs, LinearizationMode::direct), beta);
        const std::array<std::pair<const char*, double CharacteristicCubic::*>, 3> coefs{
            {{"A", &CharacteristicCubic::A}, {"B", &CharacteristicCubic::B}, {"C", &CharacteristicCubic::C}}};
        for (const auto& [name, m] : coefs) {
            add(std::string("cubic_") + name + "_expanded_reference_a_vs_printed" + at, "cubic", exp_ref.*m,
                printed.*m);
            add(std::string("cubic_") + name + "_expanded_direct_a_vs_printed" + at, "cubic", exp_direct.*m,
                printed.*m);
            add(std::string("cubic_") + name + "_expanded_direct_a_vs_derived_formula" + at, "cubic", exp_direct.*m,
                formula_direct.*m);
        }
    }

    // the closed-form threshold inserted into both A B - C functions
    auto g = [&](CubicSource s, double a) {
        const auto c = benchmark_cubic(r, K_c, a, beta, kappa, s);
        return c.A * c.B - c.C;
    };
    if (positive_equilibrium(r, K_c, alpha_closed, kappa)) {
        add("hopf_residual_derived@alpha_H_closed", "hopf", g(CubicSource::derived, alpha_closed), 0.0);
        add("hopf_residual_reference@alpha_H_closed", "hopf", g(CubicSource::reference, alpha_closed), 0.0);
    }

    HopfSearchOptions search;
    search.kappa = kappa;
    rep.numeric_derived = hopf_threshold_numeric(r, K_c, beta, CubicSource::derived, search);
    rep.numeric_reference = hopf_threshold_numeric(r, K_c, beta, CubicSource::reference, search);
    auto add_threshold = [&](const std::string& name, const HopfResult& h, double other, bool omega) {
        if (h.status != HopfStatus::found) {
            add(name, "hopf", std::numeric_limits<double>::quiet_NaN(), other, std::string(to_string(h.status)));
        } else {
            add(name, "hopf", omega ? h.omega_H : h.alpha_H, other);
        }
    };
    add_threshold("alpha_H_numeric_derived_vs_closed", rep.numeric_derived, alpha_closed, false);
    add_threshold("omega_H_numeric_derived_vs_closed", rep.numeric_derived, rep.closed.omega_H, true);
    add_threshold("alpha_H_numeric_reference_vs_closed", rep.numeric_reference, alpha_closed, false);

    if (opts.simulate && rep.numeric_derived.status == HopfStatus::found) {
        const double centre = rep.numeric_derived.alpha_H;
        std::vector<double> grid;
        const int half = static_cast<int>(std::lround(opts.grid_halfwidth / opts.grid_step));
        for (int i = -half; i <= half; ++i) {
            const double a = centre + opts.grid_step * i;
            if (a > 0.0 && a < r / kappa) grid.push_back(a);
        }
        const auto scan = oscillation_onset_scan(r, K_c, beta, grid, opts.onset);
        rep.onset = scan.alpha_c;
        if (scan.alpha_c) {
            const double d = std::abs(*scan.alpha_c - centre);
            add("alpha_onset_simulation_vs_numeric_derived", "simulation", *scan.alpha_c, centre,
                std::string(d <= opts.onset_tolerance ? "match" : "MISMATCH"));
        } else {
            add("alpha_onset_simulation_vs_numeric_derived", "simulation", std::numeric_limits<double>::quiet_NaN(),
                centre, std::string("no-onset"));
        }
    }

    // human-readable summary; coefficients are affine in alpha, shown as c0 + c1*alpha
    auto num = [](double v) { return format_double(v, 10); };
    auto affine = [&](auto coef_at) {
        const double c0 = coef_at(0.0), c1 = coef_at(1.0) - c0;
        return num(c0) + " + " + num(c1) + "*alpha";
    };
    std::string t;
    t += "benchmark audit: r = " + num(r) + ", K_c = " + num(K_c) + ", beta = " + num(beta) + ", kappa = 1\n\n";
    t += "linearization coefficient at the positive equilibrium\n";
    t += "  direct:               " + affine([&](double a) { return 2.0 * a * kappa - r; }) + "\n";
    t += "  reference simplified: " + affine([&](double a) { return a * kappa - r; }) + "\n\n";
    t += "characteristic cubic lambda^3 + A lambda^2 + B lambda + C\n";
    const std::array<std::pair<const char*, double CharacteristicCubic::*>, 3> coefs{
        {{"A", &CharacteristicCubic::A}, {"B", &CharacteristicCubic::B}, {"C", &CharacteristicCubic::C}}};
    for (const auto& [name, m] : coefs) {
        t += std::string("  ") + name + " printed:              " +
             affine([&](double a) { return reference_cubic(r, a, beta).*m; }) + "\n";
        t += std::string("  ") + name + " expanded, reference a: " +
             affine([&](double a) { return expand_characteristic(a * kappa - r, a, beta).*m; }) + "\n";
        t += std::string("  ") + name + " expanded, direct a:    " +
             affine([&](double a) { return expand_characteristic(2.0 * a * kappa - r, a, beta).*m; }) + "\n";
    }
    t += "\nHopf threshold\n";
    t += "  closed form:        alpha_H = " + num(rep.closed.alpha_H) + ", omega_H = " + num(rep.closed.omega_H) + "\n";
    auto describe = [&](const HopfResult& h) {
        if (h.status != HopfStatus::found) return std::string(to_string(h.status));
        return "alpha_H = " + num(h.alpha_H) + ", omega_H = " + num(h.omega_H);
    };
    t += "  numeric, derived:   " + describe(rep.numeric_derived) + "\n";
    t += "  numeric, reference: " + describe(rep.numeric_reference) + "\n";
    if (opts.simulate) t += "  simulation onset:   " + (rep.onset ? "alpha_c = " + num(*rep.onset) : std::string("none")) + "\n";
    t += "\nchecks\n";
    for (const auto& row : rep.rows) {
        char line[256];
        std::snprintf(line, sizeof line, "  %-60s %-11s a=%-18s b=%-18s diff=%s\n", row.check_name.c_str(),
                      row.flag.c_str(), num(row.value_a).c_str(), num(row.value_b).c_str(), num(row.abs_diff).c_str());
        t += line;
    }
    std::size_t flagged = 0;
    for (const auto& row : rep.rows) flagged += row.flag != "match";
    t += "\n" + std::to_string(flagged) + " of " + std::to_string(rep.rows.size()) + " checks flagged\n";
    rep.text = std::move(t);
    return rep;
}

// ---------------------------------------------------------------------------
// Parameter sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    double beta;
    double alpha;
    double max_re_lambda;
    std::string rh_verdict;  ///< stable / unstable / marginal / no-equilibrium / error:...
    double alpha_H_closed;
    double alpha_H_numeric;
};

/// Derived-cubic stability over a (beta, alpha) grid; beta outer, alpha inner.
/// Rows are computed per beta concurrently when `parallel`, then aggregated in grid order.
inline std::vector<SweepRow> sweep(double r, double K_c, const std::vector<double>& beta_grid,
                                   const std::vector<double>& alpha_grid, bool parallel = true) {
    if (beta_grid.empty() || alpha_grid.empty()) throw std::invalid_argument("sweep grids must be nonempty");
    if (!(r > 0.0) || !(K_c > 0.0)) throw std::invalid_argument("sweep needs r > 0 and K_c > 0");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    auto row_block = [&](double beta) {
        std::vector<SweepRow> out;
        double closed = nan, numeric = nan;
        try {
            closed = hopf_closed_form(r, beta).alpha_H;
            const auto h = hopf_threshold_numeric(r, K_c, beta, CubicSource::derived);
            if (h.status == HopfStatus::found) numeric = h.alpha_H;
        } catch (const std::exception&) {
        }
        for (double alpha : alpha_grid) {
            SweepRow row{beta, alpha, nan, "", closed, numeric};
            try {
                if (!positive_equilibrium(r, K_c, alpha, 1.0)) {
                    row.rh_verdict = "no-equilibrium";
                } else {
                    const auto c = benchmark_cubic(r, K_c, alpha, beta, 1.0, CubicSource::derived);
                    const auto rh = routh_hurwitz(c);
                    row.max_re_lambda = rh.max_real;
                    row.rh_verdict = to_string(rh.verdict);
                }
            } catch (const std::exception& e) {
                row.rh_verdict = std::string("error:") + e.what();
            }
            out.push_back(std::move(row));
        }
        return out;
    };
    std::vector<std::vector<SweepRow>> blocks(beta_grid.size());
    if (parallel) {
        std::vector<std::future<std::vector<SweepRow>>> jobs;
        for (double b : beta_grid) jobs.push_back(std::async(std::launch::async, row_block, b));
        for (std::size_t i = 0; i < jobs.size(); ++i) blocks[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < beta_grid.size(); ++i) blocks[i] = row_block(beta_grid[i]);
    }
    std::vector<SweepRow> rows;
    for (auto& b : blocks) rows.insert(rows.end(), b.begin(), b.end());
    return rows;
}

inline CsvTable sweep_csv(const std::vector<SweepRow>& rows) {
    CsvTable t({"beta", "alpha", "max_re_lambda", "rh_verdict", "alpha_H_closed", "alpha_H_numeric"});
    for (const auto& r : rows) {
        std::string verdict = r.rh_verdict;
        std::replace(verdict.begin(), verdict.end(), ',', ';');
        t.add_row({format_double(r.beta), format_double(r.alpha), format_double(r.max_re_lambda), verdict,
                   format_double(r.alpha_H_closed), format_double(r.alpha_H_numeric)});
    }
    return t;
}

}  // namespace sdmem
