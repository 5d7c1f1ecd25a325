#pragma once

// Domain types for state-dependent delay equations with distributed memory:
//
//   x'(t) = F(t, x(t), x(t - tau(x(t), t)), M[x](t)),   M[x](t) = int K(t,s) x(s) ds
//
// Assumption labels used in validation reports:
//   A1  delay is bounded, 0 < tau_min <= tau(x,t) <= tau_max, and Lipschitz in x
//   A2  kernel is nonnegative and integrable with a uniform L1 bound
//   A3  right-hand side is continuous in t and locally Lipschitz in the state

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sdmem {

using State = std::vector<double>;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Evaluation requested outside the domain where a quantity is defined.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Input violates one of the modelling assumptions or a configuration rule.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-convergence, non-finite values, or blow-up of a numerical procedure.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation not defined for the given variant (e.g. chain reduction of a tabulated kernel).
struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

namespace detail {

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Shape-preserving cubic Hermite slopes (Fritsch-Carlson) with one-sided
/// end slopes. Preserves sign and monotonicity of the data between nodes.
inline std::vector<double> pchip_slopes(std::span<const double> t, std::span<const double> y) {
    const std::size_t n = t.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
    d.front() = delta.front();
    d.back() = delta.back();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
            d[i] = 0.0;
            continue;
        }
        const double h0 = t[i] - t[i - 1];
        const double h1 = t[i + 1] - t[i];
        const double w0 = 2.0 * h1 + h0;
        const double w1 = h1 + 2.0 * h0;
        d[i] = (w0 + w1) / (w0 / delta[i - 1] + w1 / delta[i]);
    }
    // keep end slopes from overshooting past zero
    if (n > 2) {
        if (d.front() * delta.front() < 0.0) d.front() = 0.0;
        if (d.back() * delta.back() < 0.0) d.back() = 0.0;
    }
    return d;
}

struct HermiteBasis {
    double h00, h10, h01, h11;
};

inline HermiteBasis hermite_basis(double theta) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return {2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + theta, -2.0 * t3 + 3.0 * t2, t3 - t2};
}

struct HermiteDerivBasis {
    double d00, d10, d01, d11;
};

/// d/dtheta of the Hermite basis.
inline HermiteDerivBasis hermite_deriv_basis(double theta) {
    const double t2 = theta * theta;
    return {6.0 * t2 - 6.0 * theta, 3.0 * t2 - 4.0 * theta + 1.0, -6.0 * t2 + 6.0 * theta,
            3.0 * t2 - 2.0 * theta};
}

/// Index i with t[i] <= x <= t[i+1]; clamps to the first/last interval.
inline std::size_t locate_interval(std::span<const double> t, double x) {
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
    return std::min(i, t.size() - 2);
}

/// Scalar piecewise-cubic table over strictly increasing abscissae.
class CubicTable {
public:
    CubicTable() = default;
    CubicTable(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
        if (t_.size() != y_.size() || t_.size() < 2)
            throw std::invalid_argument("cubic table needs at least two samples of matching length");
        for (std::size_t i = 0; i + 1 < t_.size(); ++i)
            if (!(t_[i + 1] > t_[i])) throw std::invalid_argument("cubic table abscissae must be strictly increasing");
        d_ = pchip_slopes(t_, y_);
    }

    double front() const { return t_.front(); }
    double back() const { return t_.back(); }
    std::span<const double> abscissae() const { return t_; }
    std::span<const double> ordinates() const { return y_; }

    double operator()(double x) const {
        const std::size_t i = locate_interval(t_, x);
        const double h = t_[i + 1] - t_[i];
        const auto b = hermite_basis((x - t_[i]) / h);
        return b.h00 * y_[i] + b.h10 * h * d_[i] + b.h01 * y_[i + 1] + b.h11 * h * d_[i + 1];
    }

    double derivative(double x) const {
        const std::size_t i = locate_interval(t_, x);
        const double h = t_[i + 1] - t_[i];
        const auto b = hermite_deriv_basis((x - t_[i]) / h);
        return (b.d00 * y_[i] + b.d01 * y_[i + 1]) / h + b.d10 * d_[i] + b.d11 * d_[i + 1];
    }

private:
    std::vector<double> t_, y_, d_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// InitialHistory
// ---------------------------------------------------------------------------

enum class ExtensionPolicy { constant_left_endpoint, analytic_if_available };

/// The initial history phi on [-tau_max, 0].
///
/// Arguments below -tau_max only arise when a kernel's support exceeds
/// tau_max. They are answered by the extension policy: the constant
/// continuation phi(-tau_max), or the closed-form expression when the
/// history has one (tabulated histories always fall back to the constant).
class InitialHistory {
public:
    struct Constant {
        State value;
    };
    /// coefficients[k] multiplies s^k, componentwise.
    struct Polynomial {
        std::vector<State> coefficients;
    };
    /// offset + amplitude * sin(frequency * s + phase), componentwise.
    struct Sinusoid {
        State amplitude, frequency, phase, offset;
    };
    /// Samples on a strictly increasing grid covering [-tau_max, 0].
    struct Tabulated {
        std::vector<double> times;
        std::vector<State> values;
    };
    /// Caller-supplied routine; derivative is optional (finite differences otherwise).
    struct Routine {
        std::size_t dimension = 1;
        std::function<State(double)> value;
        std::function<State(double)> derivative;
    };
    using Form = std::variant<Constant, Polynomial, Sinusoid, Tabulated, Routine>;

    InitialHistory(Form form, double tau_max,
                   ExtensionPolicy policy = ExtensionPolicy::constant_left_endpoint)
        : form_(std::move(form)), tau_max_(tau_max), policy_(policy) {
        if (!(tau_max_ > 0.0) || !std::isfinite(tau_max_))
            throw std::invalid_argument("history tau_max must be positive and finite");
        dim_ = std::visit([](const auto& f) { return form_dimension(f); }, form_);
        if (dim_ == 0) throw std::invalid_argument("history dimension must be positive");
        if (auto* tab = std::get_if<Tabulated>(&form_)) build_tables(*tab);
    }

    static InitialHistory constant(State value, double tau_max) {
        return InitialHistory(Constant{std::move(value)}, tau_max);
    }
    static InitialHistory constant(double value, double tau_max) {
        return constant(State{value}, tau_max);
    }

    double domain_start() const { return -tau_max_; }
    double tau_max() const { return tau_max_; }
    std::size_t dimension() const { return dim_; }
    ExtensionPolicy extension_policy() const { return policy_; }
    const Form& form() const { return form_; }
    bool is_constant() const { return std::holds_alternative<Constant>(form_); }

    /// phi(t) for t <= 0, with the extension policy applied below -tau_max.
    State operator()(double t) const {
        if (!(t <= 0.0)) {
            std::ostringstream msg;
            msg << "history evaluated at t = " << t << " > 0";
            throw DomainError(msg.str());
        }
        const double arg = effective_argument(t);
        State out = std::visit([&](const auto& f) { return this->value_of(f, arg); }, form_);
        if (out.size() != dim_) throw DomainError("history routine returned wrong dimension");
        return out;
    }

    /// phi'(t). Analytic where available, otherwise centered differences
    /// with step 1e-6 * tau_max. Zero on the constant continuation.
    State derivative(double t) const {
        if (!(t <= 0.0)) throw DomainError("history derivative requested at t > 0");
        if (effective_argument(t) != t) return State(dim_, 0.0);
        return std::visit([&](const auto& f) { return this->derivative_of(f, t); }, form_);
    }

private:
    static std::size_t form_dimension(const Constant& c) { return c.value.size(); }
    static std::size_t form_dimension(const Polynomial& p) {
        if (p.coefficients.empty()) return 0;
        const std::size_t n = p.coefficients.front().size();
        for (const auto& c : p.coefficients)
            if (c.size() != n) throw std::invalid_argument("polynomial history coefficients differ in dimension");
        return n;
    }
    static std::size_t form_dimension(const Sinusoid& s) {
        const std::size_t n = s.amplitude.size();
        if (s.frequency.size() != n || s.phase.size() != n || s.offset.size() != n)
            throw std::invalid_argument("sinusoid history fields differ in dimension");
        return n;
    }
    static std::size_t form_dimension(const Tabulated& t) {
        if (t.values.empty()) return 0;
        return t.values.front().size();
    }
    static std::size_t form_dimension(const Routine& r) {
        if (!r.value) throw std::invalid_argument("history routine is empty");
        return r.dimension;
    }

    void build_tables(const Tabulated& tab) {
        if (tab.times.size() != tab.values.size() || tab.times.size() < 2)
            throw std::invalid_argument("tabulated history needs matching times/values (>= 2 samples)");
        if (tab.times.front() > -tau_max_ || tab.times.back() < 0.0)
            throw std::invalid_argument("tabulated history must cover [-tau_max, 0]");
        for (std::size_t c = 0; c < dim_; ++c) {
            std::vector<double> y;
            y.reserve(tab.values.size());
            for (const auto& v : tab.values) {
                if (v.size() != dim_) throw std::invalid_argument("tabulated history values differ in dimension");
                y.push_back(v[c]);
            }
            tables_.emplace_back(tab.times, std::move(y));
        }
    }

    double effective_argument(double t) const {
        if (t >= -tau_max_) return t;
        const bool closed_form = !std::holds_alternative<Tabulated>(form_);
        if (policy_ == ExtensionPolicy::analytic_if_available && closed_form) return t;
        return -tau_max_;
    }

    State value_of(const Constant& c, double) const { return c.value; }
    State value_of(const Polynomial& p, double t) const {
        State out(dim_, 0.0);
        for (std::size_t k = p.coefficients.size(); k-- > 0;)
            for (std::size_t c = 0; c < dim_; ++c) out[c] = out[c] * t + p.coefficients[k][c];
        return out;
    }
    State value_of(const Sinusoid& s, double t) const {
        State out(dim_);
        for (std::size_t c = 0; c < dim_; ++c)
            out[c] = s.offset[c] + s.amplitude[c] * std::sin(s.frequency[c] * t + s.phase[c]);
        return out;
    }
    State value_of(const Tabulated&, double t) const {
        State out(dim_);
        for (std::size_t c = 0; c < dim_; ++c) out[c] = tables_[c](t);
        return out;
    }
    State value_of(const Routine& r, double t) const { return r.value(t); }

    State derivative_of(const Constant&, double) const { return State(dim_, 0.0); }
    State derivative_of(const Polynomial& p, double t) const {
        State out(dim_, 0.0);
        for (std::size_t k = p.coefficients.size(); k-- > 1;)
            for (std::size_t c = 0; c < dim_; ++c)
                out[c] = out[c] * t + static_cast<double>(k) * p.coefficients[k][c];
        return out;
    }
    State derivative_of(const Sinusoid& s, double t) const {
        State out(dim_);
        for (std::size_t c = 0; c < dim_; ++c)
            out[c] = s.amplitude[c] * s.frequency[c] * std::cos(s.frequency[c] * t + s.phase[c]);
        return out;
    }
    State derivative_of(const Tabulated&, double t) const {
        State out(dim_);
        for (std::size_t c = 0; c < dim_; ++c) out[c] = tables_[c].derivative(t);
        return out;
    }
    State derivative_of(const Routine& r, double t) const {
        if (r.derivative) return r.derivative(t);
        const double step = 1e-6 * tau_max_;
        // one-sided at the right end of the domain
        const double hi = std::min(t + step, 0.0);
        const double lo = hi - 2.0 * step;
        const State a = (*this)(lo);
        const State b = (*this)(hi);
        State out(dim_);
        for (std::size_t c = 0; c < dim_; ++c) out[c] = (b[c] - a[c]) / (hi - lo);
        return out;
    }

    Form form_;
    double tau_max_;
    ExtensionPolicy policy_;
    std::size_t dim_ = 0;
    std::vector<detail::CubicTable> tables_;
};

// ---------------------------------------------------------------------------
// DelaySpec
// ---------------------------------------------------------------------------

/// State-dependent delay tau(x, t) with declared bounds and Lipschitz constant.
class DelaySpec {
public:
    struct Constant {
        double tau0;
    };
    /// clamp(c0 + c1 * x[0], tau_min, tau_max)
    struct AffineClamped {
        double c0, c1;
    };
    struct Routine {
        std::function<double(const State&, double)> tau;
    };
    using Form = std::variant<Constant, AffineClamped, Routine>;

    DelaySpec(Form form, double tau_min, double tau_max, double L_tau)
        : form_(std::move(form)), tau_min_(tau_min), tau_max_(tau_max), L_tau_(L_tau) {}

    static DelaySpec constant(double tau0) { return DelaySpec(Constant{tau0}, tau0, tau0, 0.0); }
    static DelaySpec affine_clamped(double c0, double c1, double tau_min, double tau_max) {
        return DelaySpec(AffineClamped{c0, c1}, tau_min, tau_max, std::abs(c1));
    }
    static DelaySpec routine(std::function<double(const State&, double)> tau, double tau_min, double tau_max,
                             double L_tau) {
        return DelaySpec(Routine{std::move(tau)}, tau_min, tau_max, L_tau);
    }

    double tau_min() const { return tau_min_; }
    double tau_max() const { return tau_max_; }
    double lipschitz() const { return L_tau_; }
    const Form& form() const { return form_; }

    /// Raw value of the delay routine, without the bounds assertion.
    double raw(const State& x, double t) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return f.tau0;
                } else if constexpr (std::is_same_v<T, AffineClamped>) {
                    return std::clamp(f.c0 + f.c1 * x.at(0), tau_min_, tau_max_);
                } else {
                    return f.tau(x, t);
                }
            },
            form_);
    }

    /// tau(x, t); asserts 0 < tau_min <= tau <= tau_max.
    double operator()(const State& x, double t) const {
        const double tau = raw(x, t);
        if (!(tau > 0.0) || tau < tau_min_ || tau > tau_max_ || !std::isfinite(tau)) {
            std::ostringstream msg;
            msg << "delay value " << tau << " at t = " << t << " leaves [" << tau_min_ << ", " << tau_max_ << "]";
            throw DomainError(msg.str());
        }
        return tau;
    }

private:
    Form form_;
    double tau_min_, tau_max_, L_tau_;
};

// ---------------------------------------------------------------------------
// KernelSpec
// ---------------------------------------------------------------------------

namespace detail {

/// Regularized upper incomplete Gamma Q(p, u) for integer p >= 1.
inline double gamma_tail(int p, double u) {
    if (u <= 0.0) return 1.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < p; ++k) {
        term *= u / k;
        sum += term;
    }
    return std::exp(-u) * sum;
}

/// Gamma(p, rate) density at s >= 0.
inline double gamma_density(int p, double rate, double s) {
    if (s < 0.0) return 0.0;
    if (s == 0.0) return p == 1 ? rate : 0.0;
    return std::exp(p * std::log(rate) + (p - 1) * std::log(s) - rate * s - std::lgamma(static_cast<double>(p)));
}

}  // namespace detail

/// Memory kernel K. Convolution variants are functions of the lag s >= 0;
/// the nonautonomous variant is K(t, s) over absolute times s in [t - window, t].
class KernelSpec {
public:
    /// Gamma(order, rate) density, beta^p s^(p-1) e^(-beta s) / (p-1)!.
    struct Gamma {
        int order;
        double rate;
    };
    /// Uniform samples of K on [0, span].
    struct Tabulated {
        std::vector<double> samples;
        double span;
    };
    struct Nonautonomous {
        std::function<double(double t, double s)> kernel;
        double window;
    };
    using Variant = std::variant<Gamma, Tabulated, Nonautonomous>;

    explicit KernelSpec(Variant v, std::optional<double> horizon = std::nullopt, double tail_tol = 1e-10)
        : variant_(std::move(v)), horizon_(horizon), tail_tol_(tail_tol) {
        if (auto* tab = std::get_if<Tabulated>(&variant_)) {
            if (tab->samples.size() < 2 || !(tab->span > 0.0))
                throw std::invalid_argument("tabulated kernel needs >= 2 samples and a positive span");
            std::vector<double> s(tab->samples.size());
            const double ds = tab->span / static_cast<double>(tab->samples.size() - 1);
            for (std::size_t i = 0; i < s.size(); ++i) s[i] = ds * static_cast<double>(i);
            s.back() = tab->span;
            table_ = detail::CubicTable(std::move(s), tab->samples);
        }
    }

    static KernelSpec gamma(int order, double rate, std::optional<double> horizon = std::nullopt,
                            double tail_tol = 1e-10) {
        return KernelSpec(Gamma{order, rate}, horizon, tail_tol);
    }
    static KernelSpec tabulated(std::vector<double> samples, double span) {
        return KernelSpec(Tabulated{std::move(samples), span});
    }
    static KernelSpec nonautonomous(std::function<double(double, double)> k, double window) {
        return KernelSpec(Nonautonomous{std::move(k), window});
    }

    /// Same kernel multiplied by c.
    KernelSpec scaled(double c) const {
        KernelSpec out = *this;
        out.weight_ *= c;
        return out;
    }

    const Variant& variant() const { return variant_; }
    const std::optional<double>& horizon() const { return horizon_; }
    double tail_tol() const { return tail_tol_; }
    double weight() const { return weight_; }
    bool is_convolution() const { return !std::holds_alternative<Nonautonomous>(variant_); }
    const Gamma* as_gamma() const { return std::get_if<Gamma>(&variant_); }
    /// Gamma kernel integrated over [0, inf): exactly reducible to a linear chain.
    bool chain_capable() const { return as_gamma() != nullptr && !horizon_.has_value(); }

    /// Quadrature horizon: the explicit horizon if set, otherwise the point
    /// where the Gamma tail mass drops to tail_tol; the span/window otherwise.
    double support() const {
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Gamma>) {
                    return horizon_ ? *horizon_ : gamma_truncation_horizon(v.order, v.rate, tail_tol_);
                } else if constexpr (std::is_same_v<T, Tabulated>) {
                    return v.span;
                } else {
                    return v.window;
                }
            },
            variant_);
    }

    /// K(s) for a convolution kernel; zero outside the support.
    double lag_value(double s) const {
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Gamma>) {
                    if (s < 0.0 || (horizon_ && s > *horizon_)) return 0.0;
                    return weight_ * detail::gamma_density(v.order, v.rate, s);
                } else if constexpr (std::is_same_v<T, Tabulated>) {
                    if (s < 0.0 || s > v.span) return 0.0;
                    return weight_ * table_(s);
                } else {
                    throw UnsupportedError("nonautonomous kernel has no lag form");
                }
            },
            variant_);
    }

    /// K(t, s) with s an absolute time.
    double operator()(double t, double s) const {
        if (auto* na = std::get_if<Nonautonomous>(&variant_)) {
            if (s > t || s < t - na->window) return 0.0;
            return weight_ * na->kernel(t, s);
        }
        return lag_value(t - s);
    }

    /// Horizon H with Q(p, rate H) = tail_tol. Closed forms for p <= 2
    /// (p = 2 through the lower Lambert-W branch, evaluated by Newton), bisection otherwise.
    static double gamma_truncation_horizon(int order, double rate, double tail_tol) {
        if (order < 1 || !(rate > 0.0) || !(tail_tol > 0.0) || tail_tol >= 1.0)
            throw std::invalid_argument("gamma horizon needs order >= 1, rate > 0, tail_tol in (0,1)");
        if (order == 1) return -std::log(tail_tol) / rate;
        if (order == 2) {
            // (1 + u) e^{-u} = tol  <=>  u = -1 - W_{-1}(-tol / e)
            const double z = -tail_tol / std::exp(1.0);
            double w = std::log(-z) - std::log(-std::log(-z));  // asymptotic seed on the lower branch
            for (int it = 0; it < 50; ++it) {
                const double ew = std::exp(w);
                const double step = (w * ew - z) / (ew * (w + 1.0));
                w -= step;
                if (std::abs(step) <= 1e-15 * std::abs(w)) break;
            }
            return (-1.0 - w) / rate;
        }
        double lo = 0.0, hi = 1.0;
        while (detail::gamma_tail(order, hi) > tail_tol) hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (detail::gamma_tail(order, mid) > tail_tol ? lo : hi) = mid;
        }
        return hi / rate;
    }

private:
    Variant variant_;
    std::optional<double> horizon_;
    double tail_tol_ = 1e-10;
    double weight_ = 1.0;
    detail::CubicTable table_;
};

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

/// Scalar logistic growth with distributed memory: x' = r x (1 - x/K_c) - alpha M.
struct LogisticMemoryModel {
    double r = 1.0;
    double K_c = 1.0;
    double alpha = 0.0;
};

using RhsFunction =
    std::function<State(double t, const State& x, const State& x_delayed, const State& memory)>;

struct LipschitzData {
    std::optional<double> L_F;
    double L_x = 0.0;
    std::optional<double> R;
};

/// Right-hand side, delay, and memory kernel of one problem instance.
/// A missing kernel means M[x] == 0. Caller-supplied right-hand sides must be
/// deterministic and reentrant.
struct ModelSpec {
    std::size_t dimension = 1;
    std::variant<LogisticMemoryModel, RhsFunction> rhs = LogisticMemoryModel{};
    DelaySpec delay = DelaySpec::constant(1.0);
    std::optional<KernelSpec> kernel;
    std::optional<LipschitzData> lipschitz;

    static ModelSpec logistic(LogisticMemoryModel m, DelaySpec delay, std::optional<KernelSpec> kernel) {
        ModelSpec spec;
        spec.dimension = 1;
        spec.rhs = m;
        spec.delay = std::move(delay);
        spec.kernel = std::move(kernel);
        return spec;
    }

    static ModelSpec custom(std::size_t n, RhsFunction f, DelaySpec delay, std::optional<KernelSpec> kernel) {
        ModelSpec spec;
        spec.dimension = n;
        spec.rhs = std::move(f);
        spec.delay = std::move(delay);
        spec.kernel = std::move(kernel);
        return spec;
    }

    const LogisticMemoryModel* logistic_model() const { return std::get_if<LogisticMemoryModel>(&rhs); }

    State evaluate(double t, const State& x, const State& x_delayed, const State& memory) const {
        if (auto* m = logistic_model()) {
            return State{m->r * x[0] * (1.0 - x[0] / m->K_c) - m->alpha * memory[0]};
        }
        State out = std::get<RhsFunction>(rhs)(t, x, x_delayed, memory);
        if (out.size() != dimension) throw NumericalError("right-hand side returned wrong dimension");
        return out;
    }
};

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

/// Mesh solution with piecewise cubic Hermite dense output.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::size_t dimension, std::size_t aux_dimension = 0)
        : n_(dimension), aux_n_(aux_dimension) {}

    std::size_t dimension() const { return n_; }
    std::size_t aux_dimension() const { return aux_n_; }
    std::size_t size() const { return t_.size(); }
    bool empty() const { return t_.empty(); }
    double t_start() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    std::span<const double> times() const { return t_; }

    void reserve(std::size_t nodes) {
        t_.reserve(nodes);
        x_.reserve(nodes * n_);
        f_.reserve(nodes * n_);
        if (aux_n_) aux_.reserve(nodes * aux_n_);
    }

    /// Appends a node; t must exceed the last node. aux may be empty (stored as NaN).
    void push_back(double t, std::span<const double> x, std::span<const double> f,
                   std::span<const double> aux = {}) {
        if (x.size() != n_ || f.size() != n_) throw std::invalid_argument("trajectory node has wrong dimension");
        if (!t_.empty() && !(t > t_.back())) throw std::invalid_argument("trajectory mesh must be strictly increasing");
        t_.push_back(t);
        x_.insert(x_.end(), x.begin(), x.end());
        f_.insert(f_.end(), f.begin(), f.end());
        if (aux_n_) {
            if (aux.empty()) {
                aux_.insert(aux_.end(), aux_n_, std::numeric_limits<double>::quiet_NaN());
            } else {
                if (aux.size() != aux_n_) throw std::invalid_argument("trajectory aux has wrong dimension");
                aux_.insert(aux_.end(), aux.begin(), aux.end());
            }
        }
    }

    /// Replaces the derivative stored at the last node.
    void set_last_derivative(std::span<const double> f) {
        std::copy(f.begin(), f.end(), f_.end() - static_cast<std::ptrdiff_t>(n_));
    }

    std::span<const double> state(std::size_t i) const { return {x_.data() + i * n_, n_}; }
    std::span<const double> derivative(std::size_t i) const { return {f_.data() + i * n_, n_}; }
    std::span<const double> aux(std::size_t i) const { return {aux_.data() + i * aux_n_, aux_n_}; }

    /// Interval index i with t in [t_i, t_{i+1}]; throws outside the mesh.
    std::size_t interval_of(double t) const {
        check_domain(t);
        if (t_.size() == 1) return 0;
        return detail::locate_interval(t_, t);
    }

    /// Dense output on interval i (t need not be checked against the interval).
    void eval_in(std::size_t i, double t, std::span<double> out) const {
        if (t_.size() == 1 || t == t_[i]) {
            std::copy_n(x_.data() + i * n_, n_, out.begin());
            return;
        }
        if (t == t_[i + 1]) {
            std::copy_n(x_.data() + (i + 1) * n_, n_, out.begin());
            return;
        }
        const double h = t_[i + 1] - t_[i];
        const auto b = detail::hermite_basis((t - t_[i]) / h);
        const double* x0 = x_.data() + i * n_;
        const double* x1 = x0 + n_;
        const double* f0 = f_.data() + i * n_;
        const double* f1 = f0 + n_;
        for (std::size_t c = 0; c < n_; ++c)
            out[c] = b.h00 * x0[c] + b.h10 * h * f0[c] + b.h01 * x1[c] + b.h11 * h * f1[c];
    }

    void eval_into(double t, std::span<double> out) const { eval_in(interval_of(t), t, out); }

    State operator()(double t) const {
        State out(n_);
        eval_into(t, out);
        return out;
    }

private:
    void check_domain(double t) const {
        if (t_.empty() || t < t_.front() || t > t_.back() || std::isnan(t)) {
            std::ostringstream msg;
            msg << "trajectory evaluated at t = " << t << " outside its mesh";
            if (!t_.empty()) msg << " [" << t_.front() << ", " << t_.back() << "]";
            throw DomainError(msg.str());
        }
    }

    std::size_t n_ = 0, aux_n_ = 0;
    std::vector<double> t_, x_, f_, aux_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class CheckStatus { pass, fail, unknown };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::unknown: return "unknown";
    }
    return "?";
}

struct ValidationCheck {
    std::string assumption;  // "A1", "A2", "A3", "model", "history"
    std::string name;
    CheckStatus status;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool passed() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const auto& c) { return c.status == CheckStatus::fail; });
    }

    /// First failing check rendered as "name (A#): detail".
    std::string first_failure() const {
        for (const auto& c : checks)
            if (c.status == CheckStatus::fail) return c.name + " (" + c.assumption + "): " + c.detail;
        return {};
    }

    void add(std::string assumption, std::string name, CheckStatus status, std::string detail = {}) {
        checks.push_back({std::move(assumption), std::move(name), status, std::move(detail)});
    }
};

namespace detail {

inline CheckStatus pass_if(bool ok) { return ok ? CheckStatus::pass : CheckStatus::fail; }

inline void validate_delay(const DelaySpec& d, std::size_t n, std::mt19937_64& rng, ValidationReport& rep) {
    const double lo = d.tau_min(), hi = d.tau_max();
    rep.add("A1", "tau_min_positive", pass_if(lo > 0.0 && std::isfinite(lo)), "tau_min = " + std::to_string(lo));
    rep.add("A1", "tau_max_ge_tau_min", pass_if(hi >= lo && std::isfinite(hi)),
            "tau_max = " + std::to_string(hi));
    rep.add("A1", "lipschitz_nonnegative", pass_if(d.lipschitz() >= 0.0 && std::isfinite(d.lipschitz())));

    if (auto* c = std::get_if<DelaySpec::Constant>(&d.form())) {
        rep.add("A1", "constant_in_bounds", pass_if(c->tau0 >= lo && c->tau0 <= hi && c->tau0 > 0.0),
                "tau0 = " + std::to_string(c->tau0));
        rep.add("A1", "constant_lipschitz_zero", pass_if(d.lipschitz() == 0.0));
        return;
    }
    if (auto* a = std::get_if<DelaySpec::AffineClamped>(&d.form())) {
        rep.add("A1", "affine_lipschitz_bound", pass_if(d.lipschitz() >= std::abs(a->c1)),
                "L_tau must be >= |c1|");
        return;
    }
    // caller routine: sampled bounds and Lipschitz ratio
    std::uniform_real_distribution<double> ux(-10.0, 10.0), ut(0.0, 100.0);
    bool bounds_ok = true, lip_ok = true, threw = false;
    for (int k = 0; k < 1000 && !threw; ++k) {
        State x(n), y(n);
        for (auto& v : x) v = ux(rng);
        for (auto& v : y) v = ux(rng);
        const double t = ut(rng);
        try {
            const double tx = d.raw(x, t), ty = d.raw(y, t);
            if (!(tx >= lo && tx <= hi && tx > 0.0)) bounds_ok = false;
            double dist = 0.0;
            for (std::size_t c = 0; c < n; ++c) dist = std::max(dist, std::abs(x[c] - y[c]));
            if (std::abs(tx - ty) > d.lipschitz() * dist * (1.0 + 1e-12) + 1e-15) lip_ok = false;
        } catch (const std::exception&) {
            threw = true;
        }
    }
    rep.add("A1", "routine_bounds_sampled", bounds_ok && !threw ? CheckStatus::unknown : CheckStatus::fail,
            "checked on 1000 samples only");
    rep.add("A1", "routine_lipschitz_sampled", lip_ok && !threw ? CheckStatus::unknown : CheckStatus::fail,
            "checked on 1000 samples only");
}

inline void validate_kernel(const KernelSpec& k, std::mt19937_64& rng, ValidationReport& rep) {
    rep.add("A2", "tail_tol_in_range", pass_if(k.tail_tol() > 0.0 && k.tail_tol() < 1.0));
    rep.add("A2", "weight_nonnegative", pass_if(k.weight() >= 0.0 && std::isfinite(k.weight())));
    if (k.horizon()) rep.add("A2", "horizon_positive", pass_if(*k.horizon() > 0.0 && std::isfinite(*k.horizon())));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, KernelSpec::Gamma>) {
                rep.add("A2", "gamma_order_positive", pass_if(v.order >= 1), "order = " + std::to_string(v.order));
                rep.add("A2", "gamma_rate_positive", pass_if(v.rate > 0.0 && std::isfinite(v.rate)),
                        "rate = " + std::to_string(v.rate));
            } else if constexpr (std::is_same_v<T, KernelSpec::Tabulated>) {
                const bool nonneg = std::all_of(v.samples.begin(), v.samples.end(), [](double s) { return s >= 0.0; });
                rep.add("A2", "tabulated_nonnegative", pass_if(nonneg), "all samples must be >= 0");
                rep.add("A2", "tabulated_finite", pass_if(all_finite(v.samples)));
            } else {
                std::uniform_real_distribution<double> ut(0.0, 100.0), uf(0.0, 1.0);
                bool nonneg = true, finite = true;
                for (int s = 0; s < 1000; ++s) {
                    const double t = ut(rng);
                    const double val = v.kernel(t, t - uf(rng) * v.window);
                    if (!std::isfinite(val)) finite = false;
                    if (val < 0.0) nonneg = false;
                }
                rep.add("A2", "nonautonomous_nonnegative_sampled", nonneg ? CheckStatus::unknown : CheckStatus::fail,
                        "checked on 1000 samples only");
                rep.add("A2", "nonautonomous_integrable_sampled", finite ? CheckStatus::unknown : CheckStatus::fail,
                        "checked on 1000 samples only");
            }
        },
        k.variant());
}

}  // namespace detail

/// Checks the modelling assumptions. Caller-supplied routines can only be
/// probed by sampling and are reported "unknown" unless a sample fails.
inline ValidationReport validate(const ModelSpec& model, std::uint64_t seed = 0) {
    ValidationReport rep;
    std::mt19937_64 rng(seed);
    rep.add("model", "dimension_positive", detail::pass_if(model.dimension >= 1));
    detail::validate_delay(model.delay, std::max<std::size_t>(model.dimension, 1), rng, rep);
    if (model.kernel) detail::validate_kernel(*model.kernel, rng, rep);

    if (auto* m = model.logistic_model()) {
        rep.add("A3", "logistic_scalar", detail::pass_if(model.dimension == 1));
        rep.add("A3", "growth_rate_positive", detail::pass_if(m->r > 0.0 && std::isfinite(m->r)),
                "r = " + std::to_string(m->r));
        rep.add("A3", "capacity_positive", detail::pass_if(m->K_c > 0.0 && std::isfinite(m->K_c)),
                "K_c = " + std::to_string(m->K_c));
        rep.add("A3", "memory_strength_nonnegative", detail::pass_if(m->alpha >= 0.0 && std::isfinite(m->alpha)),
                "alpha = " + std::to_string(m->alpha));
    } else {
        const auto& f = std::get<RhsFunction>(model.rhs);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        bool finite = true;
        for (int s = 0; s < 100 && finite; ++s) {
            State x(model.dimension), xd(model.dimension), m(model.dimension);
            for (std::size_t c = 0; c < model.dimension; ++c) {
                x[c] = u(rng);
                xd[c] = u(rng);
                m[c] = u(rng);
            }
            try {
                const State out = f(std::abs(u(rng)), x, xd, m);
                finite = out.size() == model.dimension && detail::all_finite(out);
            } catch (const std::exception&) {
                finite = false;
            }
        }
        rep.add("A3", "routine_finite_sampled", finite ? CheckStatus::unknown : CheckStatus::fail,
                "local Lipschitz property not checkable for caller routines");
    }
    return rep;
}

/// Finite values on [-tau_max, 0] and a continuity probe: the largest jump
/// between neighbouring samples must shrink under grid halving.
inline ValidationReport validate_history(const InitialHistory& h, double tol = 1e-6) {
    ValidationReport rep;
    auto max_jump = [&](int n, bool& finite) {
        double jump = 0.0;
        State prev = h(h.domain_start());
        finite = finite && detail::all_finite(prev);
        for (int i = 1; i <= n; ++i) {
            const double t = h.domain_start() * (1.0 - static_cast<double>(i) / n);
            State cur = h(std::min(t, 0.0));
            finite = finite && detail::all_finite(cur);
            for (std::size_t c = 0; c < cur.size(); ++c) jump = std::max(jump, std::abs(cur[c] - prev[c]));
            prev = std::move(cur);
        }
        return jump;
    };
    bool finite = true;
    double coarse = 0.0, fine = 0.0;
    try {
        coarse = max_jump(2048, finite);
        fine = max_jump(4096, finite);
    } catch (const std::exception& e) {
        rep.add("history", "evaluable", CheckStatus::fail, e.what());
        return rep;
    }
    rep.add("history", "finite", detail::pass_if(finite));
    const bool continuous = fine <= tol || fine <= 0.75 * coarse;
    rep.add("history", "continuous", detail::pass_if(continuous),
            "max jump " + std::to_string(fine) + " at 4096 samples vs " + std::to_string(coarse) + " at 2048");
    return rep;
}

}  // namespace sdmem
