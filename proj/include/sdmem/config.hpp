#pragma once

// Model configuration files: flat `[section]` / `key = value` documents.
// '#' and ';' start comments. Unknown sections or keys are errors.
//
//   [model]     r, K_c, alpha, dimension
//   [delay]     form (constant | affine-clamped), tau0, c0, c1, tau_min, tau_max, L_tau
//   [kernel]    variant (gamma | tabulated | none), order, rate, horizon, tail_tol, samples
//   [history]   form (constant | polynomial | sinusoid | tabulated), value, coefficients,
//               amplitude, frequency, phase, offset, times, values,
//               extension (constant-left-endpoint | analytic-if-available)
//   [solve]     h, t_end, memory_mode (chain | quadrature), blowup_threshold,
//               within_step_policy (reject | fixed-point-iterate), quadrature_nodes, history_panel
//   [lipschitz] L_F, L_x, R, C_K, safety
//   [verify]    T, grid_n, tol, max_iter, pass_tol
//   [sweep]     beta_min, beta_max, beta_count, alpha_min, alpha_max, alpha_count, parallel
//   [scan]      alpha_step, alpha_halfwidth, t_sim, h, transient_fraction, amp_tol, onset_tolerance, simulate

#include <sdmem/core.hpp>
#include <sdmem/memory.hpp>
#include <sdmem/solver.hpp>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sdmem {

/// Malformed configuration; the message names the line and key.
struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"model", {"r", "K_c", "alpha", "dimension"}},
        {"delay", {"form", "tau0", "c0", "c1", "tau_min", "tau_max", "L_tau"}},
        {"kernel", {"variant", "order", "rate", "horizon", "tail_tol", "samples"}},
        {"history",
         {"form", "value", "coefficients", "amplitude", "frequency", "phase", "offset", "times", "values",
          "extension"}},
        {"solve",
         {"h", "t_end", "memory_mode", "blowup_threshold", "within_step_policy", "quadrature_nodes", "history_panel"}},
        {"lipschitz", {"L_F", "L_x", "R", "C_K", "safety"}},
        {"verify", {"T", "grid_n", "tol", "max_iter", "pass_tol"}},
        {"sweep", {"beta_min", "beta_max", "beta_count", "alpha_min", "alpha_max", "alpha_count", "parallel"}},
        {"scan",
         {"alpha_step", "alpha_halfwidth", "t_sim", "h", "transient_fraction", "amp_tol", "onset_tolerance",
          "simulate"}},
    };
    return schema;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parsed key-value document with line numbers kept for diagnostics.
class ConfigDocument {
public:
    struct Entry {
        std::string value;
        int line = 0;  ///< 0 for values set by override
    };

    static ConfigDocument parse(const std::string& text, const std::string& source = "<config>") {
        ConfigDocument doc;
        doc.source_ = source;
        std::istringstream in(text);
        std::string raw, section;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            const auto cut = raw.find_first_of("#;");
            const std::string line = detail::trim(cut == std::string::npos ? raw : raw.substr(0, cut));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') doc.fail(line_no, "unterminated section header '" + line + "'");
                section = detail::trim(line.substr(1, line.size() - 2));
                if (!detail::config_schema().count(section)) doc.fail(line_no, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) doc.fail(line_no, "expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (section.empty()) doc.fail(line_no, "key '" + key + "' outside any section");
            if (!detail::config_schema().at(section).count(key))
                doc.fail(line_no, "unknown key '" + key + "' in [" + section + "]");
            if (doc.entries_[section].count(key)) doc.fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
            doc.entries_[section][key] = {value, line_no};
        }
        return doc;
    }

    static ConfigDocument load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read model file " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path);
    }

    /// Applies `section.key=value`; the key must exist in the schema.
    void set(const std::string& assignment) {
        const auto eq = assignment.find('=');
        const auto dot = assignment.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override '" + assignment + "' must look like section.key=value");
        const std::string section = detail::trim(assignment.substr(0, dot));
        const std::string key = detail::trim(assignment.substr(dot + 1, eq - dot - 1));
        const auto sec = detail::config_schema().find(section);
        if (sec == detail::config_schema().end() || !sec->second.count(key))
            throw ConfigError("override references unknown key '" + section + "." + key + "'");
        entries_[section][key] = {detail::trim(assignment.substr(eq + 1)), 0};
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = entries_.find(section);
        return s != entries_.end() && s->second.count(key);
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        return has(section, key) ? entries_.at(section).at(key).value : fallback;
    }

    double number(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return to_number(section, key, entries_.at(section).at(key).value);
    }

    double required(const std::string& section, const std::string& key) const {
        if (!has(section, key)) throw ConfigError(source_ + ": missing required key '" + key + "' in [" + section + "]");
        return number(section, key, 0.0);
    }

    std::optional<double> optional_number(const std::string& section, const std::string& key) const {
        if (!has(section, key)) return std::nullopt;
        return number(section, key, 0.0);
    }

    long integer(const std::string& section, const std::string& key, long fallback) const {
        if (!has(section, key)) return fallback;
        const double v = number(section, key, 0.0);
        if (v != std::floor(v)) fail_key(section, key, "expected an integer");
        return static_cast<long>(v);
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = entries_.at(section).at(key).value;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail_key(section, key, "expected true/false");
        return false;
    }

    std::vector<double> list(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        if (!has(section, key)) return out;
        std::stringstream ss(entries_.at(section).at(key).value);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_number(section, key, detail::trim(item)));
        return out;
    }

    /// Fails with the line of the key unless value is one of `allowed`.
    std::string choice(const std::string& section, const std::string& key, const std::string& fallback,
                       std::initializer_list<const char*> allowed) const {
        const std::string v = text(section, key, fallback);
        for (const char* a : allowed)
            if (v == a) return v;
        fail_key(section, key, "unexpected value '" + v + "'");
        return v;
    }

    const std::string& source() const { return source_; }

private:
    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    [[noreturn]] void fail_key(const std::string& section, const std::string& key, const std::string& msg) const {
        const int line = has(section, key) ? entries_.at(section).at(key).line : 0;
        const std::string where = line ? ":" + std::to_string(line) : std::string(" (override)");
        throw ConfigError(source_ + where + ": [" + section + "] " + key + ": " + msg);
    }

    double to_number(const std::string& section, const std::string& key, const std::string& s) const {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
            fail_key(section, key, "expected a number, got '" + s + "'");
        return v;
    }

    std::string source_;
    std::map<std::string, std::map<std::string, Entry>> entries_;
};

struct ParsedConfig {
    ConfigDocument document;
    ModelSpec model;
    InitialHistory history;
    SolveConfig solve;
    ValidationReport validation;
};

namespace detail {

inline DelaySpec delay_from(const ConfigDocument& d) {
    const std::string form = d.choice("delay", "form", "constant", {"constant", "affine-clamped"});
    if (form == "constant") {
        const double tau0 = d.number("delay", "tau0", 1.0);
        return DelaySpec(DelaySpec::Constant{tau0}, d.number("delay", "tau_min", tau0), d.number("delay", "tau_max", tau0),
                         d.number("delay", "L_tau", 0.0));
    }
    const double c1 = d.required("delay", "c1");
    return DelaySpec(DelaySpec::AffineClamped{d.required("delay", "c0"), c1}, d.required("delay", "tau_min"),
                     d.required("delay", "tau_max"), d.number("delay", "L_tau", std::abs(c1)));
}

inline std::optional<KernelSpec> kernel_from(const ConfigDocument& d, double tau_max) {
    const std::string variant = d.choice("kernel", "variant", "gamma", {"gamma", "tabulated", "none"});
    if (variant == "none") return std::nullopt;
    const double tail = d.number("kernel", "tail_tol", 1e-10);
    if (variant == "gamma") {
        return KernelSpec::gamma(static_cast<int>(d.integer("kernel", "order", 2)), d.number("kernel", "rate", 1.0),
                                 d.optional_number("kernel", "horizon"), tail);
    }
    auto samples = d.list("kernel", "samples");
    if (samples.size() < 2) throw ConfigError(d.source() + ": [kernel] samples needs at least two values");
    return KernelSpec(KernelSpec::Tabulated{std::move(samples), d.number("kernel", "horizon", tau_max)}, std::nullopt,
                      tail);
}

inline InitialHistory history_from(const ConfigDocument& d, double tau_max) {
    const std::string form =
        d.choice("history", "form", "constant", {"constant", "polynomial", "sinusoid", "tabulated"});
    const auto ext = d.choice("history", "extension", "constant-left-endpoint",
                              {"constant-left-endpoint", "analytic-if-available"}) == "analytic-if-available"
                         ? ExtensionPolicy::analytic_if_available
                         : ExtensionPolicy::constant_left_endpoint;
    InitialHistory::Form f;
    if (form == "constant") {
        f = InitialHistory::Constant{{d.number("history", "value", 0.5)}};
    } else if (form == "polynomial") {
        InitialHistory::Polynomial p;
        for (double c : d.list("history", "coefficients")) p.coefficients.push_back({c});
        if (p.coefficients.empty()) throw ConfigError(d.source() + ": [history] polynomial needs coefficients");
        f = std::move(p);
    } else if (form == "sinusoid") {
        f = InitialHistory::Sinusoid{{d.number("history", "amplitude", 0.0)},
                                     {d.number("history", "frequency", 1.0)},
                                     {d.number("history", "phase", 0.0)},
                                     {d.number("history", "offset", 0.0)}};
    } else {
        InitialHistory::Tabulated t;
        t.times = d.list("history", "times");
        for (double v : d.list("history", "values")) t.values.push_back({v});
        f = std::move(t);
    }
    try {
        return InitialHistory(std::move(f), tau_max, ext);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(d.source() + ": [history] " + e.what());
    }
}

inline SolveConfig solve_from(const ConfigDocument& d) {
    SolveConfig c;
    c.h = d.number("solve", "h", 1e-3);
    c.t_end = d.number("solve", "t_end", 20.0);
    c.memory_mode = d.choice("solve", "memory_mode", "chain", {"chain", "quadrature"}) == "chain"
                        ? MemoryMode::chain
                        : MemoryMode::quadrature;
    c.blowup_threshold = d.number("solve", "blowup_threshold", 1e8);
    c.within_step = d.choice("solve", "within_step_policy", "reject", {"reject", "fixed-point-iterate"}) == "reject"
                        ? WithinStepPolicy::reject
                        : WithinStepPolicy::fixed_point_iterate;
    c.quadrature.nodes_per_step = static_cast<int>(d.integer("solve", "quadrature_nodes", 8));
    c.quadrature.history_panel = d.number("solve", "history_panel", 0.05);
    return c;
}

}  // namespace detail

/// Builds the model, history, and solve settings from a parsed document and
/// runs validation. Failing checks throw ValidationError naming the
/// assumption unless `force` is set.
inline ParsedConfig build_config(ConfigDocument doc, bool force = false, std::uint64_t seed = 0) {
    const auto& d = doc;
    const long dim = d.integer("model", "dimension", 1);
    if (dim != 1) throw ConfigError(d.source() + ": [model] dimension: only the scalar logistic model is configurable");
    LogisticMemoryModel lm{d.number("model", "r", 1.0), d.number("model", "K_c", 1.0), d.number("model", "alpha", 0.0)};
    DelaySpec delay = detail::delay_from(d);
    const double tau_max = delay.tau_max() > 0.0 && std::isfinite(delay.tau_max()) ? delay.tau_max() : 1.0;
    std::optional<KernelSpec> kernel;
    try {
        kernel = detail::kernel_from(d, tau_max);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(d.source() + ": [kernel] " + e.what());
    }
    ModelSpec model = ModelSpec::logistic(lm, std::move(delay), std::move(kernel));
    if (d.has("lipschitz", "L_F") || d.has("lipschitz", "L_x") || d.has("lipschitz", "R"))
        model.lipschitz = LipschitzData{d.optional_number("lipschitz", "L_F"), d.number("lipschitz", "L_x", 0.0),
                                        d.optional_number("lipschitz", "R")};

    InitialHistory history = detail::history_from(d, tau_max);
    SolveConfig solve = detail::solve_from(d);

    ValidationReport rep = validate(model, seed);
    for (auto& c : validate_history(history).checks) rep.checks.push_back(std::move(c));
    if (!force && !rep.passed()) throw ValidationError(d.source() + ": validation failed: " + rep.first_failure());
    return {std::move(doc), std::move(model), std::move(history), solve, std::move(rep)};
}

/// Reads a model file, applies `section.key=value` overrides, and validates.
inline ParsedConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {},
                                 bool force = false, std::uint64_t seed = 0) {
    ConfigDocument doc = ConfigDocument::load(path);
    for (const auto& o : overrides) doc.set(o);
    return build_config(std::move(doc), force, seed);
}

}  // namespace sdmem
