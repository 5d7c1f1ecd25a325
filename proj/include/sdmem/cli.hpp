#pragma once

// Command dispatch for the sdmem tool. Each command reads one model file and
// writes its artifacts into the output directory.
//
// Exit codes: 0 success, 2 validation or parse failure, 3 numerical failure
// (non-convergence, blow-up, delay leaving its bounds), 4 I/O error.
// Every failure is also recorded in errors.csv.

#include <sdmem/analysis.hpp>
#include <sdmem/config.hpp>
#include <sdmem/io.hpp>
#include <sdmem/memory.hpp>
#include <sdmem/solver.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace sdmem {

enum class Command { simulate, analyze, hopf, sweep, certify, verify, audit };

inline const char* to_string(Command c) {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::analyze: return "analyze";
        case Command::hopf: return "hopf";
        case Command::sweep: return "sweep";
        case Command::certify: return "certify";
        case Command::verify: return "verify";
        case Command::audit: return "audit";
    }
    return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
    for (Command c : {Command::simulate, Command::analyze, Command::hopf, Command::sweep, Command::certify,
                      Command::verify, Command::audit})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

struct RunConfig {
    Command command = Command::simulate;
    std::string model_path;
    std::vector<std::string> overrides;  ///< section.key=value
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    bool force = false;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int numerical = 3;
inline constexpr int io = 4;
}  // namespace exit_code

namespace detail {

/// Failure carrying its exit code; used for outcomes that are not exceptions elsewhere.
struct RunFailure : std::runtime_error {
    RunFailure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

struct Output {
    std::filesystem::path dir;
    void write(const std::string& name, const std::string& content) const {
        try {
            write_file((dir / name).string(), content);
        } catch (const std::ios_base::failure& e) {
            throw IoError(e.what());
        }
    }
};

/// Benchmark parameters (r, K_c, alpha, beta, kappa) of a logistic model with an order-2 Gamma kernel.
struct Benchmark {
    double r, K_c, alpha, beta, kappa;
};

inline Benchmark benchmark_of(const ParsedConfig& pc) {
    const auto* lm = pc.model.logistic_model();
    const auto* g = pc.model.kernel ? pc.model.kernel->as_gamma() : nullptr;
    if (!lm || !g || g->order != 2)
        throw UnsupportedError("stability analysis needs the logistic model with a Gamma kernel of order 2");
    return {lm->r, lm->K_c, lm->alpha, g->rate, kernel_mass(*pc.model.kernel)};
}

inline std::vector<double> linspace(double lo, double hi, long n) {
    if (n < 1) throw ConfigError("grid count must be at least 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

inline void cmd_simulate(const ParsedConfig& pc, const Output& out) {
    const auto res = integrate(pc.model, pc.history, pc.solve);
    out.write("trajectory.csv", trajectory_csv(res.trajectory).str());
    if (res.blowup)
        throw RunFailure(exit_code::numerical, "blow-up: |x| exceeded " + format_shortest(pc.solve.blowup_threshold) +
                                                   " before t = " + format_shortest(res.t_final));
}

inline void cmd_analyze(const ParsedConfig& pc, const Output& out) {
    const Benchmark b = benchmark_of(pc);
    CsvTable csv({"equilibrium", "x_star", "linearization", "cubic", "A", "B", "C", "root1_re", "root1_im", "root2_re",
                  "root2_im", "root3_re", "root3_im", "max_re", "rh_verdict"});
    std::string txt = "equilibria of r x (1 - x/K_c) - alpha kappa x = 0 with r = " + format_shortest(b.r) +
                      ", K_c = " + format_shortest(b.K_c) + ", alpha = " + format_shortest(b.alpha) +
                      ", beta = " + format_shortest(b.beta) + ", kappa = " + format_shortest(b.kappa) + "\n";

    auto emit = [&](std::size_t idx, double xs, const std::string& lin_name, double a_inst,
                    const CharacteristicCubic& c) {
        const auto roots = cubic_roots(c);
        const auto rh = routh_hurwitz(c);
        std::vector<std::string> row{std::to_string(idx), format_double(xs), lin_name, to_string(c.source),
                                     format_double(c.A), format_double(c.B), format_double(c.C)};
        for (const auto& z : roots) {
            row.push_back(format_double(z.real()));
            row.push_back(format_double(z.imag()));
        }
        row.push_back(format_double(rh.max_real));
        row.push_back(to_string(rh.verdict));
        csv.add_row(std::move(row));
        txt += "  [" + lin_name + ", " + to_string(c.source) + " cubic]";
        if (std::isfinite(a_inst)) txt += " a = " + format_shortest(a_inst) + ";";
        txt += " lambda^3 + " + format_shortest(c.A) + " lambda^2 + " + format_shortest(c.B) + " lambda + " +
               format_shortest(c.C) + "\n    roots:";
        for (const auto& z : roots) txt += " " + format_shortest(z.real()) + (z.imag() < 0 ? " - " : " + ") +
                                           format_shortest(std::abs(z.imag())) + "i;";
        txt += "\n    Routh-Hurwitz: " + std::string(to_string(rh.verdict)) + ", max Re = " +
               format_shortest(rh.max_real) + "\n";
    };

    const auto eq = equilibria(b.r, b.K_c, b.alpha, b.kappa);
    for (std::size_t i = 0; i < eq.size(); ++i) {
        txt += "\nx*_" + std::to_string(i) + " = " + format_shortest(eq[i]) + "\n";
        const auto direct = linearize(b.r, b.K_c, b.alpha, b.kappa, eq[i], LinearizationMode::direct);
        emit(i, eq[i], "direct", direct.a_inst, characteristic_cubic(direct, b.beta));
        if (i == 0) continue;
        const auto simp = linearize(b.r, b.K_c, b.alpha, b.kappa, eq[i], LinearizationMode::reference_simplified);
        emit(i, eq[i], "reference-simplified", simp.a_inst, characteristic_cubic(simp, b.beta));
        emit(i, eq[i], "printed", std::numeric_limits<double>::quiet_NaN(), reference_cubic(b.r, b.alpha, b.beta));
    }
    if (eq.size() < 2) txt += "\nno positive equilibrium: r <= alpha kappa\n";
    out.write("analysis.csv", csv.str());
    out.write("analysis.txt", txt);
}

inline void cmd_hopf(const ParsedConfig& pc, const Output& out) {
    const Benchmark b = benchmark_of(pc);
    HopfSearchOptions search;
    search.kappa = b.kappa;
    const auto closed = hopf_closed_form(b.r, b.beta);
    const auto derived = hopf_threshold_numeric(b.r, b.K_c, b.beta, CubicSource::derived, search);
    const auto printed = hopf_threshold_numeric(b.r, b.K_c, b.beta, CubicSource::reference, search);
    CsvTable csv({"r", "beta", "closed_form_alpha", "closed_form_omega", "derived_numeric_alpha",
                  "derived_numeric_omega", "paper_cubic_status"});
    std::string status = to_string(printed.status);
    if (printed.status == HopfStatus::found) status += ":" + format_double(printed.alpha_H);
    csv.add_row({format_double(b.r), format_double(b.beta), format_double(closed.alpha_H), format_double(closed.omega_H),
                 format_double(derived.alpha_H), format_double(derived.omega_H), status});
    out.write("hopf.csv", csv.str());
}

inline void cmd_sweep(const ParsedConfig& pc, const Output& out) {
    const auto* lm = pc.model.logistic_model();
    if (!lm) throw UnsupportedError("sweep needs the logistic model");
    const auto& d = pc.document;
    const auto betas = linspace(d.number("sweep", "beta_min", 0.5), d.number("sweep", "beta_max", 2.0),
                                d.integer("sweep", "beta_count", 10));
    const auto alphas = linspace(d.number("sweep", "alpha_min", 0.05 * lm->r), d.number("sweep", "alpha_max", 0.95 * lm->r),
                                 d.integer("sweep", "alpha_count", 10));
    const auto rows = sweep(lm->r, lm->K_c, betas, alphas, d.boolean("sweep", "parallel", true));
    out.write("sweep.csv", sweep_csv(rows).str());
}

inline Certificate certificate_of(const ParsedConfig& pc) {
    const auto& d = pc.document;
    if (!pc.model.lipschitz || !pc.model.lipschitz->L_F)
        throw ConfigError(d.source() + ": certify needs [lipschitz] L_F");
    double C_K = 0.0;
    if (d.has("lipschitz", "C_K"))
        C_K = d.number("lipschitz", "C_K", 0.0);
    else if (pc.model.kernel)
        C_K = memory_lipschitz_bound(*pc.model.kernel, 0.0, pc.solve.t_end).value;
    try {
        return wellposedness_certificate(*pc.model.lipschitz->L_F, pc.model.lipschitz->L_x, pc.model.delay.lipschitz(),
                                         C_K, d.number("lipschitz", "safety", 0.9), pc.model.lipschitz->R);
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("certificate: ") + e.what());
    }
}

inline void cmd_certify(const ParsedConfig& pc, const Output& out) {
    const Certificate c = certificate_of(pc);
    const bool user_ck = pc.document.has("lipschitz", "C_K");
    std::string txt;
    txt += "L_F = " + format_shortest(c.L_F) + "\n";
    txt += "L_x = " + format_shortest(c.L_x) + "\n";
    txt += "L_tau = " + format_shortest(c.L_tau) + "\n";
    txt += "C_K = " + format_shortest(c.C_K) + (user_ck ? " (given)" : " (kernel bound)") + "\n";
    if (c.R) txt += "R = " + format_shortest(*c.R) + "\n";
    txt += "safety = " + format_shortest(c.safety) + "\n";
    txt += "C_tau = " + format_shortest(c.C_tau) + "\n";
    txt += "L = " + format_shortest(c.L) + "\n";
    txt += "T0 = " + format_shortest(c.T0) + "\n";
    txt += "L*T0 = " + format_shortest(c.L * c.T0) + " < 1\n";
    out.write("certificate.txt", txt);
}

inline void cmd_verify(const ParsedConfig& pc, const Output& out) {
    const auto& d = pc.document;
    CrossValidationOptions opts;
    opts.picard.grid_n = static_cast<std::size_t>(d.integer("verify", "grid_n", 1000));
    opts.picard.tol = d.number("verify", "tol", 1e-12);
    opts.picard.max_iter = static_cast<int>(d.integer("verify", "max_iter", 100));
    opts.picard.quadrature = pc.solve.quadrature;
    opts.pass_tol = d.number("verify", "pass_tol", 1e-5);
    if (d.has("solve", "h")) opts.h = pc.solve.h;
    const double T = d.number("verify", "T", 0.5);
    const auto cv = cross_validate(pc.model, pc.history, T, opts);

    double max_ratio = 0.0;
    for (double q : cv.contraction_ratios) max_ratio = std::max(max_ratio, q);
    CsvTable csv({"T", "h", "grid_n", "picard_iterations", "max_contraction_ratio", "sup_diff", "pass_tol", "pass"});
    csv.add_row({format_double(T), format_double(cv.h), std::to_string(opts.picard.grid_n),
                 std::to_string(cv.picard_iterations), format_double(cv.contraction_ratios.empty() ? NAN : max_ratio),
                 format_double(cv.sup_diff), format_double(opts.pass_tol), cv.pass ? "true" : "false"});
    out.write("verify.csv", csv.str());

    std::string txt = "Picard iteration vs Runge-Kutta on [0, " + format_shortest(T) + "]\n";
    txt += "  Picard iterations: " + std::to_string(cv.picard_iterations) + "\n";
    txt += "  contraction ratios:";
    for (double q : cv.contraction_ratios) txt += " " + format_double(q, 6);
    txt += "\n  RK step: " + format_shortest(cv.h) + "\n";
    txt += "  sup |x_picard - x_rk| = " + format_double(cv.sup_diff, 6) + " (tolerance " + format_shortest(opts.pass_tol) +
           ")\n";
    if (pc.model.lipschitz && pc.model.lipschitz->L_F) {
        const Certificate c = certificate_of(pc);
        txt += "  certificate: L = " + format_shortest(c.L) + ", T0 = " + format_shortest(c.T0) +
               ", ratio bound L*T = " + format_shortest(c.L * T) + "\n";
        if (T > c.T0) txt += "  warning: T exceeds T0\n";
    }
    txt += std::string("  result: ") + (cv.pass ? "pass" : "FAIL") + "\n";
    out.write("verify.txt", txt);
    if (!cv.pass)
        throw RunFailure(exit_code::numerical, "Picard and Runge-Kutta solutions differ by " + format_double(cv.sup_diff, 6));
}

inline void cmd_audit(const ParsedConfig& pc, const Output& out) {
    const Benchmark b = benchmark_of(pc);
    const auto& d = pc.document;
    AuditOptions opts;
    opts.simulate = d.boolean("scan", "simulate", true);
    opts.grid_step = d.number("scan", "alpha_step", opts.grid_step);
    opts.grid_halfwidth = d.number("scan", "alpha_halfwidth", opts.grid_halfwidth);
    opts.onset_tolerance = d.number("scan", "onset_tolerance", opts.onset_tolerance);
    opts.onset.sim.t_end = d.number("scan", "t_sim", opts.onset.sim.t_end);
    opts.onset.sim.h = d.number("scan", "h", opts.onset.sim.h);
    opts.onset.transient_fraction = d.number("scan", "transient_fraction", opts.onset.transient_fraction);
    opts.onset.amp_tol = d.optional_number("scan", "amp_tol");
    if (!(opts.grid_step > 0.0)) throw ConfigError(d.source() + ": [scan] alpha_step must be positive");
    const auto rep = audit_reference_formulas(b.r, b.K_c, b.beta, opts);
    out.write("audit.csv", rep.csv().str());
    out.write("audit.txt", rep.text);
}

inline std::string csv_cell(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
    return s;
}

}  // namespace detail

/// Runs one command; returns the process exit code. Diagnostics go to `log`.
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir.empty() ? "." : cfg.output_dir);
    int code = exit_code::ok;
    std::string category, message;
    try {
        try {
            fs::create_directories(dir);
            fs::remove(dir / "errors.csv");
        } catch (const fs::filesystem_error& e) {
            throw IoError(e.what());
        }
        const ParsedConfig pc = parse_config(cfg.model_path, cfg.overrides, cfg.force, cfg.seed);
        if (!pc.validation.passed())
            log << "warning: continuing despite failed validation (--force): " << pc.validation.first_failure() << "\n";
        const detail::Output out{dir};
        switch (cfg.command) {
            case Command::simulate: detail::cmd_simulate(pc, out); break;
            case Command::analyze: detail::cmd_analyze(pc, out); break;
            case Command::hopf: detail::cmd_hopf(pc, out); break;
            case Command::sweep: detail::cmd_sweep(pc, out); break;
            case Command::certify: detail::cmd_certify(pc, out); break;
            case Command::verify: detail::cmd_verify(pc, out); break;
            case Command::audit: detail::cmd_audit(pc, out); break;
        }
        return exit_code::ok;
    } catch (const detail::RunFailure& e) {
        code = e.code, category = "numerical", message = e.what();
    } catch (const IoError& e) {
        code = exit_code::io, category = "io", message = e.what();
    } catch (const std::ios_base::failure& e) {
        code = exit_code::io, category = "io", message = e.what();
    } catch (const ValidationError& e) {
        code = exit_code::validation, category = "validation", message = e.what();
    } catch (const UnsupportedError& e) {
        code = exit_code::validation, category = "validation", message = e.what();
    } catch (const std::invalid_argument& e) {
        code = exit_code::validation, category = "validation", message = e.what();
    } catch (const DomainError& e) {
        code = exit_code::numerical, category = "numerical", message = e.what();
    } catch (const NumericalError& e) {
        code = exit_code::numerical, category = "numerical", message = e.what();
    } catch (const std::exception& e) {
        code = exit_code::numerical, category = "numerical", message = e.what();
    }
    log << "error (" << category << "): " << message << "\n";
    CsvTable errors({"exit_code", "category", "command", "message"});
    errors.add_row({std::to_string(code), category, to_string(cfg.command), detail::csv_cell(message)});
    try {
        write_file((dir / "errors.csv").string(), errors.str());
    } catch (const std::exception& e) {
        log << "error (io): " << e.what() << "\n";
        if (code == exit_code::ok) code = exit_code::io;
    }
    return code;
}

}  // namespace sdmem
