#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace sdmem;
namespace fs = std::filesystem;

namespace {

const std::string kBenchmark = R"(# minimal benchmark
[model]
r = 1
K_c = 1
alpha = 0.7

[kernel]
variant = gamma
order = 2
rate = 1

[history]
form = constant
value = 0.3
)";

fs::path write_model(const std::string& name, const std::string& text) {
    const auto dir = oracle::scratch_dir("model_" + name);
    const auto path = dir / "model.ini";
    write_file(path.string(), text);
    return path;
}

int run_cmd(Command c, const fs::path& model, const fs::path& out, std::vector<std::string> overrides = {}) {
    RunConfig cfg;
    cfg.command = c;
    cfg.model_path = model.string();
    cfg.output_dir = out.string();
    cfg.overrides = std::move(overrides);
    std::ostringstream log;
    return run(cfg, log);
}

/// Splits CSV text into rows of cells.
std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(oracle::slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

void expect_rectangular(const fs::path& p) {
    const auto rows = read_csv(p);
    ASSERT_FALSE(rows.empty()) << p;
    for (const auto& r : rows) ASSERT_EQ(r.size(), rows.front().size()) << p;
}

}  // namespace

TEST(Config, MinimalBenchmark) {
    const auto pc = parse_config(write_model("minimal", kBenchmark).string());
    const auto* lm = pc.model.logistic_model();
    ASSERT_NE(lm, nullptr);
    EXPECT_EQ(lm->alpha, 0.7);
    EXPECT_EQ(pc.model.kernel->as_gamma()->order, 2);
    EXPECT_EQ(pc.history(-0.5)[0], 0.3);
    EXPECT_TRUE(pc.validation.passed());
    EXPECT_EQ(pc.solve.memory_mode, MemoryMode::chain);
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
    const auto path = write_model("unknown", "[model]\nr = 1\ngamma = 2\n");
    try {
        parse_config(path.string());
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("'gamma'"), std::string::npos) << msg;
        EXPECT_NE(msg.find(":3:"), std::string::npos) << msg;
    }
}

TEST(Config, ZeroTauMinNamesA1) {
    const auto path = write_model("tau0", kBenchmark + "[delay]\nform = constant\ntau0 = 1\ntau_min = 0\n");
    try {
        parse_config(path.string());
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("(A1)"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(parse_config(path.string(), {}, true));
}

TEST(Config, MalformedInput) {
    EXPECT_THROW(parse_config(write_model("nosec", "r = 1\n").string()), ConfigError);
    EXPECT_THROW(parse_config(write_model("badsec", "[nope]\n").string()), ConfigError);
    EXPECT_THROW(parse_config(write_model("badnum", "[model]\nr = 1x\n").string()), ConfigError);
    EXPECT_THROW(parse_config(write_model("dup", "[model]\nr = 1\nr = 2\n").string()), ConfigError);
    EXPECT_THROW(parse_config(write_model("enum", kBenchmark + "[solve]\nmemory_mode = magic\n").string()),
                 ConfigError);
    EXPECT_THROW(parse_config("/nonexistent/model.ini"), IoError);
}

TEST(Config, Overrides) {
    const auto path = write_model("override", kBenchmark);
    const auto pc = parse_config(path.string(), {"model.alpha=0.5", "solve.memory_mode=quadrature"});
    EXPECT_EQ(pc.model.logistic_model()->alpha, 0.5);
    EXPECT_EQ(pc.solve.memory_mode, MemoryMode::quadrature);
    EXPECT_THROW(parse_config(path.string(), {"model.gamma=1"}), ConfigError);
    EXPECT_THROW(parse_config(path.string(), {"alpha=1"}), ConfigError);
}

TEST(Config, OtherForms) {
    const std::string text = R"([model]
r = 1
K_c = 2
alpha = 0.1
[delay]
form = affine-clamped
c0 = 0.5
c1 = 0.1
tau_min = 0.3
tau_max = 1
[kernel]
variant = tabulated
samples = 0, 1, 0.5, 0
horizon = 1
[history]
form = tabulated
times = -1, -0.5, 0
values = 1, 1.5, 2
[solve]
within_step_policy = fixed-point-iterate
quadrature_nodes = 12
)";
    const auto pc = parse_config(write_model("forms", text).string());
    EXPECT_EQ(pc.model.delay.lipschitz(), 0.1);
    EXPECT_EQ(pc.model.kernel->support(), 1.0);
    EXPECT_EQ(pc.history(-0.5)[0], 1.5);
    EXPECT_EQ(pc.solve.within_step, WithinStepPolicy::fixed_point_iterate);
    EXPECT_EQ(pc.solve.quadrature.nodes_per_step, 12);
}

TEST(Run, SimulateLogisticClosedForm) {
    const auto model = write_model("sim", kBenchmark);
    const auto out = oracle::scratch_dir("sim_out");
    ASSERT_EQ(run_cmd(Command::simulate, model, out, {"model.alpha=0", "solve.t_end=1"}), exit_code::ok);
    const auto rows = read_csv(out / "trajectory.csv");
    ASSERT_EQ(rows.front(), (std::vector<std::string>{"t", "x_1", "y_1", "y_2"}));
    EXPECT_EQ(std::stod(rows.back()[0]), 1.0);
    EXPECT_NEAR(std::stod(rows.back()[1]), oracle::logistic(1.0, 1.0, 0.3, 1.0), 1e-8);
    expect_rectangular(out / "trajectory.csv");
    EXPECT_FALSE(fs::exists(out / "errors.csv"));
}

TEST(Run, HopfCsv) {
    const auto model = write_model("hopf", kBenchmark);
    const auto out = oracle::scratch_dir("hopf_out");
    ASSERT_EQ(run_cmd(Command::hopf, model, out), exit_code::ok);
    const auto rows = read_csv(out / "hopf.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"r", "beta", "closed_form_alpha", "closed_form_omega",
                                                 "derived_numeric_alpha", "derived_numeric_omega",
                                                 "paper_cubic_status"}));
    EXPECT_NEAR(std::stod(rows[1][2]), 0.6666667, 1e-7);
    EXPECT_NEAR(std::stod(rows[1][4]), 0.7034648, 1e-7);
    EXPECT_EQ(rows[1][6], "no-crossing");
}

TEST(Run, CertifyArithmetic) {
    const auto model = write_model("cert", kBenchmark + "[lipschitz]\nL_F = 1\nL_x = 0\nC_K = 1\nsafety = 0.9\n");
    const auto out = oracle::scratch_dir("cert_out");
    ASSERT_EQ(run_cmd(Command::certify, model, out), exit_code::ok);
    const std::string txt = oracle::slurp(out / "certificate.txt");
    EXPECT_NE(txt.find("\nL = 3\n"), std::string::npos) << txt;
    EXPECT_NE(txt.find("\nT0 = 0.3\n"), std::string::npos) << txt;
}

TEST(Run, CertifyUsesKernelBoundWithoutGivenCK) {
    const auto model = write_model("cert2", kBenchmark + "[lipschitz]\nL_F = 2\n");
    const auto out = oracle::scratch_dir("cert2_out");
    ASSERT_EQ(run_cmd(Command::certify, model, out), exit_code::ok);
    const std::string txt = oracle::slurp(out / "certificate.txt");
    EXPECT_NE(txt.find("C_K = 1 (kernel bound)"), std::string::npos) << txt;
    EXPECT_NE(txt.find("\nL = 6\n"), std::string::npos) << txt;
}

TEST(Run, AnalyzeSweepVerifyAuditOutputs) {
    const auto model = write_model("all", kBenchmark + "[lipschitz]\nL_F = 1\n[sweep]\nbeta_count = 3\nalpha_count = 4\n");
    const auto out = oracle::scratch_dir("all_out");
    ASSERT_EQ(run_cmd(Command::analyze, model, out), exit_code::ok);
    ASSERT_EQ(run_cmd(Command::sweep, model, out), exit_code::ok);
    ASSERT_EQ(run_cmd(Command::audit, model, out, {"scan.simulate=false"}), exit_code::ok);
    for (const char* f : {"analysis.csv", "sweep.csv", "audit.csv"}) expect_rectangular(out / f);
    EXPECT_EQ(read_csv(out / "sweep.csv").size(), 13u);
    EXPECT_EQ(read_csv(out / "analysis.csv").size(), 5u);
    EXPECT_TRUE(fs::exists(out / "analysis.txt"));
    EXPECT_TRUE(fs::exists(out / "audit.txt"));

    const auto pure = write_model("verify", R"([model]
r = 1
K_c = 1
alpha = 0.6
[kernel]
variant = gamma
horizon = 1
[history]
value = 0.2
[lipschitz]
L_F = 3
)");
    ASSERT_EQ(run_cmd(Command::verify, pure, out), exit_code::ok);
    expect_rectangular(out / "verify.csv");
    EXPECT_EQ(read_csv(out / "verify.csv")[1].back(), "true");
}

TEST(Run, Idempotent) {
    const auto model = write_model("idem", kBenchmark);
    const auto a = oracle::scratch_dir("idem_a"), b = oracle::scratch_dir("idem_b");
    for (Command c : {Command::simulate, Command::analyze, Command::hopf, Command::sweep}) {
        ASSERT_EQ(run_cmd(c, model, a, {"model.alpha=0.72"}), exit_code::ok);
        ASSERT_EQ(run_cmd(c, model, b, {"model.alpha=0.72"}), exit_code::ok);
    }
    for (const auto& entry : fs::directory_iterator(a))
        EXPECT_EQ(oracle::slurp(entry.path()), oracle::slurp(b / entry.path().filename())) << entry.path();
}

TEST(Run, ExitCodes) {
    const auto out = oracle::scratch_dir("codes");
    const auto good = write_model("codes", kBenchmark);

    // validation: bad key, failed assumption, missing certificate input
    EXPECT_EQ(run_cmd(Command::simulate, good, out, {"model.gamma=1"}), exit_code::validation);
    EXPECT_EQ(run_cmd(Command::simulate, good, out, {"delay.tau_min=0"}), exit_code::validation);
    EXPECT_EQ(run_cmd(Command::certify, good, out), exit_code::validation);
    auto errors = read_csv(out / "errors.csv");
    ASSERT_EQ(errors.size(), 2u);
    EXPECT_EQ(errors[0], (std::vector<std::string>{"exit_code", "category", "command", "message"}));
    EXPECT_EQ(errors[1][0], "2");

    // numerical: blow-up of x' = x (1 - x) from a negative history
    EXPECT_EQ(run_cmd(Command::simulate, good, out, {"model.alpha=0", "history.value=-10"}), exit_code::numerical);
    errors = read_csv(out / "errors.csv");
    EXPECT_EQ(errors[1][0], "3");
    EXPECT_EQ(errors[1][1], "numerical");
    EXPECT_TRUE(fs::exists(out / "trajectory.csv"));

    // numerical: Picard iteration cannot converge far beyond the contraction horizon
    EXPECT_EQ(run_cmd(Command::verify, good, out, {"verify.T=20", "verify.max_iter=5"}), exit_code::numerical);

    // I/O: missing model file, output path that is a regular file
    EXPECT_EQ(run_cmd(Command::simulate, out / "missing.ini", out), exit_code::io);
    EXPECT_EQ(read_csv(out / "errors.csv")[1][0], "4");
    const auto blocker = out / "blocker";
    write_file(blocker.string(), "x");
    EXPECT_EQ(run_cmd(Command::simulate, good, blocker / "sub"), exit_code::io);

    // a successful run clears a stale errors.csv
    EXPECT_EQ(run_cmd(Command::hopf, good, out), exit_code::ok);
    EXPECT_FALSE(fs::exists(out / "errors.csv"));
}
