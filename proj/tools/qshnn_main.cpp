// Command-line front end: training runs, the benchmark protocol, trajectory
// integration of saved weights, block projection and a quick invariant check.
//
// Exit codes: 0 success, 1 at least one run/check failed, 2 invalid config.

#include "qshnn/dynamics.hpp"
#include "qshnn/harness.hpp"
#include "qshnn/learning.hpp"
#include "qshnn/manifold.hpp"
#include "qshnn/quaternion.hpp"
#include "qshnn/rng.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace qshnn;

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
    int neurons = 0;
    double eta = 0.0;
    int period = 0;
    int max_iters = -1;
    double tau = 0.0;
    int jobs = 0;
    std::string out;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Experiment config JSON file");
    cmd->add_option("--seed", flags.seed, "Base seed for target/weight streams")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--mode", flags.mode, "qshnn | shnn | both");
    cmd->add_option("--neurons", flags.neurons, "Quaternion neuron count n");
    cmd->add_option("--eta", flags.eta, "Initial learning rate");
    cmd->add_option("--period", flags.period, "Projection period P");
    cmd->add_option("--max-iters", flags.max_iters, "Iteration cap (0 = mode default)");
    cmd->add_option("--tau", flags.tau, "Convergence tolerance");
    cmd->add_option("--jobs", flags.jobs, "Parallel runs in a batch");
    cmd->add_option("--out", flags.out, "Output directory");
}

/// Config file first, then flags on top; flags win.
ExperimentSpec build_spec(const CommonFlags& flags) {
    ExperimentSpec spec;
    if (!flags.config_path.empty()) {
        std::ifstream is(flags.config_path);
        if (!is) {
            throw std::invalid_argument("cannot read config file: " + flags.config_path);
        }
        std::stringstream buffer;
        buffer << is.rdbuf();
        spec = experiment_spec_from_json(buffer.str());
    }
    if (flags.seed_set) {
        spec.seeds = {flags.seed};
    }
    if (!flags.mode.empty()) {
        if (flags.mode == "qshnn") {
            spec.mode = RunMode::QSHNN;
        } else if (flags.mode == "shnn") {
            spec.mode = RunMode::SHNN;
        } else if (flags.mode == "both") {
            spec.mode = RunMode::Both;
        } else {
            throw std::invalid_argument("--mode must be qshnn, shnn or both");
        }
    }
    if (flags.neurons > 0) {
        spec.neurons = flags.neurons;
    }
    if (flags.eta > 0.0) {
        spec.train.eta = flags.eta;
    }
    if (flags.period > 0) {
        spec.train.projection_period = flags.period;
    }
    if (flags.max_iters >= 0) {
        spec.train.max_iters = flags.max_iters;
    }
    if (flags.tau > 0.0) {
        spec.train.tau = flags.tau;
    }
    if (flags.jobs > 0) {
        spec.jobs = flags.jobs;
    }
    if (!flags.out.empty()) {
        spec.output_dir = flags.out;
    }
    return spec;
}

void print_summary(const BenchmarkSummary& summary) {
    std::cout << "runs: " << summary.runs.size() << "  accuracy_rate: " << summary.accuracy_rate
              << "  mean_iterations: " << summary.mean_iterations
              << "  equilibrium_error_max: " << summary.equilibrium_error_max << "\n";
    for (const auto& run : summary.runs) {
        std::cout << "  seed " << run.seed << " [" << (run.mode == TrainMode::QSHNN ? "qshnn" : "shnn")
                  << "] " << run.status << " iters=" << run.iterations
                  << " loss=" << run.final_loss << " quat=" << run.quaternionicity << "\n";
    }
}

int cmd_train(const CommonFlags& flags) {
    ExperimentSpec spec = build_spec(flags);
    spec.num_target_sets = 1;
    if (spec.mode == RunMode::Both) {
        spec.mode = RunMode::QSHNN;
    }
    const BenchmarkSummary summary = run_benchmark(spec);
    print_summary(summary);
    return summary.all_ok() ? 0 : 1;
}

int cmd_bench(const CommonFlags& flags, int target_sets) {
    ExperimentSpec spec = build_spec(flags);
    if (target_sets > 0) {
        spec.num_target_sets = target_sets;
    }
    const BenchmarkSummary summary = run_benchmark(spec);
    print_summary(summary);
    return summary.all_ok() ? 0 : 1;
}

int cmd_dynamics(const CommonFlags& flags, const std::string& weights_path,
                 const std::string& state_csv, int random_starts, double t_end, double dt) {
    const ExperimentSpec spec = build_spec(flags);
    const Mat w = load_weights_json(weights_path);
    if (w.rows() % 4 != 0) {
        throw std::invalid_argument("weights dimension must be a multiple of 4");
    }

    NetworkConfig cfg = spec.dynamics;
    cfg.neurons = static_cast<int>(w.rows() / 4);
    if (cfg.bias.size() != cfg.dim()) {
        const double bias_value = cfg.bias.size() == 1 ? cfg.bias[0] : 0.15;
        cfg.bias = Vec::Constant(cfg.dim(), bias_value);
    }

    std::vector<Vec> starts;
    if (!state_csv.empty()) {
        Vec q0(cfg.dim());
        std::stringstream ss(state_csv);
        std::string tok;
        Eigen::Index idx = 0;
        while (std::getline(ss, tok, ',')) {
            if (idx >= q0.size()) {
                throw std::invalid_argument("--state has more than 4n components");
            }
            q0[idx++] = std::stod(tok);
        }
        if (idx != q0.size()) {
            throw std::invalid_argument("--state needs exactly 4n components");
        }
        starts.push_back(q0);
    }
    SplitMix64 rng(flags.seed_set ? flags.seed : 0x9d1db8a5u);
    for (int r = 0; r < random_starts; ++r) {
        Vec q0(cfg.dim());
        for (Eigen::Index c = 0; c < q0.size(); ++c) {
            q0[c] = rng.uniform_symmetric();
        }
        starts.push_back(q0);
    }
    if (starts.empty()) {
        throw std::invalid_argument("dynamics: give --state or --random-starts");
    }

    const std::string out_dir = spec.output_dir;
    std::filesystem::create_directories(out_dir);
    TrainingReport empty_report;
    empty_report.final_weights = w;
    empty_report.final_stability = check_constraints(w, cfg);
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const Trajectory traj = integrate_rk4(starts[s], w, cfg, dt, t_end);
        empty_report.final_equilibrium = traj.states.back();
        const std::string dir = out_dir + "/trajectory_" + std::to_string(s);
        export_artifacts(empty_report, traj, w, cfg, dir);
        std::cout << "trajectory " << s << ": " << traj.size() << " samples -> " << dir << "\n";
    }
    return 0;
}

int cmd_project(const std::string& weights_path, const std::string& out_path) {
    const Mat w = load_weights_json(weights_path);
    const double before = quaternionicity_residual(w);
    const Mat projected = project_weight_matrix(w);
    const double after = quaternionicity_residual(projected);
    std::cout << "residual before: " << before << "\nresidual after:  " << after << "\n";
    if (!out_path.empty()) {
        NetworkConfig cfg = NetworkConfig::with_constant_bias(static_cast<int>(w.rows() / 4));
        TrainingReport report;
        report.final_weights = projected;
        report.final_equilibrium = Vec::Zero(w.rows());
        report.final_stability = check_constraints(projected, cfg);
        export_artifacts(report, Trajectory{}, projected, cfg, out_path);
        std::cout << "projected weights written under " << out_path << "\n";
    }
    return 0;
}

int check(bool ok, const std::string& name, int& failures) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) {
        ++failures;
    }
    return failures;
}

/// Quick self-test of the library invariants (a light-weight version of the
/// test suite, handy on fresh installs).
int cmd_validate() {
    int failures = 0;
    SplitMix64 rng(42);
    const auto rand_q = [&rng]() {
        return Quaternion{rng.uniform_symmetric(), rng.uniform_symmetric(),
                          rng.uniform_symmetric(), rng.uniform_symmetric()};
    };

    {
        const Quaternion ij = Quaternion::i() * Quaternion::j();
        bool ok = ij == Quaternion::k();
        for (int t = 0; t < 200 && ok; ++t) {
            const Quaternion a = rand_q();
            const Quaternion b = rand_q();
            ok = (left_mult_matrix(a) * b.to_vec() - (a * b).to_vec()).norm() < 1e-13 &&
                 (left_mult_matrix(a * b) - left_mult_matrix(a) * left_mult_matrix(b)).norm() < 1e-12;
        }
        check(ok, "quaternion algebra / left-multiplication homomorphism", failures);
    }
    {
        bool ok = true;
        for (int t = 0; t < 200 && ok; ++t) {
            Matrix4 m;
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    m(r, c) = rng.uniform_symmetric();
                }
            }
            const auto [proj, coeff] = project_block(m);
            const auto [proj2, coeff2] = project_block(proj);
            ok = (proj - proj2).norm() < 1e-13 &&
                 (m - proj).norm() <= (m - left_mult_matrix(rand_q())).norm() + 1e-12;
        }
        check(ok, "Frobenius projection idempotence/optimality", failures);
    }
    {
        NetworkConfig cfg = NetworkConfig::with_constant_bias(1, 0.0);
        cfg.activation = Activation::Identity;
        const Quaternion omega{0.2, 0.4, -0.3, 0.1};
        const Quaternion q0{0.5, -0.2, 0.3, 0.7};
        const Mat w = left_mult_matrix(omega);
        const Trajectory traj = integrate_rk4(q0.to_vec(), w, cfg, 0.01, 5.0);
        double max_err = 0.0;
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const Quaternion ref =
                closed_form_linear(omega, Quaternion::zero(), q0, cfg, traj.times[k]);
            max_err = std::max(max_err, (traj.states[k] - ref.to_vec()).norm());
        }
        check(max_err < 1e-8, "RK4 against closed-form linear response", failures);
    }
    {
        NetworkConfig cfg = NetworkConfig::with_constant_bias(1);
        const Mat w = initial_weights(cfg, 7, 1e-12);
        const Vec q_star = find_equilibrium(w, cfg, Vec::Zero(4), 1e-11, 100.0);
        const Vec target = 0.9 * q_star;
        const Mat grad = weight_gradient(w, q_star, target, cfg);
        // central differences through the equilibrium pipeline
        double worst = 0.0;
        for (Eigen::Index i = 0; i < 4; ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                const double h = 1e-5;
                Mat wp = w, wm = w;
                wp(i, j) += h;
                wm(i, j) -= h;
                const double lp =
                    0.5 * (find_equilibrium(wp, cfg, q_star, 1e-12, 100.0) - target).squaredNorm();
                const double lm =
                    0.5 * (find_equilibrium(wm, cfg, q_star, 1e-12, 100.0) - target).squaredNorm();
                worst = std::max(worst, std::abs((lp - lm) / (2 * h) - grad(i, j)));
            }
        }
        check(worst < 1e-4, "equilibrium-sensitivity gradient against finite differences",
              failures);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quaternion-valued supervised Hopfield-structured network toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    int target_sets = 0;
    std::string weights_path;
    std::string state_csv;
    int random_starts = 0;
    double t_end = 40.0;
    double dt = 0.01;
    std::string project_out;

    CLI::App* train_cmd = app.add_subcommand("train", "Train one network on one seeded target set");
    add_common_flags(train_cmd, flags);

    CLI::App* bench_cmd =
        app.add_subcommand("bench", "Run the benchmark protocol over many target sets");
    add_common_flags(bench_cmd, flags);
    bench_cmd->add_option("--target-sets", target_sets, "Number of seeded target sets");

    CLI::App* dyn_cmd = app.add_subcommand("dynamics", "Integrate saved weights from given states");
    add_common_flags(dyn_cmd, flags);
    dyn_cmd->add_option("--weights", weights_path, "weights.json produced by train/bench")
        ->required();
    dyn_cmd->add_option("--state", state_csv, "Comma-separated 4n initial state");
    dyn_cmd->add_option("--random-starts", random_starts, "Number of random initial states");
    dyn_cmd->add_option("--t-end", t_end, "Integration horizon");
    dyn_cmd->add_option("--dt", dt, "Integrator step");

    CLI::App* project_cmd =
        app.add_subcommand("project", "Project saved weights block-wise and report the residual");
    project_cmd->add_option("--weights", weights_path, "weights.json to project")->required();
    project_cmd->add_option("--out", project_out, "Directory for the projected weights");

    CLI::App* validate_cmd = app.add_subcommand("validate", "Run the library invariant checks");
    (void)validate_cmd;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(flags);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(flags, target_sets);
        }
        if (dyn_cmd->parsed()) {
            return cmd_dynamics(flags, weights_path, state_csv, random_starts, t_end, dt);
        }
        if (project_cmd->parsed()) {
            return cmd_project(weights_path, project_out);
        }
        if (validate_cmd->parsed()) {
            return cmd_validate();
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
