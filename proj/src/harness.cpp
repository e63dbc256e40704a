#include "qshnn/harness.hpp"

#include "qshnn/manifold.hpp"
#include "qshnn/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qshnn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    return os;
}

void finish_out(std::ofstream& os, const fs::path& path) {
    os.flush();
    if (!os) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string mode_name(TrainMode m) { return m == TrainMode::QSHNN ? "qshnn" : "shnn"; }

std::string stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Converged: return "converged";
        case StopReason::MaxIters: return "max_iters";
        case StopReason::Divergence: return "divergence";
    }
    return "unknown";
}

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

NetworkConfig resolved_network(const ExperimentSpec& spec) {
    NetworkConfig cfg = spec.dynamics;
    cfg.neurons = spec.neurons;
    if (cfg.bias.size() != cfg.dim()) {
        const double bias_value = cfg.bias.size() == 1 ? cfg.bias[0] : 0.15;
        cfg.bias = Vec::Constant(cfg.dim(), bias_value);
    }
    return cfg;
}

json run_record_to_json(const RunRecord& r) {
    json j;
    j["seed"] = r.seed;
    j["mode"] = mode_name(r.mode);
    j["status"] = r.status;
    j["iterations"] = r.iterations;
    j["final_loss"] = r.final_loss;
    j["final_accuracy"] = r.final_accuracy;
    j["quaternionicity"] = r.quaternionicity;
    j["lambda"] = r.lambda;
    j["constraints_satisfied"] = r.constraints_satisfied;
    j["equilibrium_disagreement"] = r.equilibrium_disagreement;
    j["uniqueness_pass"] = r.uniqueness_pass;
    j["envelope_applicable"] = r.envelope_applicable;
    j["envelope_worst_ratio"] = r.envelope_worst_ratio;
    j["max_curvature"] = r.max_curvature;
    j["output_dir"] = r.output_dir;
    return j;
}

json network_config_to_json(const NetworkConfig& cfg) {
    json j;
    j["neurons"] = cfg.neurons;
    j["gamma"] = cfg.gamma;
    j["mu"] = cfg.mu;
    j["bias"] = std::vector<double>(cfg.bias.data(), cfg.bias.data() + cfg.bias.size());
    j["dt"] = cfg.integrator.dt;
    j["t_max"] = cfg.integrator.t_max;
    j["tol"] = cfg.integrator.tol;
    return j;
}

json train_config_to_json(const TrainConfig& t) {
    json j;
    j["eta"] = t.eta;
    j["eta_min"] = t.eta_min;
    j["eta_max"] = t.eta_max;
    j["projection_period"] = t.projection_period;
    j["max_iters"] = t.max_iters;
    j["tau"] = t.tau;
    j["epsilon"] = t.epsilon;
    j["loss_normalized_gradient"] = t.loss_normalized_gradient;
    return j;
}

/// One benchmark unit: a (target set, mode) pair.
struct RunPlan {
    int target_index = 0;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::QSHNN;
};

RunRecord execute_run(const ExperimentSpec& spec, const RunPlan& plan) {
    const NetworkConfig cfg = resolved_network(spec);

    RunRecord rec;
    rec.seed = plan.seed;
    rec.mode = plan.mode;
    rec.equilibrium_disagreement = -1.0;

    const fs::path run_dir =
        fs::path(spec.output_dir) / ("run_" + mode_name(plan.mode) + "_" + std::to_string(plan.seed));
    rec.output_dir = run_dir.string();

    try {
        const Vec target = spec.explicit_targets
                               ? (*spec.explicit_targets)[static_cast<std::size_t>(plan.target_index)]
                               : generate_targets(spec.neurons, plan.seed);

        TrainConfig tcfg = spec.train;
        tcfg.mode = plan.mode;
        tcfg.seed = derive_stream(plan.seed, 1);

        const TrainingReport report = train(cfg, tcfg, target);
        rec.status = stop_reason_name(report.stop_reason);
        rec.iterations = report.iterations_used;
        rec.final_loss = report.final_loss();
        rec.final_accuracy = report.final_accuracy();
        rec.quaternionicity = quaternionicity_residual(report.final_weights);
        rec.lambda = report.final_stability.lambda;
        rec.constraints_satisfied =
            report.final_stability.satisfied1 && report.final_stability.satisfied2;

        // Metric (iii): equilibrium uniqueness from random probe states.
        SplitMix64 probe_rng(derive_stream(plan.seed, 2));
        std::vector<Vec> equilibria;
        equilibria.reserve(static_cast<std::size_t>(spec.uniqueness_probes));
        bool probes_ok = true;
        for (int p = 0; p < spec.uniqueness_probes; ++p) {
            Vec start(cfg.dim());
            for (Eigen::Index c = 0; c < start.size(); ++c) {
                start[c] = probe_rng.uniform_symmetric();
            }
            try {
                equilibria.push_back(find_equilibrium(report.final_weights, cfg, start,
                                                      cfg.integrator.tol, cfg.integrator.t_max));
            } catch (const std::exception&) {
                probes_ok = false;
                break;
            }
        }
        if (probes_ok && equilibria.size() > 1) {
            double worst = 0.0;
            for (std::size_t a = 0; a < equilibria.size(); ++a) {
                for (std::size_t b = a + 1; b < equilibria.size(); ++b) {
                    worst = std::max(worst, (equilibria[a] - equilibria[b]).norm());
                }
            }
            rec.equilibrium_disagreement = worst;
            rec.uniqueness_pass = worst < spec.tau2;
        }

        // Probe trajectory from a random start toward the trained equilibrium:
        // feeds the error envelope, curvature check and the exported CSVs.
        const Vec q_d = probes_ok && !equilibria.empty()
                            ? equilibria.front()
                            : find_equilibrium(report.final_weights, cfg, report.final_equilibrium,
                                               cfg.integrator.tol, cfg.integrator.t_max);
        SplitMix64 traj_rng(derive_stream(plan.seed, 3));
        Vec traj_start(cfg.dim());
        for (Eigen::Index c = 0; c < traj_start.size(); ++c) {
            traj_start[c] = traj_rng.uniform_symmetric();
        }
        const Trajectory traj = integrate_rk4(traj_start, report.final_weights, cfg,
                                              cfg.integrator.dt, spec.probe_t_end);
        const EnvelopeReport env = error_decay_envelope(traj, q_d, rec.lambda);
        rec.envelope_applicable = env.applicable;
        rec.envelope_worst_ratio = env.worst_ratio;
        rec.max_curvature = curvature_profile(traj, report.final_weights, cfg).maxCoeff();

        export_artifacts(report, traj, report.final_weights, cfg, run_dir.string());
    } catch (const std::exception& e) {
        rec.status = std::string("error:") + e.what();
    }
    return rec;
}

}  // namespace

void ExperimentSpec::validate() const {
    if (neurons < 1) {
        throw std::invalid_argument("experiment: neurons must be >= 1");
    }
    if (num_target_sets < 1) {
        throw std::invalid_argument("experiment: num_target_sets must be >= 1");
    }
    if (jobs < 1) {
        throw std::invalid_argument("experiment: jobs must be >= 1");
    }
    if (uniqueness_probes < 2) {
        throw std::invalid_argument("experiment: uniqueness_probes must be >= 2");
    }
    if (tau1 <= 0.0 || tau2 <= 0.0 || probe_t_end <= 0.0) {
        throw std::invalid_argument("experiment: tau1, tau2 and probe_t_end must be positive");
    }
    if (output_dir.empty()) {
        throw std::invalid_argument("experiment: output_dir must be set");
    }
    const auto resolved = resolved_seeds();
    if (std::set<std::uint64_t>(resolved.begin(), resolved.end()).size() != resolved.size()) {
        throw std::invalid_argument("experiment: seeds must be distinct");
    }
    if (explicit_targets) {
        if (explicit_targets->size() != static_cast<std::size_t>(num_target_sets)) {
            throw std::invalid_argument("experiment: explicit targets must match num_target_sets");
        }
        for (const Vec& t : *explicit_targets) {
            if (t.size() != 4 * neurons) {
                throw std::invalid_argument("experiment: each explicit target must be a 4n vector");
            }
        }
    }
}

std::vector<std::uint64_t> ExperimentSpec::resolved_seeds() const {
    std::vector<std::uint64_t> out = seeds;
    const std::uint64_t base = out.empty() ? 0x9d1db8a5u : out.front();
    for (std::size_t i = out.size(); i < static_cast<std::size_t>(num_target_sets); ++i) {
        out.push_back(derive_stream(base, 100 + i));
    }
    out.resize(static_cast<std::size_t>(num_target_sets));
    return out;
}

bool BenchmarkSummary::all_ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.converged(); });
}

Vec generate_targets(int n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("generate_targets: n must be >= 1");
    }
    SplitMix64 rng(seed);
    Vec out(4 * n);
    for (Eigen::Index c = 0; c < out.size(); ++c) {
        out[c] = rng.uniform_symmetric();
    }
    return out;
}

BenchmarkSummary run_benchmark(const ExperimentSpec& spec) {
    spec.validate();

    const auto seeds = spec.resolved_seeds();
    std::vector<RunPlan> plans;
    for (int t = 0; t < spec.num_target_sets; ++t) {
        if (spec.mode == RunMode::QSHNN || spec.mode == RunMode::Both) {
            plans.push_back({t, seeds[static_cast<std::size_t>(t)], TrainMode::QSHNN});
        }
        if (spec.mode == RunMode::SHNN || spec.mode == RunMode::Both) {
            plans.push_back({t, seeds[static_cast<std::size_t>(t)], TrainMode::SHNN});
        }
    }

    fs::create_directories(spec.output_dir);

    std::vector<RunRecord> records(plans.size());
    const int workers = std::min<int>(spec.jobs, static_cast<int>(plans.size()));
    if (workers <= 1) {
        for (std::size_t idx = 0; idx < plans.size(); ++idx) {
            records[idx] = execute_run(spec, plans[idx]);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int wkr = 0; wkr < workers; ++wkr) {
            pool.emplace_back([&]() {
                for (std::size_t idx = next.fetch_add(1); idx < plans.size();
                     idx = next.fetch_add(1)) {
                    records[idx] = execute_run(spec, plans[idx]);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    BenchmarkSummary summary;
    summary.runs = std::move(records);
    int converged = 0;
    long iter_sum = 0;
    double disagreement_max = 0.0;
    for (const RunRecord& r : summary.runs) {
        if (r.converged() && r.final_loss < spec.tau1) {
            ++converged;
            iter_sum += r.iterations;
        }
        disagreement_max = std::max(disagreement_max, r.equilibrium_disagreement);
    }
    summary.accuracy_rate = static_cast<double>(converged) / static_cast<double>(summary.runs.size());
    summary.mean_iterations =
        converged > 0 ? static_cast<double>(iter_sum) / static_cast<double>(converged) : 0.0;
    summary.equilibrium_error_max = disagreement_max;

    json j;
    if (spec.write_timestamp) {
        j["generated_at"] = utc_now();
    }
    j["spec"] = json::parse(experiment_spec_to_json(spec));
    j["accuracy_rate"] = summary.accuracy_rate;
    j["mean_iterations"] = summary.mean_iterations;
    j["equilibrium_error_max"] = summary.equilibrium_error_max;
    j["runs"] = json::array();
    for (const RunRecord& r : summary.runs) {
        j["runs"].push_back(run_record_to_json(r));
    }

    const fs::path summary_path = fs::path(spec.output_dir) / "summary.json";
    auto os = open_out(summary_path);
    os << j.dump(2) << "\n";
    finish_out(os, summary_path);
    return summary;
}

void export_artifacts(const TrainingReport& report, const Trajectory& trajectory,
                      const Mat& weights, const NetworkConfig& cfg, const std::string& dir) {
    const fs::path base(dir);
    fs::create_directories(base);

    {
        const fs::path path = base / "loss_accuracy.csv";
        auto os = open_out(path);
        os << "iter,loss,accuracy,quaternionicity,eta\n";
        for (std::size_t k = 0; k < report.loss_history.size(); ++k) {
            os << (k + 1) << ',' << fmt(report.loss_history[k]) << ','
               << fmt(report.accuracy_history[k]) << ','
               << fmt(report.quaternionicity_history[k]) << ',' << fmt(report.eta_history[k])
               << '\n';
        }
        finish_out(os, path);
    }

    {
        const fs::path path = base / "weights.json";
        json j;
        j["dim"] = weights.rows();
        j["neurons"] = weights.rows() / 4;
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(weights.size()));
        for (Eigen::Index r = 0; r < weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < weights.cols(); ++c) {
                flat.push_back(weights(r, c));
            }
        }
        j["row_major"] = flat;
        json blocks = json::array();
        for (Eigen::Index bi = 0; bi < weights.rows() / 4; ++bi) {
            json row = json::array();
            for (Eigen::Index bj = 0; bj < weights.cols() / 4; ++bj) {
                const Matrix4 block = weights.block<4, 4>(4 * bi, 4 * bj);
                const ProjectionCoefficients c = project_block(block).second;
                row.push_back({{"c1", c.c1}, {"ci", c.ci}, {"cj", c.cj}, {"ck", c.ck}});
            }
            blocks.push_back(row);
        }
        j["blocks"] = blocks;
        auto os = open_out(path);
        os << j.dump(2) << "\n";
        finish_out(os, path);
    }

    {
        const fs::path path = base / "trajectory.csv";
        auto os = open_out(path);
        const Eigen::Index dim = trajectory.size() > 0 ? trajectory.states.front().size() : cfg.dim();
        os << 't';
        for (Eigen::Index c = 0; c < dim; ++c) {
            os << ",q_" << (c + 1);
        }
        for (Eigen::Index c = 0; c < dim; ++c) {
            os << ",dq_" << (c + 1);
        }
        os << '\n';
        for (std::size_t k = 0; k < trajectory.size(); ++k) {
            os << fmt(trajectory.times[k]);
            for (Eigen::Index c = 0; c < dim; ++c) {
                os << ',' << fmt(trajectory.states[k][c]);
            }
            for (Eigen::Index c = 0; c < dim; ++c) {
                os << ',' << fmt(trajectory.derivatives[k][c]);
            }
            os << '\n';
        }
        finish_out(os, path);
    }

    {
        const fs::path path = base / "curvature.csv";
        auto os = open_out(path);
        const Eigen::Index dim = trajectory.size() > 0 ? trajectory.states.front().size() : cfg.dim();
        os << 't';
        for (Eigen::Index c = 0; c < dim; ++c) {
            os << ",kappa_" << (c + 1);
        }
        os << '\n';
        if (trajectory.size() >= 3) {
            const Mat kappa = curvature_profile(trajectory, weights, cfg);
            for (std::size_t k = 0; k < trajectory.size(); ++k) {
                os << fmt(trajectory.times[k]);
                for (Eigen::Index c = 0; c < kappa.cols(); ++c) {
                    os << ',' << fmt(kappa(static_cast<Eigen::Index>(k), c));
                }
                os << '\n';
            }
        }
        finish_out(os, path);
    }

    {
        const fs::path path = base / "summary.json";
        json j;
        j["stop_reason"] = stop_reason_name(report.stop_reason);
        j["iterations_used"] = report.iterations_used;
        j["final_loss"] = report.final_loss();
        j["final_accuracy"] = report.final_accuracy();
        j["quaternionicity"] = quaternionicity_residual(weights);
        j["lambda"] = report.final_stability.lambda;
        j["constraint1_max_margin"] = report.final_stability.constraint1_margins.size() > 0
                                          ? report.final_stability.constraint1_margins.maxCoeff()
                                          : 0.0;
        j["constraint2_max_margin"] = report.final_stability.constraint2_margins.size() > 0
                                          ? report.final_stability.constraint2_margins.maxCoeff()
                                          : 0.0;
        j["seed"] = report.seed;
        j["mode"] = mode_name(report.mode);
        j["repaired_at_init"] = report.repaired_at_init;
        j["trajectory_samples"] = trajectory.size();
        j["config"] = network_config_to_json(cfg);
        auto os = open_out(path);
        os << j.dump(2) << "\n";
        finish_out(os, path);
    }
}

Mat load_weights_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    json j;
    is >> j;
    const auto dim = j.at("dim").get<Eigen::Index>();
    const auto flat = j.at("row_major").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != dim * dim) {
        throw std::runtime_error("weights file is inconsistent: " + path);
    }
    Mat w(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            w(r, c) = flat[static_cast<std::size_t>(r * dim + c)];
        }
    }
    return w;
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
    json j;
    j["neurons"] = spec.neurons;
    j["num_target_sets"] = spec.num_target_sets;
    j["seeds"] = spec.seeds;
    j["mode"] = spec.mode == RunMode::QSHNN ? "qshnn" : (spec.mode == RunMode::SHNN ? "shnn" : "both");
    j["train"] = train_config_to_json(spec.train);
    j["dynamics"] = network_config_to_json(resolved_network(spec));
    j["output_dir"] = spec.output_dir;
    j["jobs"] = spec.jobs;
    j["tau1"] = spec.tau1;
    j["tau2"] = spec.tau2;
    j["uniqueness_probes"] = spec.uniqueness_probes;
    j["probe_t_end"] = spec.probe_t_end;
    if (spec.explicit_targets) {
        json targets = json::array();
        for (const Vec& t : *spec.explicit_targets) {
            targets.push_back(std::vector<double>(t.data(), t.data() + t.size()));
        }
        j["targets"] = targets;
    }
    return j.dump(2);
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentSpec spec;
    spec.neurons = j.value("neurons", spec.neurons);
    spec.num_target_sets = j.value("num_target_sets", spec.num_target_sets);
    spec.seeds = j.value("seeds", spec.seeds);
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "qshnn") {
            spec.mode = RunMode::QSHNN;
        } else if (m == "shnn") {
            spec.mode = RunMode::SHNN;
        } else if (m == "both") {
            spec.mode = RunMode::Both;
        } else {
            throw std::invalid_argument("experiment: mode must be qshnn, shnn or both");
        }
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        spec.train.eta = t.value("eta", spec.train.eta);
        spec.train.eta_min = t.value("eta_min", spec.train.eta_min);
        spec.train.eta_max = t.value("eta_max", spec.train.eta_max);
        spec.train.projection_period = t.value("projection_period", spec.train.projection_period);
        spec.train.max_iters = t.value("max_iters", spec.train.max_iters);
        spec.train.tau = t.value("tau", spec.train.tau);
        spec.train.epsilon = t.value("epsilon", spec.train.epsilon);
        spec.train.loss_normalized_gradient =
            t.value("loss_normalized_gradient", spec.train.loss_normalized_gradient);
    }
    if (j.contains("dynamics")) {
        const json& d = j.at("dynamics");
        spec.dynamics.gamma = d.value("gamma", spec.dynamics.gamma);
        spec.dynamics.mu = d.value("mu", spec.dynamics.mu);
        spec.dynamics.integrator.dt = d.value("dt", spec.dynamics.integrator.dt);
        spec.dynamics.integrator.t_max = d.value("t_max", spec.dynamics.integrator.t_max);
        spec.dynamics.integrator.tol = d.value("tol", spec.dynamics.integrator.tol);
        if (d.contains("bias")) {
            const auto bias = d.at("bias").get<std::vector<double>>();
            spec.dynamics.bias = Eigen::Map<const Vec>(bias.data(),
                                                       static_cast<Eigen::Index>(bias.size()));
        } else if (d.contains("bias_value")) {
            spec.dynamics.bias = Vec::Constant(1, d.at("bias_value").get<double>());
        }
    }
    spec.output_dir = j.value("output_dir", spec.output_dir);
    spec.jobs = j.value("jobs", spec.jobs);
    spec.tau1 = j.value("tau1", spec.tau1);
    spec.tau2 = j.value("tau2", spec.tau2);
    spec.uniqueness_probes = j.value("uniqueness_probes", spec.uniqueness_probes);
    spec.probe_t_end = j.value("probe_t_end", spec.probe_t_end);
    if (j.contains("targets")) {
        std::vector<Vec> targets;
        for (const auto& row : j.at("targets")) {
            const auto vals = row.get<std::vector<double>>();
            targets.push_back(
                Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size())));
        }
        spec.explicit_targets = std::move(targets);
    }
    return spec;
}

}  // namespace qshnn
