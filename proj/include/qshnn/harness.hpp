#pragma once

#include "qshnn/dynamics.hpp"
#include "qshnn/learning.hpp"
#include "qshnn/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qshnn {

enum class RunMode { QSHNN, SHNN, Both };

/// One benchmark campaign: a set of seeded targets trained in one or both
/// modes, each trained network probed for equilibrium uniqueness, error
/// decay and curvature, with all artifacts written under output_dir.
struct ExperimentSpec {
    int neurons = 4;
    int num_target_sets = 1;
    std::vector<std::uint64_t> seeds;  // one per target set; expanded from the first when short
    RunMode mode = RunMode::QSHNN;
    TrainConfig train;
    NetworkConfig dynamics;  // bias/gamma/mu and integrator settings; bias sized on demand
    std::string output_dir = "out";
    int jobs = 1;
    double tau1 = 1e-6;  // convergence threshold (metric i)
    double tau2 = 1e-6;  // equilibrium-uniqueness threshold (metric iii)
    int uniqueness_probes = 20;
    double probe_t_end = 40.0;  // horizon of the recorded probe trajectory
    bool write_timestamp = true;
    /// Overrides generated targets when present (size must match
    /// num_target_sets; each entry a 4n vector).
    std::optional<std::vector<Vec>> explicit_targets;

    void validate() const;  // throws std::invalid_argument on bad fields
    std::vector<std::uint64_t> resolved_seeds() const;
};

struct RunRecord {
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::QSHNN;
    std::string status;  // converged | max_iters | divergence | error:<what>
    int iterations = 0;
    double final_loss = 0.0;
    double final_accuracy = 0.0;
    double quaternionicity = 0.0;
    double lambda = 0.0;
    bool constraints_satisfied = false;
    double equilibrium_disagreement = 0.0;  // metric iii: max pairwise distance
    bool uniqueness_pass = false;
    bool envelope_applicable = false;
    double envelope_worst_ratio = 0.0;
    double max_curvature = 0.0;
    std::string output_dir;

    bool converged() const { return status == "converged"; }
};

struct BenchmarkSummary {
    double accuracy_rate = 0.0;   // fraction of target sets converged below tau1
    double mean_iterations = 0.0; // over converged runs
    double equilibrium_error_max = 0.0;
    std::vector<RunRecord> runs;

    bool all_ok() const;
};

/// 4n components drawn i.i.d. uniform on (-1, 1) from SplitMix64(seed).
Vec generate_targets(int n, std::uint64_t seed);

/// Runs the full benchmark protocol. Per-run failures are recorded in the
/// summary (status = "error:<what>") without aborting the batch. Artifacts
/// land under spec.output_dir/run_<mode>_<seed>/ plus a batch-level
/// summary.json.
BenchmarkSummary run_benchmark(const ExperimentSpec& spec);

/// Writes the standard artifact set into dir:
///   loss_accuracy.csv  iter,loss,accuracy,quaternionicity,eta
///   weights.json       row-major 4n x 4n entries + per-block coefficients
///   trajectory.csv     t,q_1..q_4n,dq_1..dq_4n
///   curvature.csv      t,kappa_1..kappa_4n
///   summary.json       scalar metrics and config echo
/// I/O failures surface as std::runtime_error carrying the path.
void export_artifacts(const TrainingReport& report, const Trajectory& trajectory,
                      const Mat& weights, const NetworkConfig& cfg, const std::string& dir);

/// Reads back the matrix written by export_artifacts (bit-exact round trip).
Mat load_weights_json(const std::string& path);

/// JSON (de)serialization of the experiment spec; mirrors the config file
/// accepted by the CLI.
std::string experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const std::string& text);

}  // namespace qshnn
