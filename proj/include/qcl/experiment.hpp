#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qcl/baseline.hpp"
#include "qcl/datasets.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Config file: line-oriented sections of key = value pairs. '#' lines are
// comments. [task], [stage] and [prepare] sections repeat in order.

struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> kv;

    bool has(const std::string& key) const { return kv.count(key) != 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int_or(const std::string& key, int fallback) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const;
};

struct RawConfig {
    std::vector<ConfigSection> sections;

    const ConfigSection* find(const std::string& name) const;
    std::vector<const ConfigSection*> find_all(const std::string& name) const;
};

RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::string& path);

// ---------------------------------------------------------------------------
// Experiment assembly

struct ModelSpec {
    enum class Kind { QUANTUM, FFNN } kind = Kind::QUANTUM;
    QuantumClassifierSpec quantum;
    FfnnShape ffnn;
    double init_lo = -3.14159265358979323846;
    double init_hi = 3.14159265358979323846;
};

struct TaskSpec {
    std::string kind;
    std::map<std::string, std::string> kv;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";
    int threads = 0;  // 0 = hardware default
    ModelSpec model;
    std::vector<TaskSpec> tasks;
    std::vector<StageConfig> stages;
    // sweep settings
    std::vector<double> sweep_lambdas;
    int sweep_repeats = 1;

    std::string config_path;   // as given on the command line
    std::uint64_t config_hash = 0;
};

ExperimentConfig load_experiment_config(const std::string& path);

// Overrides from CLI flags.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
};
void apply_overrides(ExperimentConfig& cfg, const CliOverrides& ov);

struct BuiltModel {
    std::unique_ptr<ClassifierModel> model;
    ThetaInit init;
};
BuiltModel build_model(const ModelSpec& spec);

// Materializes a task (loads files or generates synthetic data). The task
// seed defaults to mix(master_seed, task index) unless the section sets one.
TaskDataset build_task_dataset(const TaskSpec& spec, std::uint64_t master_seed, int task_index);

std::uint64_t fnv1a_hash(const std::string& bytes);
void write_manifest(const ExperimentConfig& cfg, const std::string& command);

// ---------------------------------------------------------------------------
// CLI operations. All throw; the CLI maps exception types to exit codes.

struct TrainOutcome {
    ContinualRunResult run;
    std::string metrics_path;
    std::string checkpoint_path;
};
TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::string& resume_path = "");

struct SweepOutcome {
    std::vector<SweepRow> rows;
    std::vector<SweepSummary> summary;
    std::string rows_path;
    std::string summary_path;
};
SweepOutcome cmd_sweep(const ExperimentConfig& cfg);

void cmd_prepare_data(const ExperimentConfig& cfg, const RawConfig& raw);

struct GradCheckOptions {
    std::vector<int> qubit_sizes{2, 3, 4, 5, 6};
    int instances = 102;
    double fd_step = 1e-4;
    double tolerance = 1e-6;
    double adjoint_tolerance = 1e-8;
    std::uint64_t seed = 20240901;
    bool inject_sign_flip = false;  // mutation hook for testing the checker
};

struct GradCheckReport {
    int instances = 0;
    double max_dev_shift_fd = 0.0;       // parameter-shift vs finite differences
    double max_dev_adjoint_shift = 0.0;  // adjoint fast path vs parameter-shift
    bool pass = false;
    std::string summary;
};
GradCheckReport cmd_gradcheck(const GradCheckOptions& opts);

struct GroundStateOptions {
    int n = 8;
    double h = 0.0;
    int n_blocks = 5;
    int max_iters = 1500;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
    int restarts = 2;
    GradMethod grad_method = GradMethod::Adjoint;
    bool with_exact = true;  // only possible for n <= 12
    std::string out_dir;
};

struct GroundStateReport {
    double exact_energy = 0.0;
    bool have_exact = false;
    double variational_energy = 0.0;
    bool converged = false;
    double exact_string_order = 0.0;
    double variational_string_order = 0.0;
    std::string summary;
};
GroundStateReport cmd_groundstate(const GroundStateOptions& opts);

}  // namespace qcl
