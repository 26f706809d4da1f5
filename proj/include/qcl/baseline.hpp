#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qcl/learning.hpp"

namespace qcl {

// Sigmoid feedforward network n_in - n_hidden - 1; the comparison model is
// 10-20-1 with 241 parameters. Flat parameter layout: hidden weights
// (row-major, n_hidden x n_in), hidden biases, output weights, output bias.
struct FfnnShape {
    int n_in = 10;
    int n_hidden = 20;

    int n_params() const { return n_hidden * n_in + n_hidden + n_hidden + 1; }
};

double ffnn_forward(const FfnnShape& shape, std::span<const double> params,
                    std::span<const double> x);

// Backpropagated gradient of the binary cross-entropy with (g0, g1) = (out, 1-out).
std::vector<double> ffnn_grad(const FfnnShape& shape, std::span<const double> params,
                              std::span<const double> x, const std::array<double, 2>& label);

class FfnnModel : public ClassifierModel {
public:
    explicit FfnnModel(FfnnShape shape = {}) : shape_(shape) {}

    int n_params() const override { return shape_.n_params(); }
    std::pair<double, double> predict_proba(std::span<const double> theta,
                                            const Sample& sample) const override;
    std::vector<double> loss_grad_sample(std::span<const double> theta,
                                         const Sample& sample) const override;
    // Output above 0.5 means class 0.
    int predict_label(double g0, double /*g1*/) const override { return g0 > 0.5 ? 0 : 1; }

    const FfnnShape& shape() const { return shape_; }

private:
    FfnnShape shape_;
};

// Uniform [-1, 1] scaled by 1/sqrt(fan-in) for weights, zero biases.
std::vector<double> ffnn_init(const FfnnShape& shape, Rng& rng);

std::vector<double> ffnn_fisher(const FfnnShape& shape, std::span<const double> params_star,
                                const std::vector<Sample>& dataset, int n_threads = 1);

// ---------------------------------------------------------------------------
// Two-task continual runs and the regularization sweep

using ThetaInit = std::function<std::vector<double>(Rng&)>;

ThetaInit uniform_theta_init(int n_params, double lo, double hi);

struct ContinualRunResult {
    std::vector<double> theta;
    EwcHistory history;
    std::vector<MetricsRecord> metrics;
    std::vector<StageResult> stages;
};

// The one training entry point: initializes theta from the master seed and
// runs train_stage over the tasks in order. Stage k is evaluated on tasks
// 1..k each epoch. Both classifier backends go through this path. A resume
// checkpoint skips its completed stages; batch streams derive from
// (master_seed, stage), so the remaining stages replay identically.
ContinualRunResult run_continual(
    const ClassifierModel& model, const ThetaInit& init,
    const std::vector<const TaskDataset*>& tasks, std::vector<StageConfig> stage_configs,
    std::uint64_t master_seed, int n_threads = 1, const Checkpoint* resume = nullptr,
    const std::function<void(int, const ContinualRunResult&)>& on_stage_done = {});

struct SweepRow {
    double lambda = 0.0;
    std::uint64_t seed = 0;  // per-repeat master seed
    double acc_task_a = 0.0;
    double acc_task_b = 0.0;
    double overall = 0.0;
};

struct SweepSummary {
    double lambda = 0.0;
    double mean_acc_a = 0.0;
    double mean_acc_b = 0.0;
    double mean_overall = 0.0;
};

// Stage A is trained once per repeat (it does not depend on lambda), then
// stage B runs with each strength. Repeat r uses master seed base_seed + r,
// so a single-lambda sweep row reproduces run_continual with that seed.
std::vector<SweepRow> lambda_sweep(const ClassifierModel& model, const ThetaInit& init,
                                   const TaskDataset& task_a, const TaskDataset& task_b,
                                   const std::vector<double>& lambdas, int repeats,
                                   StageConfig stage_a, StageConfig stage_b,
                                   std::uint64_t base_seed, int n_threads = 1);

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows);

// lambda,seed,acc_task_a,acc_task_b,overall
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace qcl
