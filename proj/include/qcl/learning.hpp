#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qcl/data.hpp"
#include "qcl/model.hpp"
#include "qcl/rng.hpp"

namespace qcl {

// -(a0 log g0 + a1 log g1) with probabilities clamped away from 0.
double cross_entropy(const std::pair<double, double>& g, const std::array<double, 2>& a);

// Anchors and Fisher diagonals accumulated after each finished stage, plus
// the regularization strengths used when each stage trained.
struct EwcHistory {
    struct Stage {
        std::vector<double> theta_star;
        std::vector<double> fisher;
    };
    std::vector<Stage> stages;
    // lambda_rows[k] = strengths applied while training stage k+1 (1-based
    // stages); row k has k entries, one per prior task.
    std::vector<std::vector<double>> lambda_rows;

    // lambda_{stage,t} for 1-based stage and prior task t in 1..stage-1.
    double lambda(int stage, int prior_task) const;
};

// EWC-regularized loss for 1-based stage k:
// L + sum_{t<k} lambda_{k,t}/2 * sum_j F_{t,j} (theta_j - theta*_{t,j})^2.
// Stage k requires history stages 1..k-1 and lambda row k.
double ewc_loss(double base_loss, std::span<const double> theta, const EwcHistory& history,
                int stage);

// Gradient of ewc_loss: base + sum_t lambda_{k,t} F_{t,j} (theta_j - theta*_{t,j}).
std::vector<double> ewc_grad(std::span<const double> base_grad, std::span<const double> theta,
                             const EwcHistory& history, int stage);

// Nadam (Nesterov-accelerated Adam) with constant beta1. Defaults are the
// optimizer's standard constants.
struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState fresh(std::size_t n_params);
};

void nadam_step(OptimizerState& opt, std::vector<double>& theta, std::span<const double> grad,
                double lr);

struct StageConfig {
    int epochs = 20;
    int batch_size = 25;
    double learning_rate = 0.05;
    // lambdas[t-1] is the strength for prior task t; missing entries are 0.
    std::vector<double> lambdas;
    std::uint64_t seed = 0;
    double fisher_threshold = 0.01;  // large/small grouping for metrics

    void validate() const;
};

// One row per (epoch, task seen so far). An epoch is a single optimizer step
// on one freshly sampled batch.
struct MetricsRecord {
    int stage = 0;
    int epoch = 0;
    int task_id = 0;
    double accuracy = 0.0;
    double loss = 0.0;
    double dtheta_large_fisher = 0.0;
    double dtheta_small_fisher = 0.0;
};

struct StageResult {
    std::vector<double> theta_star;
    std::vector<double> fisher;
    std::vector<MetricsRecord> metrics;
    std::vector<std::vector<double>> theta_trajectory;  // theta after each epoch
    OptimizerState final_opt;                           // as of the last epoch
};

// Distinct indices into [0, n); without replacement inside the batch, fresh
// draw each epoch.
std::vector<std::size_t> sample_batch(Rng& rng, std::size_t n, std::size_t batch_size);

// Mean gradient of the EWC loss over the given samples; per-sample work may
// fan out over threads, the reduction is sequential in sample order.
std::vector<double> batch_ewc_grad(const ClassifierModel& model, std::span<const double> theta,
                                   const std::vector<Sample>& train,
                                   const std::vector<std::size_t>& batch,
                                   const EwcHistory& history, int stage, int n_threads);

// Fraction of samples whose predicted label matches the truth.
double evaluate_accuracy(const ClassifierModel& model, std::span<const double> theta,
                         const std::vector<Sample>& testset, int n_threads = 1);

// (accuracy, mean cross-entropy loss) in one pass.
std::pair<double, double> evaluate_metrics(const ClassifierModel& model,
                                           std::span<const double> theta,
                                           const std::vector<Sample>& testset, int n_threads = 1);

// Diagonal Fisher through the model interface (quantum or classical).
std::vector<double> model_fisher_diagonal(const ClassifierModel& model,
                                          std::span<const double> theta,
                                          const std::vector<Sample>& dataset, int n_threads = 1);

// One stage of the continual-learning loop. Trains theta in place on
// task.train, recording per-epoch metrics on every dataset in eval_tasks
// (tasks seen so far, 1-based ids by position). Appends (theta_star, fisher)
// and the lambda row to history. stage is 1-based and must equal
// history.stages.size() + 1.
StageResult train_stage(const ClassifierModel& model, std::vector<double>& theta,
                        const TaskDataset& task, const StageConfig& config, EwcHistory& history,
                        const std::vector<const TaskDataset*>& eval_tasks, int n_threads = 1);

// Mean |theta_t - anchor| over parameters with fisher > threshold and over
// the rest, one pair per trajectory entry.
std::vector<std::pair<double, double>> parameter_change_stats(
    const std::vector<std::vector<double>>& theta_trajectory, std::span<const double> anchor,
    std::span<const double> fisher, double threshold);

// stage,epoch,task_id,accuracy,loss,dtheta_largeF,dtheta_smallF
void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& metrics);
std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics);

// Checkpoint: version header, theta, optimizer state, EWC history. Text
// format with full double precision; loading a file with a different header
// throws IoError.
struct Checkpoint {
    int stages_done = 0;
    std::vector<double> theta;
    OptimizerState opt;
    EwcHistory history;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace qcl
