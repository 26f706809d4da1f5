#include "qcl/learning.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcl/errors.hpp"
#include "qcl/parallel.hpp"

namespace qcl {

double cross_entropy(const std::pair<double, double>& g, const std::array<double, 2>& a) {
    return -(a[0] * std::log(clamp_proba(g.first)) + a[1] * std::log(clamp_proba(g.second)));
}

double EwcHistory::lambda(int stage, int prior_task) const {
    if (stage < 1 || static_cast<std::size_t>(stage) > lambda_rows.size())
        throw StructuralError("no lambda row recorded for stage " + std::to_string(stage));
    const auto& row = lambda_rows[stage - 1];
    if (prior_task < 1 || prior_task >= stage) throw StructuralError("prior task out of range");
    const std::size_t idx = static_cast<std::size_t>(prior_task - 1);
    return idx < row.size() ? row[idx] : 0.0;
}

namespace {

void check_history(std::span<const double> theta, const EwcHistory& history, int stage) {
    if (stage < 1) throw StructuralError("stage is 1-based");
    if (history.stages.size() < static_cast<std::size_t>(stage - 1))
        throw StructuralError("history is missing stages before stage " + std::to_string(stage));
    for (int t = 1; t < stage; ++t) {
        const auto& st = history.stages[t - 1];
        if (st.theta_star.size() != theta.size() || st.fisher.size() != theta.size())
            throw StructuralError("history stage " + std::to_string(t) +
                                  " does not match parameter count");
    }
}

}  // namespace

double ewc_loss(double base_loss, std::span<const double> theta, const EwcHistory& history,
                int stage) {
    check_history(theta, history, stage);
    double penalty = 0.0;
    for (int t = 1; t < stage; ++t) {
        const double lam = history.lambda(stage, t);
        if (lam == 0.0) continue;
        const auto& st = history.stages[t - 1];
        double acc = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double d = theta[j] - st.theta_star[j];
            acc += st.fisher[j] * d * d;
        }
        penalty += 0.5 * lam * acc;
    }
    return base_loss + penalty;
}

std::vector<double> ewc_grad(std::span<const double> base_grad, std::span<const double> theta,
                             const EwcHistory& history, int stage) {
    if (base_grad.size() != theta.size())
        throw StructuralError("gradient and parameter sizes differ");
    check_history(theta, history, stage);
    std::vector<double> out(base_grad.begin(), base_grad.end());
    for (int t = 1; t < stage; ++t) {
        const double lam = history.lambda(stage, t);
        if (lam == 0.0) continue;
        const auto& st = history.stages[t - 1];
        for (std::size_t j = 0; j < theta.size(); ++j)
            out[j] += lam * st.fisher[j] * (theta[j] - st.theta_star[j]);
    }
    return out;
}

OptimizerState OptimizerState::fresh(std::size_t n_params) {
    OptimizerState opt;
    opt.first_moment.assign(n_params, 0.0);
    opt.second_moment.assign(n_params, 0.0);
    return opt;
}

void nadam_step(OptimizerState& opt, std::vector<double>& theta, std::span<const double> grad,
                double lr) {
    if (theta.size() != grad.size() || theta.size() != opt.first_moment.size())
        throw StructuralError("optimizer shape mismatch");
    opt.step_count += 1;
    const double t = static_cast<double>(opt.step_count);
    const double b1 = opt.beta1, b2 = opt.beta2;
    const double b1_t = std::pow(b1, t);
    const double b1_t1 = b1_t * b1;
    const double b2_t = std::pow(b2, t);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double g = grad[j];
        opt.first_moment[j] = b1 * opt.first_moment[j] + (1.0 - b1) * g;
        opt.second_moment[j] = b2 * opt.second_moment[j] + (1.0 - b2) * g * g;
        const double v_hat = opt.second_moment[j] / (1.0 - b2_t);
        const double nesterov =
            b1 * opt.first_moment[j] / (1.0 - b1_t1) + (1.0 - b1) * g / (1.0 - b1_t);
        theta[j] -= lr * nesterov / (std::sqrt(v_hat) + opt.epsilon);
    }
}

void StageConfig::validate() const {
    if (epochs < 1) throw ArgumentError("epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
    for (double lam : lambdas)
        if (lam < 0.0) throw ArgumentError("lambda must be >= 0");
    if (!(fisher_threshold > 0.0)) throw ArgumentError("fisher_threshold must be > 0");
}

std::vector<std::size_t> sample_batch(Rng& rng, std::size_t n, std::size_t batch_size) {
    if (batch_size >= n) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }
    return sample_without_replacement(rng, n, batch_size);
}

std::vector<double> batch_ewc_grad(const ClassifierModel& model, std::span<const double> theta,
                                   const std::vector<Sample>& train,
                                   const std::vector<std::size_t>& batch,
                                   const EwcHistory& history, int stage, int n_threads) {
    std::vector<std::vector<double>> per_sample(batch.size());
    parallel_for(batch.size(), n_threads, [&](std::size_t i) {
        per_sample[i] = model.loss_grad_sample(theta, train[batch[i]]);
    });
    std::vector<double> mean(theta.size(), 0.0);
    for (const auto& g : per_sample)
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g[j];
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : mean) v *= inv;
    return ewc_grad(mean, theta, history, stage);
}

double evaluate_accuracy(const ClassifierModel& model, std::span<const double> theta,
                         const std::vector<Sample>& testset, int n_threads) {
    return evaluate_metrics(model, theta, testset, n_threads).first;
}

std::pair<double, double> evaluate_metrics(const ClassifierModel& model,
                                           std::span<const double> theta,
                                           const std::vector<Sample>& testset, int n_threads) {
    if (testset.empty()) throw ArgumentError("evaluation set is empty");
    std::vector<int> hits(testset.size(), 0);
    std::vector<double> losses(testset.size(), 0.0);
    parallel_for(testset.size(), n_threads, [&](std::size_t i) {
        const auto g = model.predict_proba(theta, testset[i]);
        hits[i] = model.predict_label(g.first, g.second) == testset[i].label_index() ? 1 : 0;
        losses[i] = cross_entropy(g, testset[i].label);
    });
    double n_hit = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        n_hit += hits[i];
        loss += losses[i];
    }
    const double inv = 1.0 / static_cast<double>(testset.size());
    return {n_hit * inv, loss * inv};
}

std::vector<double> model_fisher_diagonal(const ClassifierModel& model,
                                          std::span<const double> theta,
                                          const std::vector<Sample>& dataset, int n_threads) {
    if (dataset.empty()) throw ArgumentError("fisher needs a nonempty dataset");
    std::vector<std::vector<double>> per_sample(dataset.size());
    parallel_for(dataset.size(), n_threads, [&](std::size_t i) {
        per_sample[i] = model.loss_grad_sample(theta, dataset[i]);
    });
    std::vector<double> fisher(theta.size(), 0.0);
    for (const auto& g : per_sample)
        for (std::size_t j = 0; j < fisher.size(); ++j) fisher[j] += g[j] * g[j];
    const double inv = 1.0 / static_cast<double>(dataset.size());
    for (double& f : fisher) f *= inv;
    return fisher;
}

namespace {

std::pair<double, double> group_change(std::span<const double> theta,
                                       std::span<const double> anchor,
                                       std::span<const double> fisher, double threshold) {
    double sum_large = 0.0, sum_small = 0.0;
    std::size_t n_large = 0, n_small = 0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double d = std::abs(theta[j] - anchor[j]);
        if (fisher[j] > threshold) {
            sum_large += d;
            ++n_large;
        } else {
            sum_small += d;
            ++n_small;
        }
    }
    return {n_large ? sum_large / n_large : 0.0, n_small ? sum_small / n_small : 0.0};
}

}  // namespace

StageResult train_stage(const ClassifierModel& model, std::vector<double>& theta,
                        const TaskDataset& task, const StageConfig& config, EwcHistory& history,
                        const std::vector<const TaskDataset*>& eval_tasks, int n_threads) {
    config.validate();
    if (task.train.empty()) throw ArgumentError("training dataset is empty");
    if (static_cast<int>(theta.size()) != model.n_params())
        throw StructuralError("theta does not match model parameter count");
    const int stage = static_cast<int>(history.stages.size()) + 1;

    // Record the strengths for this stage before the loop so ewc_grad can
    // read them through the history.
    std::vector<double> row(static_cast<std::size_t>(stage - 1), 0.0);
    for (std::size_t t = 0; t < row.size() && t < config.lambdas.size(); ++t)
        row[t] = config.lambdas[t];
    history.lambda_rows.resize(stage);
    history.lambda_rows[stage - 1] = row;

    // Parameter-change grouping is taken against the most recent anchor.
    const bool have_anchor = stage >= 2;
    std::span<const double> anchor, anchor_fisher;
    if (have_anchor) {
        anchor = history.stages.back().theta_star;
        anchor_fisher = history.stages.back().fisher;
    }

    StageResult result;
    OptimizerState opt = OptimizerState::fresh(theta.size());
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(stage)));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto batch = sample_batch(rng, task.train.size(),
                                        static_cast<std::size_t>(config.batch_size));
        const auto grad = batch_ewc_grad(model, theta, task.train, batch, history, stage,
                                         n_threads);
        nadam_step(opt, theta, grad, config.learning_rate);
        result.theta_trajectory.push_back(theta);

        std::pair<double, double> change{0.0, 0.0};
        if (have_anchor)
            change = group_change(theta, anchor, anchor_fisher, config.fisher_threshold);
        for (std::size_t t = 0; t < eval_tasks.size(); ++t) {
            const auto [acc, loss] = evaluate_metrics(model, theta, eval_tasks[t]->test,
                                                      n_threads);
            MetricsRecord rec;
            rec.stage = stage;
            rec.epoch = epoch;
            rec.task_id = static_cast<int>(t) + 1;
            rec.accuracy = acc;
            rec.loss = loss;
            rec.dtheta_large_fisher = change.first;
            rec.dtheta_small_fisher = change.second;
            result.metrics.push_back(rec);
        }
    }

    result.theta_star = theta;
    result.fisher = model_fisher_diagonal(model, theta, task.train, n_threads);
    result.final_opt = opt;
    history.stages.push_back({result.theta_star, result.fisher});
    return result;
}

std::vector<std::pair<double, double>> parameter_change_stats(
    const std::vector<std::vector<double>>& theta_trajectory, std::span<const double> anchor,
    std::span<const double> fisher, double threshold) {
    if (!(threshold > 0.0)) throw ArgumentError("threshold must be > 0");
    std::vector<std::pair<double, double>> out;
    out.reserve(theta_trajectory.size());
    for (const auto& theta : theta_trajectory)
        out.push_back(group_change(theta, anchor, fisher, threshold));
    return out;
}

namespace {

void print_g17(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& metrics) {
    os << "stage,epoch,task_id,accuracy,loss,dtheta_largeF,dtheta_smallF\n";
    for (const auto& m : metrics) {
        os << m.stage << ',' << m.epoch << ',' << m.task_id << ',';
        print_g17(os, m.accuracy);
        os << ',';
        print_g17(os, m.loss);
        os << ',';
        print_g17(os, m.dtheta_large_fisher);
        os << ',';
        print_g17(os, m.dtheta_small_fisher);
        os << '\n';
    }
}

std::string metrics_to_csv(const std::vector<MetricsRecord>& metrics) {
    std::ostringstream os;
    write_metrics_csv(os, metrics);
    return os.str();
}

namespace {

constexpr const char* kCheckpointHeader = "QCL-CHECKPOINT v1";

void write_vector(std::ostream& os, const char* name, const std::vector<double>& v) {
    os << name << ' ' << v.size();
    for (double x : v) {
        os << ' ';
        print_g17(os, x);
    }
    os << '\n';
}

std::vector<double> read_vector(std::istream& is, const std::string& expect) {
    std::string name;
    std::size_t n = 0;
    if (!(is >> name >> n) || name != expect)
        throw IoError("checkpoint: expected vector '" + expect + "'");
    std::vector<double> v(n);
    for (auto& x : v)
        if (!(is >> x)) throw IoError("checkpoint: truncated vector '" + expect + "'");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write checkpoint: " + path);
    os << kCheckpointHeader << '\n';
    os << "stages_done " << ckpt.stages_done << '\n';
    write_vector(os, "theta", ckpt.theta);
    os << "opt " << ckpt.opt.step_count << ' ';
    print_g17(os, ckpt.opt.beta1);
    os << ' ';
    print_g17(os, ckpt.opt.beta2);
    os << ' ';
    print_g17(os, ckpt.opt.epsilon);
    os << '\n';
    write_vector(os, "first_moment", ckpt.opt.first_moment);
    write_vector(os, "second_moment", ckpt.opt.second_moment);
    os << "history_stages " << ckpt.history.stages.size() << '\n';
    for (const auto& st : ckpt.history.stages) {
        write_vector(os, "theta_star", st.theta_star);
        write_vector(os, "fisher", st.fisher);
    }
    os << "lambda_rows " << ckpt.history.lambda_rows.size() << '\n';
    for (const auto& row : ckpt.history.lambda_rows) write_vector(os, "lambdas", row);
    if (!os) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    std::string header;
    std::getline(is, header);
    if (header != kCheckpointHeader)
        throw IoError("checkpoint version mismatch: got '" + header + "', expected '" +
                      kCheckpointHeader + "'");
    Checkpoint ckpt;
    std::string tag;
    if (!(is >> tag >> ckpt.stages_done) || tag != "stages_done")
        throw IoError("checkpoint: malformed stages_done");
    ckpt.theta = read_vector(is, "theta");
    if (!(is >> tag >> ckpt.opt.step_count >> ckpt.opt.beta1 >> ckpt.opt.beta2 >>
          ckpt.opt.epsilon) ||
        tag != "opt")
        throw IoError("checkpoint: malformed optimizer line");
    ckpt.opt.first_moment = read_vector(is, "first_moment");
    ckpt.opt.second_moment = read_vector(is, "second_moment");
    std::size_t n_stages = 0;
    if (!(is >> tag >> n_stages) || tag != "history_stages")
        throw IoError("checkpoint: malformed history");
    for (std::size_t k = 0; k < n_stages; ++k) {
        EwcHistory::Stage st;
        st.theta_star = read_vector(is, "theta_star");
        st.fisher = read_vector(is, "fisher");
        ckpt.history.stages.push_back(std::move(st));
    }
    std::size_t n_rows = 0;
    if (!(is >> tag >> n_rows) || tag != "lambda_rows")
        throw IoError("checkpoint: malformed lambda rows");
    for (std::size_t k = 0; k < n_rows; ++k)
        ckpt.history.lambda_rows.push_back(read_vector(is, "lambdas"));
    return ckpt;
}

}  // namespace qcl
