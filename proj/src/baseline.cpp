#include "qcl/baseline.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "qcl/errors.hpp"

namespace qcl {

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ParamView {
    std::span<const double> w1;  // n_hidden * n_in
    std::span<const double> b1;  // n_hidden
    std::span<const double> w2;  // n_hidden
    double b2;
};

ParamView view(const FfnnShape& shape, std::span<const double> p) {
    if (static_cast<int>(p.size()) != shape.n_params())
        throw StructuralError("ffnn parameter vector has wrong length");
    const std::size_t nw1 = static_cast<std::size_t>(shape.n_hidden) * shape.n_in;
    const std::size_t nh = static_cast<std::size_t>(shape.n_hidden);
    return {p.subspan(0, nw1), p.subspan(nw1, nh), p.subspan(nw1 + nh, nh), p[nw1 + 2 * nh]};
}

void hidden_activations(const FfnnShape& shape, const ParamView& pv, std::span<const double> x,
                        std::vector<double>& hidden) {
    hidden.resize(shape.n_hidden);
    for (int i = 0; i < shape.n_hidden; ++i) {
        double z = pv.b1[i];
        const double* w = &pv.w1[static_cast<std::size_t>(i) * shape.n_in];
        for (int j = 0; j < shape.n_in; ++j) z += w[j] * x[j];
        hidden[i] = sigmoid(z);
    }
}

}  // namespace

double ffnn_forward(const FfnnShape& shape, std::span<const double> params,
                    std::span<const double> x) {
    if (static_cast<int>(x.size()) != shape.n_in)
        throw StructuralError("ffnn input has wrong length");
    const ParamView pv = view(shape, params);
    std::vector<double> hidden;
    hidden_activations(shape, pv, x, hidden);
    double z = pv.b2;
    for (int i = 0; i < shape.n_hidden; ++i) z += pv.w2[i] * hidden[i];
    return sigmoid(z);
}

std::vector<double> ffnn_grad(const FfnnShape& shape, std::span<const double> params,
                              std::span<const double> x, const std::array<double, 2>& label) {
    if (static_cast<int>(x.size()) != shape.n_in)
        throw StructuralError("ffnn input has wrong length");
    const ParamView pv = view(shape, params);
    std::vector<double> hidden;
    hidden_activations(shape, pv, x, hidden);
    double z = pv.b2;
    for (int i = 0; i < shape.n_hidden; ++i) z += pv.w2[i] * hidden[i];
    const double out = sigmoid(z);

    // dL/dout with the shared clamping convention, then sigmoid backward.
    const double dl_dout = -label[0] / clamp_proba(out) + label[1] / clamp_proba(1.0 - out);
    const double dz2 = dl_dout * out * (1.0 - out);

    std::vector<double> grad(shape.n_params(), 0.0);
    const std::size_t nw1 = static_cast<std::size_t>(shape.n_hidden) * shape.n_in;
    const std::size_t nh = static_cast<std::size_t>(shape.n_hidden);
    for (int i = 0; i < shape.n_hidden; ++i) {
        grad[nw1 + nh + i] = dz2 * hidden[i];                       // w2
        const double dz1 = dz2 * pv.w2[i] * hidden[i] * (1.0 - hidden[i]);
        grad[nw1 + i] = dz1;                                        // b1
        double* gw = &grad[static_cast<std::size_t>(i) * shape.n_in];
        for (int j = 0; j < shape.n_in; ++j) gw[j] = dz1 * x[j];    // w1
    }
    grad[nw1 + 2 * nh] = dz2;                                       // b2
    return grad;
}

std::pair<double, double> FfnnModel::predict_proba(std::span<const double> theta,
                                                   const Sample& sample) const {
    const double out = ffnn_forward(shape_, theta, sample.features);
    return {out, 1.0 - out};
}

std::vector<double> FfnnModel::loss_grad_sample(std::span<const double> theta,
                                                const Sample& sample) const {
    return ffnn_grad(shape_, theta, sample.features, sample.label);
}

std::vector<double> ffnn_init(const FfnnShape& shape, Rng& rng) {
    std::vector<double> p(shape.n_params(), 0.0);
    const std::size_t nw1 = static_cast<std::size_t>(shape.n_hidden) * shape.n_in;
    const std::size_t nh = static_cast<std::size_t>(shape.n_hidden);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(shape.n_in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(shape.n_hidden));
    for (std::size_t i = 0; i < nw1; ++i) p[i] = uniform_in(rng, -s1, s1);
    for (std::size_t i = 0; i < nh; ++i) p[nw1 + nh + i] = uniform_in(rng, -s2, s2);
    return p;
}

std::vector<double> ffnn_fisher(const FfnnShape& shape, std::span<const double> params_star,
                                const std::vector<Sample>& dataset, int n_threads) {
    const FfnnModel model(shape);
    return model_fisher_diagonal(model, params_star, dataset, n_threads);
}

// ---------------------------------------------------------------------------

ThetaInit uniform_theta_init(int n_params, double lo, double hi) {
    return [n_params, lo, hi](Rng& rng) {
        std::vector<double> theta(n_params);
        for (auto& t : theta) t = uniform_in(rng, lo, hi);
        return theta;
    };
}

namespace {

constexpr std::uint64_t kThetaInitSalt = 0x7e7a;

}  // namespace

ContinualRunResult run_continual(
    const ClassifierModel& model, const ThetaInit& init,
    const std::vector<const TaskDataset*>& tasks, std::vector<StageConfig> stage_configs,
    std::uint64_t master_seed, int n_threads, const Checkpoint* resume,
    const std::function<void(int, const ContinualRunResult&)>& on_stage_done) {
    if (tasks.empty()) throw ArgumentError("run_continual needs at least one task");
    if (tasks.size() != stage_configs.size())
        throw ArgumentError("stage count must equal task count");

    ContinualRunResult result;
    std::size_t first_stage = 0;
    if (resume) {
        if (resume->stages_done < 0 ||
            static_cast<std::size_t>(resume->stages_done) > tasks.size())
            throw ArgumentError("checkpoint stage count does not fit this task sequence");
        result.theta = resume->theta;
        result.history = resume->history;
        first_stage = static_cast<std::size_t>(resume->stages_done);
    } else {
        Rng init_rng(mix_seed(master_seed, kThetaInitSalt));
        result.theta = init(init_rng);
    }
    if (static_cast<int>(result.theta.size()) != model.n_params())
        throw StructuralError("theta init does not match model parameter count");

    std::vector<const TaskDataset*> seen;
    for (std::size_t k = 0; k < first_stage; ++k) seen.push_back(tasks[k]);
    for (std::size_t k = first_stage; k < tasks.size(); ++k) {
        seen.push_back(tasks[k]);
        stage_configs[k].seed = master_seed;
        StageResult stage = train_stage(model, result.theta, *tasks[k], stage_configs[k],
                                        result.history, seen, n_threads);
        result.metrics.insert(result.metrics.end(), stage.metrics.begin(), stage.metrics.end());
        result.stages.push_back(std::move(stage));
        if (on_stage_done) on_stage_done(static_cast<int>(k) + 1, result);
    }
    return result;
}

std::vector<SweepRow> lambda_sweep(const ClassifierModel& model, const ThetaInit& init,
                                   const TaskDataset& task_a, const TaskDataset& task_b,
                                   const std::vector<double>& lambdas, int repeats,
                                   StageConfig stage_a, StageConfig stage_b,
                                   std::uint64_t base_seed, int n_threads) {
    if (repeats < 1) throw ArgumentError("repeats must be >= 1");
    if (lambdas.empty()) throw ArgumentError("lambda grid is empty");

    std::vector<SweepRow> rows;
    for (int r = 0; r < repeats; ++r) {
        const std::uint64_t master = base_seed + static_cast<std::uint64_t>(r);

        // Stage A does not depend on lambda: train it once per repeat.
        Rng init_rng(mix_seed(master, kThetaInitSalt));
        std::vector<double> theta_a = init(init_rng);
        EwcHistory history_a;
        StageConfig cfg_a = stage_a;
        cfg_a.seed = master;
        cfg_a.lambdas.clear();
        train_stage(model, theta_a, task_a, cfg_a, history_a, {&task_a}, n_threads);

        for (double lam : lambdas) {
            std::vector<double> theta = theta_a;
            EwcHistory history = history_a;
            StageConfig cfg_b = stage_b;
            cfg_b.seed = master;
            cfg_b.lambdas = {lam};
            train_stage(model, theta, task_b, cfg_b, history, {&task_a, &task_b}, n_threads);
            SweepRow row;
            row.lambda = lam;
            row.seed = master;
            row.acc_task_a = evaluate_accuracy(model, theta, task_a.test, n_threads);
            row.acc_task_b = evaluate_accuracy(model, theta, task_b.test, n_threads);
            row.overall = 0.5 * (row.acc_task_a + row.acc_task_b);
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows) {
    std::map<double, SweepSummary> acc;
    std::map<double, int> counts;
    for (const auto& r : rows) {
        auto& s = acc[r.lambda];
        s.lambda = r.lambda;
        s.mean_acc_a += r.acc_task_a;
        s.mean_acc_b += r.acc_task_b;
        s.mean_overall += r.overall;
        ++counts[r.lambda];
    }
    std::vector<SweepSummary> out;
    for (auto& [lam, s] : acc) {
        const double inv = 1.0 / counts[lam];
        s.mean_acc_a *= inv;
        s.mean_acc_b *= inv;
        s.mean_overall *= inv;
        out.push_back(s);
    }
    return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "lambda,seed,acc_task_a,acc_task_b,overall\n";
    char buf[40];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g", r.lambda);
        os << buf << ',' << r.seed << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.acc_task_a);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.acc_task_b);
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", r.overall);
        os << buf << '\n';
    }
    return os.str();
}

}  // namespace qcl
