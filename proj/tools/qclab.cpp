// qclab: batch experiment runner for the quantum continual-learning library.
// Subcommands: gradcheck, prepare-data, train, sweep, groundstate.
// Exit codes: 0 success, 2 config error, 3 numeric/convergence failure,
// 4 I/O error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "qcl/errors.hpp"
#include "qcl/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string resume_path;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config) {
    auto* opt = cmd->add_option("--config", flags.config_path, "experiment config file");
    if (needs_config) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "master seed (overrides config)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--threads", flags.threads, "worker thread cap");
}

qcl::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
    qcl::ExperimentConfig cfg = qcl::load_experiment_config(flags.config_path);
    qcl::CliOverrides ov;
    if (flags.seed_set) ov.seed = flags.seed;
    if (!flags.out_dir.empty()) ov.out_dir = flags.out_dir;
    if (flags.threads > 0) ov.threads = flags.threads;
    qcl::apply_overrides(cfg, ov);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum continual-learning experiment runner"};
    app.require_subcommand(1);

    CommonFlags train_flags, sweep_flags, prep_flags, grad_flags;

    auto* train = app.add_subcommand("train", "run a staged training experiment");
    add_common(train, train_flags, true);
    train->add_option("--resume", train_flags.resume_path, "checkpoint to resume from");

    auto* sweep = app.add_subcommand("sweep", "regularization-strength sweep over two tasks");
    add_common(sweep, sweep_flags, true);

    auto* prep = app.add_subcommand("prepare-data", "generate dataset files");
    add_common(prep, prep_flags, true);

    auto* grad = app.add_subcommand("gradcheck", "run the gradient property suite");
    add_common(grad, grad_flags, false);
    qcl::GradCheckOptions grad_opts;
    grad->add_option("--instances", grad_opts.instances, "number of random instances");
    grad->add_option("--tolerance", grad_opts.tolerance, "shift vs FD tolerance");
    grad->add_flag("--inject-sign-flip", grad_opts.inject_sign_flip,
                   "deliberately corrupt one gradient (self-test)");

    auto* ground = app.add_subcommand("groundstate", "prepare a cluster-Ising ground state");
    qcl::GroundStateOptions ground_opts;
    ground->add_option("--n", ground_opts.n, "chain length")->required();
    ground->add_option("--coupling", ground_opts.h, "Ising coupling strength h")->required();
    ground->add_option("--blocks", ground_opts.n_blocks, "ansatz blocks");
    ground->add_option("--iters", ground_opts.max_iters, "gradient-descent iteration cap");
    ground->add_option("--lr", ground_opts.learning_rate, "learning rate");
    ground->add_option("--seed", ground_opts.seed, "seed");
    ground->add_option("--restarts", ground_opts.restarts, "random restarts");
    ground->add_option("--out", ground_opts.out_dir, "output directory");
    bool ground_shift = false;
    ground->add_flag("--shift-grad", ground_shift, "use parameter-shift gradients");
    bool ground_no_exact = false;
    ground->add_flag("--no-exact", ground_no_exact, "skip the dense diagonalization");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            const auto cfg = load_with_overrides(train_flags);
            const auto outcome = qcl::cmd_train(cfg, train_flags.resume_path);
            std::cerr << "train: wrote " << outcome.metrics_path << " and "
                      << outcome.checkpoint_path << "\n";
            return kExitOk;
        }
        if (*sweep) {
            const auto cfg = load_with_overrides(sweep_flags);
            const auto outcome = qcl::cmd_sweep(cfg);
            std::cerr << "sweep: wrote " << outcome.rows_path << " and " << outcome.summary_path
                      << "\n";
            return kExitOk;
        }
        if (*prep) {
            const auto cfg = load_with_overrides(prep_flags);
            const auto raw = qcl::parse_config_file(cfg.config_path);
            qcl::cmd_prepare_data(cfg, raw);
            std::cerr << "prepare-data: wrote datasets under " << cfg.out_dir << "\n";
            return kExitOk;
        }
        if (*grad) {
            if (!grad_flags.config_path.empty()) {
                const auto raw = qcl::parse_config_file(grad_flags.config_path);
                if (const auto* sec = raw.find("gradcheck")) {
                    grad_opts.instances = sec->get_int_or("instances", grad_opts.instances);
                    grad_opts.tolerance = sec->get_double_or("tolerance", grad_opts.tolerance);
                    grad_opts.seed = sec->get_u64_or("seed", grad_opts.seed);
                }
            }
            if (grad_flags.seed_set) grad_opts.seed = grad_flags.seed;
            const auto report = qcl::cmd_gradcheck(grad_opts);
            std::cout << report.summary << "\n";
            return report.pass ? kExitOk : kExitNumeric;
        }
        if (*ground) {
            if (ground_shift) ground_opts.grad_method = qcl::GradMethod::ParamShift;
            if (ground_no_exact) ground_opts.with_exact = false;
            const auto report = qcl::cmd_groundstate(ground_opts);
            std::cout << report.summary << "\n";
            return report.converged ? kExitOk : kExitNumeric;
        }
    } catch (const qcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qcl::IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const qcl::GenerationError& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const qcl::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
