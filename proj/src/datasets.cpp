#include "qcl/datasets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcl/circuit.hpp"
#include "qcl/errors.hpp"
#include "qcl/learning.hpp"
#include "qcl/parallel.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Image pipeline

std::vector<double> image_to_128(const Image& img, VectorNorm norm) {
    if (img.width != 16 || img.height != 16 ||
        img.pixels.size() != static_cast<std::size_t>(16 * 16))
        throw ArgumentError("image_to_128 expects a 16x16 grid");
    std::vector<double> flat = img.pixels;
    for (double v : flat)
        if (v < 0.0) throw ArgumentError("pixel values must be >= 0");

    double scale = 0.0;
    if (norm == VectorNorm::UNIT_L2) {
        for (double v : flat) scale += v * v;
        scale = std::sqrt(scale);
    } else {
        for (double v : flat) scale = std::max(scale, std::abs(v));
    }
    if (scale > 0.0)
        for (double& v : flat) v /= scale;

    std::vector<double> out(128);
    for (int i = 0; i < 128; ++i) out[i] = flat[2 * i] + flat[2 * i + 1];
    return out;
}

Image resize_bilinear(const Image& src, int out_w, int out_h) {
    if (src.width < 1 || src.height < 1) throw ArgumentError("empty source image");
    Image dst;
    dst.width = out_w;
    dst.height = out_h;
    dst.pixels.resize(static_cast<std::size_t>(out_w) * out_h);
    const double sx = static_cast<double>(src.width) / out_w;
    const double sy = static_cast<double>(src.height) / out_h;
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) {
            // pixel-center mapping
            const double fy = std::max(0.0, (r + 0.5) * sy - 0.5);
            const double fx = std::max(0.0, (c + 0.5) * sx - 0.5);
            const int y0 = std::min(static_cast<int>(fy), src.height - 1);
            const int x0 = std::min(static_cast<int>(fx), src.width - 1);
            const int y1 = std::min(y0 + 1, src.height - 1);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wy = fy - y0, wx = fx - x0;
            const double v = (1 - wy) * ((1 - wx) * src.at(y0, x0) + wx * src.at(y0, x1)) +
                             wy * ((1 - wx) * src.at(y1, x0) + wx * src.at(y1, x1));
            dst.pixels[static_cast<std::size_t>(r) * out_w + c] = v;
        }
    }
    return dst;
}

// ---------------------------------------------------------------------------
// PCA

PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int k) {
    if (samples.empty()) throw ArgumentError("pca_fit needs samples");
    const int dim = static_cast<int>(samples[0].size());
    if (k < 1 || k > dim) throw ArgumentError("pca component count out of range");
    if (static_cast<int>(samples.size()) < k + 1)
        throw ArgumentError("pca_fit needs at least k+1 samples");
    const int n = static_cast<int>(samples.size());

    Eigen::MatrixXd X(n, dim);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(samples[i].size()) != dim)
            throw ArgumentError("pca samples have mixed dimensions");
        for (int j = 0; j < dim; ++j) X(i, j) = samples[i][j];
    }
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw ArgumentError("pca eigensolver failed");
    // ascending eigenvalues; walk from the top, skipping degenerate directions
    const double trace = std::max(cov.trace(), 1e-300);
    const double eig_tol = 1e-12 * trace;

    PcaModel model;
    model.mean.assign(mean.data(), mean.data() + dim);
    for (int idx = dim - 1; idx >= 0 && static_cast<int>(model.components.size()) < k; --idx) {
        if (solver.eigenvalues()(idx) <= eig_tol) {
            ++model.skipped_components;
            continue;
        }
        Eigen::VectorXd v = solver.eigenvectors().col(idx);
        // deterministic sign: largest-|entry| coordinate is positive
        int arg = 0;
        for (int j = 1; j < dim; ++j)
            if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
        if (v(arg) < 0.0) v = -v;
        model.components.emplace_back(v.data(), v.data() + dim);
    }
    if (model.components.empty()) throw ArgumentError("pca found no usable components");

    const int kept = static_cast<int>(model.components.size());
    Eigen::MatrixXd proj(n, kept);
    for (int c = 0; c < kept; ++c) {
        Eigen::Map<const Eigen::VectorXd> comp(model.components[c].data(), dim);
        proj.col(c) = X * comp;
    }
    model.feature_means.resize(kept);
    model.feature_stds.resize(kept);
    for (int c = 0; c < kept; ++c) {
        model.feature_means[c] = proj.col(c).mean();
        const double var =
            (proj.col(c).array() - model.feature_means[c]).square().sum() / (n - 1);
        model.feature_stds[c] = std::sqrt(std::max(var, 1e-24));
    }
    return model;
}

std::vector<double> pca_apply(const PcaModel& model, const std::vector<double>& x) {
    if (x.size() != model.mean.size()) throw ArgumentError("pca_apply dimension mismatch");
    const int dim = static_cast<int>(x.size());
    const int k = static_cast<int>(model.components.size());
    std::vector<double> out(k);
    for (int c = 0; c < k; ++c) {
        double dot = 0.0;
        for (int j = 0; j < dim; ++j) dot += model.components[c][j] * (x[j] - model.mean[j]);
        out[c] = (dot - model.feature_means[c]) / model.feature_stds[c];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Helpers shared by the dataset builders

namespace {

// Stratified split: both classes land in both halves whenever possible.
TaskDataset split_dataset(std::vector<Sample> samples, double train_fraction, Rng& rng,
                          TaskKind kind) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < samples.size(); ++i)
        by_class[samples[i].label_index()].push_back(i);

    TaskDataset ds;
    ds.kind = kind;
    for (auto& idx : by_class) {
        // shuffle within class
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
        std::size_t n_train = static_cast<std::size_t>(
            std::lround(train_fraction * static_cast<double>(idx.size())));
        if (n_train == idx.size() && !idx.empty()) --n_train;  // keep test nonempty per class
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (i < n_train)
                ds.train.push_back(samples[idx[i]]);
            else
                ds.test.push_back(samples[idx[i]]);
        }
    }
    // interleave away the by-class ordering
    for (auto* split : {&ds.train, &ds.test})
        for (std::size_t i = split->size(); i > 1; --i)
            std::swap((*split)[i - 1], (*split)[uniform_index(rng, i)]);
    return ds;
}

}  // namespace

// ---------------------------------------------------------------------------
// Engineered quantum labels

TaskDataset engineer_labels(const std::vector<std::vector<double>>& xs,
                            const std::vector<double>& theta_rand, const EngineerOptions& opts) {
    if (xs.empty()) throw ArgumentError("engineer_labels needs inputs");
    if (!(opts.threshold_lo < 0.0 && 0.0 < opts.threshold_hi))
        throw ArgumentError("thresholds must straddle zero");
    const int n = static_cast<int>(xs[0].size());
    if (n < 2) throw ArgumentError("need at least two features");
    const Circuit classifier = build_classifier(n, 3, Entangler::CZ, 1);
    if (static_cast<int>(theta_rand.size()) != classifier.n_params)
        throw ArgumentError("theta_rand must have length " + std::to_string(classifier.n_params));

    std::vector<Sample> kept;
    int n_label[2] = {0, 0};
    for (const auto& x : xs) {
        if (static_cast<int>(x.size()) != n)
            throw ArgumentError("engineered inputs have mixed dimensions");
        const Circuit enc = build_feature_encoding(x, opts.t);
        const StateVector encoded = evaluate(enc, {}, {});
        const StateVector out = evaluate(classifier, theta_rand, {}, &encoded);
        const double z = projector_probability(out, 1, 0) - projector_probability(out, 1, 1);
        int label;
        if (z > opts.threshold_hi)
            label = 0;
        else if (z < opts.threshold_lo)
            label = 1;
        else
            continue;
        ++n_label[label];
        Sample s;
        s.features = x;
        s.label = one_hot(label);
        kept.push_back(std::move(s));
    }
    if (kept.empty()) throw GenerationError("all samples fell in the dead band; re-draw theta");
    if (n_label[0] == 0 || n_label[1] == 0)
        throw GenerationError("engineered labels are single-class; re-draw theta");
    const double minority =
        static_cast<double>(std::min(n_label[0], n_label[1])) / static_cast<double>(kept.size());
    if (minority < opts.min_class_fraction)
        throw GenerationError("engineered labels too imbalanced; re-draw theta");

    Rng rng(mix_seed(opts.split_seed, 0x5e11));
    TaskDataset ds = split_dataset(std::move(kept), opts.train_fraction, rng,
                                   TaskKind::ENGINEERED_Q);
    ds.name = "engineered";
    return ds;
}

EngineerStats engineer_stats(const TaskDataset& ds, int total_inputs) {
    EngineerStats st;
    st.total = total_inputs;
    st.kept = static_cast<int>(ds.train.size() + ds.test.size());
    for (const auto* split : {&ds.train, &ds.test})
        for (const auto& s : *split)
            s.label_index() == 0 ? ++st.label0 : ++st.label1;
    return st;
}

// ---------------------------------------------------------------------------
// Cluster-Ising model

PauliObservable cluster_ising_hamiltonian(int n, double h) {
    if (n < 3) throw ArgumentError("cluster-Ising model needs n >= 3");
    PauliObservable obs;
    for (int j = 1; j <= n - 2; ++j) {
        PauliTerm t;
        t.coeff = -1.0;
        t.paulis[j - 1] = Pauli::X;
        t.paulis[j] = Pauli::Z;
        t.paulis[j + 1] = Pauli::X;
        obs.terms.push_back(std::move(t));
    }
    if (h != 0.0) {
        for (int j = 0; j <= n - 2; ++j) {
            PauliTerm t;
            t.coeff = h;
            t.paulis[j] = Pauli::Y;
            t.paulis[j + 1] = Pauli::Y;
            obs.terms.push_back(std::move(t));
        }
    }
    return obs;
}

std::pair<double, StateVector> exact_ground_state(int n, double h, bool allow_large) {
    const int cap = allow_large ? 14 : 12;
    if (n < 3) throw ArgumentError("cluster-Ising model needs n >= 3");
    if (n > cap)
        throw CapacityError("dense diagonalization capped at n = " + std::to_string(cap));
    const PauliObservable ham = cluster_ising_hamiltonian(n, h);
    const std::size_t dim = std::size_t{1} << n;

    // Every term has an even Y count, so the matrix is real symmetric.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& term : ham.terms) {
        std::size_t flip = 0, zmask = 0;
        int y_count = 0;
        for (const auto& [q, p] : term.paulis) {
            const std::size_t bit = std::size_t{1} << q;
            if (p == Pauli::X) flip |= bit;
            if (p == Pauli::Y) {
                flip |= bit;
                zmask |= bit;
                ++y_count;
            }
            if (p == Pauli::Z) zmask |= bit;
        }
        const double yf = (y_count % 4 == 0) ? 1.0 : -1.0;  // i^y for even y
        for (std::size_t x = 0; x < dim; ++x) {
            const double sign = __builtin_parityll(x & zmask) ? -1.0 : 1.0;
            m(x ^ flip, x) += term.coeff * sign * yf;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw ArgumentError("ground-state eigensolver failed");
    const double energy = solver.eigenvalues()(0);
    StateVector gs;
    gs.n_qubits = n;
    gs.amps.resize(dim);
    for (std::size_t x = 0; x < dim; ++x) gs.amps[x] = cdouble(solver.eigenvectors()(x, 0), 0.0);

    // residual check: ||H psi - E psi|| < 1e-8
    const StateVector hpsi = apply_observable(gs, ham);
    double res = 0.0;
    for (std::size_t x = 0; x < dim; ++x) {
        const cdouble d = hpsi.amps[x] - energy * gs.amps[x];
        res += std::norm(d);
    }
    if (std::sqrt(res) > 1e-8) throw ArgumentError("ground-state residual check failed");
    return {energy, std::move(gs)};
}

namespace {

struct DescentOutcome {
    double best_energy = std::numeric_limits<double>::infinity();
    std::vector<double> best_alpha;
    bool converged = false;
    int iterations = 0;
};

// Minimizes <ham> from the given starting point, tracking the best energy
// seen. Convergence: |dE| < tol over a full window.
DescentOutcome minimize_energy(const Circuit& ansatz, const PauliObservable& ham,
                               std::vector<double> alpha, const GroundPrepOptions& opts,
                               int max_iters, double lr) {
    DescentOutcome out;
    out.best_alpha = alpha;
    OptimizerState nadam = OptimizerState::fresh(alpha.size());
    double prev_e = std::numeric_limits<double>::infinity();
    int calm = 0;
    for (int it = 0; it < max_iters; ++it) {
        out.iterations = it + 1;
        const double e = expectation(evaluate(ansatz, alpha, {}), ham);
        if (e < out.best_energy) {
            out.best_energy = e;
            out.best_alpha = alpha;
        }
        if (std::abs(e - prev_e) < opts.energy_tol) {
            if (++calm >= opts.window) {
                out.converged = true;
                break;
            }
        } else {
            calm = 0;
        }
        prev_e = e;
        const auto grad = expectation_grad_all(ansatz, alpha, {}, ham, nullptr, opts.grad_method);
        if (opts.optimizer == PrepOptimizer::NADAM) {
            nadam_step(nadam, alpha, grad, lr);
        } else {
            for (std::size_t j = 0; j < alpha.size(); ++j) alpha[j] -= lr * grad[j];
        }
    }
    return out;
}

}  // namespace

GroundPrepResult variational_ground_prep(int n, double h, const GroundPrepOptions& opts) {
    if (opts.n_blocks < 1) throw ArgumentError("need at least one ansatz block");
    if (opts.max_iters < 1) throw ArgumentError("max_iters must be >= 1");
    const PauliObservable ham = cluster_ising_hamiltonian(n, h);
    const Circuit ansatz = build_classifier(n, opts.n_blocks, Entangler::CZ, 0);

    DescentOutcome best;
    for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
        Rng rng(mix_seed(opts.seed, 0xa1f + restart));
        std::vector<double> alpha(ansatz.n_params);
        for (auto& a : alpha)
            a = uniform_in(rng, -3.14159265358979323846, 3.14159265358979323846);
        DescentOutcome run = minimize_energy(ansatz, ham, std::move(alpha), opts, opts.max_iters,
                                             opts.learning_rate);
        if (run.best_energy < best.best_energy) best = std::move(run);
    }
    if (opts.polish_iters > 0) {
        DescentOutcome polished = minimize_energy(ansatz, ham, best.best_alpha, opts,
                                                  opts.polish_iters, opts.polish_lr);
        if (polished.best_energy < best.best_energy) {
            best.best_energy = polished.best_energy;
            best.best_alpha = std::move(polished.best_alpha);
        }
        best.converged = best.converged || polished.converged;
    }

    GroundPrepResult result;
    result.alpha = std::move(best.best_alpha);
    result.state = evaluate(ansatz, result.alpha, {});
    result.energy = expectation(result.state, ham);
    result.converged = best.converged;
    result.iterations = best.iterations;
    return result;
}

PauliObservable string_order_observable(int n) {
    if (n < 4) throw ArgumentError("string order needs n >= 4");
    PauliTerm t;
    t.coeff = (n % 2 == 0) ? 1.0 : -1.0;  // (-1)^n
    t.paulis[0] = Pauli::X;
    t.paulis[1] = Pauli::Y;
    for (int k = 2; k <= n - 3; ++k) t.paulis[k] = Pauli::Z;
    t.paulis[n - 2] = Pauli::Y;
    t.paulis[n - 1] = Pauli::X;
    PauliObservable obs;
    obs.terms.push_back(std::move(t));
    return obs;
}

double string_order(const StateVector& state) {
    return expectation(state, string_order_observable(state.n_qubits));
}

// ---------------------------------------------------------------------------
// Quantum phase dataset

namespace {

struct PhaseDraw {
    double h = 0.0;
    int label = 0;  // 0 = SPT, 1 = ATF
};

std::vector<PhaseDraw> draw_phase_points(int count, const PhaseDatasetOptions& opts, Rng& rng) {
    // balanced: alternate phases, extra draw goes to SPT
    std::vector<PhaseDraw> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        PhaseDraw d;
        d.label = i % 2;
        d.h = d.label == 0 ? uniform_in(rng, opts.spt_lo, opts.spt_hi)
                           : uniform_in(rng, opts.atf_lo, opts.atf_hi);
        out.push_back(d);
    }
    return out;
}

}  // namespace

PhaseDatasetFull sample_phase_dataset_full(int n, int count_train, int count_test,
                                           const PhaseDatasetOptions& opts) {
    if (count_train < 1 || count_test < 1) throw ArgumentError("phase dataset counts must be >= 1");
    Rng rng(mix_seed(opts.seed, 0x9a5e));
    const auto train_pts = draw_phase_points(count_train, opts, rng);
    const auto test_pts = draw_phase_points(count_test, opts, rng);

    PhaseDatasetFull out;
    out.ds.kind = TaskKind::QUANTUM_PHASE;
    out.ds.name = "phase";

    auto build_split = [&](const std::vector<PhaseDraw>& pts, std::vector<Sample>& split,
                           std::vector<std::vector<double>>& alphas, std::uint64_t salt) {
        split.resize(pts.size());
        alphas.resize(pts.size());
        parallel_for(pts.size(), default_threads(), [&](std::size_t i) {
            Sample s;
            s.label = one_hot(pts[i].label);
            auto recipe = std::make_shared<StateRecipe>();
            recipe->h = pts[i].h;
            recipe->prep = opts.prep;
            s.recipe = recipe;
            if (opts.prep == PrepKind::EXACT) {
                auto [e, gs] = exact_ground_state(n, pts[i].h);
                s.input_state = std::make_shared<StateVector>(std::move(gs));
            } else {
                GroundPrepOptions po = opts.prep_options;
                po.seed = mix_seed(opts.seed, salt + i);
                const auto prep = variational_ground_prep(n, pts[i].h, po);
                s.input_state = std::make_shared<StateVector>(prep.state);
                alphas[i] = prep.alpha;
            }
            split[i] = std::move(s);
        });
    };
    build_split(train_pts, out.ds.train, out.alphas_train, 0x7000);
    build_split(test_pts, out.ds.test, out.alphas_test, 0x8000);
    return out;
}

TaskDataset sample_phase_dataset(int n, int count_train, int count_test,
                                 const PhaseDatasetOptions& opts) {
    return sample_phase_dataset_full(n, count_train, count_test, opts).ds;
}

// ---------------------------------------------------------------------------
// Synthetic data

TaskDataset synthetic_two_class(int dim, int count, double separation, std::uint64_t seed,
                                double train_fraction) {
    if (dim < 1 || count < 4) throw ArgumentError("synthetic_two_class needs dim >= 1, count >= 4");
    if (separation < 0.0) throw ArgumentError("separation must be >= 0");
    Rng rng(mix_seed(seed, 0xb10b));

    // random unit direction for the class offset
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (auto& d : dir) {
        d = gaussian(rng);
        norm += d * d;
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (auto& d : dir) d /= norm;

    std::vector<Sample> samples(count);
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        const double side = label == 0 ? 0.5 : -0.5;
        Sample s;
        s.features.resize(dim);
        for (int j = 0; j < dim; ++j)
            s.features[j] = side * separation * dir[j] + gaussian(rng);
        s.label = one_hot(label);
        samples[i] = std::move(s);
    }

    // standardize per coordinate over the full draw
    for (int j = 0; j < dim; ++j) {
        double mean = 0.0;
        for (const auto& s : samples) mean += s.features[j];
        mean /= count;
        double var = 0.0;
        for (const auto& s : samples) var += (s.features[j] - mean) * (s.features[j] - mean);
        var /= std::max(1, count - 1);
        const double std_dev = std::sqrt(std::max(var, 1e-24));
        for (auto& s : samples) s.features[j] = (s.features[j] - mean) / std_dev;
    }

    TaskDataset ds = split_dataset(std::move(samples), train_fraction, rng, TaskKind::SYNTHETIC);
    ds.name = "two_class_blobs";
    return ds;
}

Image synthetic_image(ImagePattern pattern, double noise, Rng& rng, ImageRegion region) {
    Image img;
    img.width = 16;
    img.height = 16;
    img.pixels.assign(256, 0.0);
    const int ox = static_cast<int>(uniform_index(rng, 4));
    const int oy = static_cast<int>(uniform_index(rng, 4));
    const double jx = uniform_in(rng, -2.0, 2.0);
    const double jy = uniform_in(rng, -2.0, 2.0);
    const int row_lo = region == ImageRegion::BOTTOM ? 8 : 0;
    const int row_hi = region == ImageRegion::TOP ? 8 : 16;
    // pattern coordinates live in the region's own frame
    const double rows = row_hi - row_lo;
    for (int rr = 0; rr < 16; ++rr) {
        for (int c = 0; c < 16; ++c) {
            if (rr < row_lo || rr >= row_hi) {
                double v = noise * gaussian(rng);
                img.pixels[static_cast<std::size_t>(rr) * 16 + c] = std::clamp(v, 0.0, 1.0);
                continue;
            }
            const int r = region == ImageRegion::FULL
                              ? rr
                              : static_cast<int>((rr - row_lo) * 16.0 / rows);
            double v = 0.0;
            switch (pattern) {
                case ImagePattern::DISK: {
                    const double dr = r - (7.5 + jy), dc = c - (7.5 + jx);
                    v = (dr * dr + dc * dc <= 4.5 * 4.5) ? 1.0 : 0.0;
                    break;
                }
                case ImagePattern::STRIPES_V: v = ((c + ox) % 4 < 2) ? 1.0 : 0.0; break;
                case ImagePattern::STRIPES_H: v = ((r + oy) % 4 < 2) ? 1.0 : 0.0; break;
                case ImagePattern::CHECKER:
                    v = (((r + oy) / 4 + (c + ox) / 4) % 2 == 0) ? 1.0 : 0.0;
                    break;
                case ImagePattern::RINGS: {
                    const double dr = r - (7.5 + jy), dc = c - (7.5 + jx);
                    const double dist = std::sqrt(dr * dr + dc * dc);
                    v = (static_cast<int>(dist) % 4 < 2) ? 1.0 : 0.0;
                    break;
                }
                case ImagePattern::CROSS: {
                    const int rc = r - oy / 2, cc = c - ox / 2;
                    v = ((rc >= 6 && rc <= 9) || (cc >= 6 && cc <= 9)) ? 1.0 : 0.0;
                    break;
                }
            }
            v += noise * gaussian(rng);
            img.pixels[static_cast<std::size_t>(rr) * 16 + c] = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

TaskDataset synthetic_image_task(ImagePattern class0, ImagePattern class1, int n_train,
                                 int n_test, double noise, std::uint64_t seed, VectorNorm norm,
                                 ImageRegion region) {
    if (n_train < 2 || n_test < 2) throw ArgumentError("image task needs at least 2 per split");
    Rng rng(mix_seed(seed, 0x16a6));
    TaskDataset ds;
    ds.kind = TaskKind::IMAGE_128;
    ds.name = "synthetic_images";
    auto fill = [&](std::vector<Sample>& split, int count) {
        for (int i = 0; i < count; ++i) {
            const int label = i % 2;
            Sample s;
            s.features = image_to_128(
                synthetic_image(label == 0 ? class0 : class1, noise, rng, region), norm);
            s.label = one_hot(label);
            split.push_back(std::move(s));
        }
    };
    fill(ds.train, n_train);
    fill(ds.test, n_test);
    return ds;
}

TaskDataset synthetic_image_pca_task(ImagePattern class0, ImagePattern class1, int count, int k,
                                     double noise, std::uint64_t seed, double train_fraction) {
    if (count < 2 * (k + 1)) throw ArgumentError("need more samples than PCA components");
    Rng rng(mix_seed(seed, 0x9ca));
    std::vector<std::vector<double>> pixels;
    std::vector<int> labels;
    pixels.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        pixels.push_back(synthetic_image(label == 0 ? class0 : class1, noise, rng).pixels);
        labels.push_back(label);
    }
    const PcaModel pca = pca_fit(pixels, k);
    std::vector<Sample> samples(count);
    for (int i = 0; i < count; ++i) {
        samples[i].features = pca_apply(pca, pixels[i]);
        samples[i].label = one_hot(labels[i]);
    }
    TaskDataset ds = split_dataset(std::move(samples), train_fraction, rng, TaskKind::PCA_10);
    ds.name = "synthetic_images_pca";
    return ds;
}

ImageRegion image_region_from_name(const std::string& name) {
    if (name == "full") return ImageRegion::FULL;
    if (name == "top") return ImageRegion::TOP;
    if (name == "bottom") return ImageRegion::BOTTOM;
    throw ArgumentError("unknown image region '" + name + "'");
}

ImagePattern image_pattern_from_name(const std::string& name) {
    if (name == "disk") return ImagePattern::DISK;
    if (name == "stripes_v") return ImagePattern::STRIPES_V;
    if (name == "stripes_h") return ImagePattern::STRIPES_H;
    if (name == "checker") return ImagePattern::CHECKER;
    if (name == "rings") return ImagePattern::RINGS;
    if (name == "cross") return ImagePattern::CROSS;
    throw ArgumentError("unknown image pattern '" + name + "'");
}

// ---------------------------------------------------------------------------
// IDX files

namespace {

std::uint32_t read_be32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated IDX header");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

}  // namespace

std::vector<Image> load_idx_images(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open IDX image file: " + path);
    if (read_be32(is) != 0x00000803u) throw IoError("bad IDX image magic in " + path);
    const std::uint32_t count = read_be32(is);
    const std::uint32_t rows = read_be32(is);
    const std::uint32_t cols = read_be32(is);
    std::vector<Image> out(count);
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size()))
            throw IoError("truncated IDX image data in " + path);
        Image& img = out[i];
        img.width = static_cast<int>(cols);
        img.height = static_cast<int>(rows);
        img.pixels.resize(buf.size());
        for (std::size_t p = 0; p < buf.size(); ++p) img.pixels[p] = buf[p] / 255.0;
    }
    return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open IDX label file: " + path);
    if (read_be32(is) != 0x00000801u) throw IoError("bad IDX label magic in " + path);
    const std::uint32_t count = read_be32(is);
    std::vector<int> out(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        char b;
        if (!is.get(b)) throw IoError("truncated IDX label data in " + path);
        out[i] = static_cast<unsigned char>(b);
    }
    return out;
}

TaskDataset image_task_from_idx(const std::string& images_path, const std::string& labels_path,
                                int class_a, int class_b, int n_train, int n_test,
                                std::uint64_t seed, VectorNorm norm) {
    const auto images = load_idx_images(images_path);
    const auto labels = load_idx_labels(labels_path);
    if (images.size() != labels.size()) throw IoError("IDX image/label counts differ");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == class_a || labels[i] == class_b) keep.push_back(i);
    if (keep.size() < static_cast<std::size_t>(n_train + n_test))
        throw ArgumentError("not enough samples of the requested classes");

    Rng rng(mix_seed(seed, 0x1d0));
    for (std::size_t i = keep.size(); i > 1; --i)
        std::swap(keep[i - 1], keep[uniform_index(rng, i)]);

    TaskDataset ds;
    ds.kind = TaskKind::IMAGE_128;
    ds.name = "idx_images";
    for (int i = 0; i < n_train + n_test; ++i) {
        const std::size_t src = keep[i];
        Image img = images[src];
        if (img.width != 16 || img.height != 16) img = resize_bilinear(img, 16, 16);
        Sample s;
        s.features = image_to_128(img, norm);
        s.label = one_hot(labels[src] == class_a ? 0 : 1);
        (i < n_train ? ds.train : ds.test).push_back(std::move(s));
    }
    return ds;
}

// ---------------------------------------------------------------------------
// CSV and phase-dataset persistence

namespace {

void print_g17(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

void save_samples_csv(const std::string& path, const std::vector<Sample>& samples) {
    if (samples.empty()) throw ArgumentError("refusing to write an empty dataset");
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path);
    const std::size_t dim = samples[0].features.size();
    for (std::size_t j = 0; j < dim; ++j) os << 'f' << j << ',';
    os << "label\n";
    for (const auto& s : samples) {
        if (s.features.size() != dim) throw ArgumentError("mixed feature dimensions");
        for (double v : s.features) {
            print_g17(os, v);
            os << ',';
        }
        os << s.label_index() << '\n';
    }
    if (!os) throw IoError("failed writing " + path);
}

std::vector<Sample> load_samples_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV: " + path);
    std::size_t dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    std::vector<Sample> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Sample s;
        s.features.reserve(dim);
        std::istringstream ls(line);
        std::string tok;
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::getline(ls, tok, ',')) throw IoError("short CSV row in " + path);
            s.features.push_back(std::stod(tok));
        }
        if (!std::getline(ls, tok)) throw IoError("missing label in " + path);
        const int label = std::stoi(tok);
        if (label != 0 && label != 1) throw IoError("labels must be 0/1 in " + path);
        s.label = one_hot(label);
        out.push_back(std::move(s));
    }
    if (out.empty()) throw IoError("no samples in " + path);
    return out;
}

void save_phase_dataset(const std::string& dir, const std::string& stem, const TaskDataset& ds,
                        const std::vector<std::vector<double>>& alphas_train,
                        const std::vector<std::vector<double>>& alphas_test, int n_qubits,
                        int n_blocks) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream os(fs::path(dir) / (stem + ".phase"));
    if (!os) throw IoError("cannot write phase index in " + dir);
    os << "phase " << n_qubits << ' ' << n_blocks << '\n';
    os << "split,idx,h,prep,label,alpha_file\n";

    auto write_split = [&](const char* split, const std::vector<Sample>& samples,
                           const std::vector<std::vector<double>>& alphas) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            if (!s.recipe) throw ArgumentError("phase sample lacks a recipe");
            std::string alpha_file;
            if (s.recipe->prep == PrepKind::VARIATIONAL) {
                if (i >= alphas.size() || alphas[i].empty())
                    throw ArgumentError("variational sample lacks alpha parameters");
                alpha_file = stem + "_" + split + "_" + std::to_string(i) + ".alpha";
                std::ofstream as(fs::path(dir) / alpha_file);
                if (!as) throw IoError("cannot write alpha sidecar " + alpha_file);
                as << "alpha " << alphas[i].size();
                for (double a : alphas[i]) {
                    as << ' ';
                    print_g17(as, a);
                }
                as << '\n';
            }
            os << split << ',' << i << ',';
            print_g17(os, s.recipe->h);
            os << ',' << (s.recipe->prep == PrepKind::EXACT ? "exact" : "variational") << ','
               << s.label_index() << ',' << alpha_file << '\n';
        }
    };
    write_split("train", ds.train, alphas_train);
    write_split("test", ds.test, alphas_test);
    if (!os) throw IoError("failed writing phase index in " + dir);
}

TaskDataset load_phase_dataset(const std::string& dir, const std::string& stem) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(dir) / (stem + ".phase"));
    if (!is) throw IoError("cannot open phase index " + stem + " in " + dir);
    std::string line;
    std::getline(is, line);
    std::istringstream head(line);
    std::string tag;
    int n_qubits = 0, n_blocks = 0;
    if (!(head >> tag >> n_qubits >> n_blocks) || tag != "phase")
        throw IoError("malformed phase index header");
    std::getline(is, line);  // column header

    const Circuit ansatz = build_classifier(n_qubits, n_blocks, Entangler::CZ, 0);
    TaskDataset ds;
    ds.kind = TaskKind::QUANTUM_PHASE;
    ds.name = stem;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string split, idx, h_s, prep_s, label_s, alpha_file;
        std::getline(ls, split, ',');
        std::getline(ls, idx, ',');
        std::getline(ls, h_s, ',');
        std::getline(ls, prep_s, ',');
        std::getline(ls, label_s, ',');
        std::getline(ls, alpha_file);
        Sample s;
        s.label = one_hot(std::stoi(label_s));
        auto recipe = std::make_shared<StateRecipe>();
        recipe->h = std::stod(h_s);
        recipe->prep = prep_s == "exact" ? PrepKind::EXACT : PrepKind::VARIATIONAL;
        s.recipe = recipe;
        if (recipe->prep == PrepKind::EXACT) {
            auto [e, gs] = exact_ground_state(n_qubits, recipe->h);
            s.input_state = std::make_shared<StateVector>(std::move(gs));
        } else {
            std::ifstream as(fs::path(dir) / alpha_file);
            if (!as) throw IoError("missing alpha sidecar " + alpha_file);
            std::string atag;
            std::size_t count = 0;
            if (!(as >> atag >> count) || atag != "alpha")
                throw IoError("malformed alpha sidecar " + alpha_file);
            std::vector<double> alpha(count);
            for (auto& a : alpha)
                if (!(as >> a)) throw IoError("truncated alpha sidecar " + alpha_file);
            s.input_state = std::make_shared<StateVector>(evaluate(ansatz, alpha, {}));
        }
        if (split == "train")
            ds.train.push_back(std::move(s));
        else
            ds.test.push_back(std::move(s));
    }
    if (ds.train.empty() && ds.test.empty()) throw IoError("phase index has no rows");
    return ds;
}

}  // namespace qcl
