#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcl/autodiff.hpp"
#include "qcl/data.hpp"
#include "qcl/rng.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Classical image pipeline

struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // row-major, >= 0

    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

enum class VectorNorm { UNIT_L2, MAX_ABS };

// 16x16 grid -> flatten to 256 -> normalize -> sum adjacent pairs -> 128.
std::vector<double> image_to_128(const Image& img, VectorNorm norm = VectorNorm::UNIT_L2);

Image resize_bilinear(const Image& src, int out_w, int out_h);

// ---------------------------------------------------------------------------
// PCA with per-coordinate standardization of the projected features

struct PcaModel {
    std::vector<double> mean;                     // input-space mean
    std::vector<std::vector<double>> components;  // k orthonormal rows
    std::vector<double> feature_means;            // of raw projections, length k
    std::vector<double> feature_stds;             // > 0
    int skipped_components = 0;                   // zero-variance directions dropped
};

PcaModel pca_fit(const std::vector<std::vector<double>>& samples, int k);
std::vector<double> pca_apply(const PcaModel& model, const std::vector<double>& x);

// ---------------------------------------------------------------------------
// Engineered quantum labels

struct EngineerOptions {
    double t = 4.0;                 // feature-encoding interaction strength
    double threshold_lo = -0.2;     // label 1 below this
    double threshold_hi = 0.2;      // label 0 above this
    double train_fraction = 5.0 / 6.0;
    std::uint64_t split_seed = 1;   // shuffle before the train/test split
    double min_class_fraction = 0.0;  // below this, the draw counts as failed
};

// Labels each 10-vector by the readout <Z_1> of the 10-qubit 3-block CZ
// classifier at fixed random theta_rand (in [0,2pi]^90), after feature
// encoding. Samples inside the dead band (lo, hi) are discarded. Throws
// GenerationError when everything is discarded or one class is empty.
TaskDataset engineer_labels(const std::vector<std::vector<double>>& xs,
                            const std::vector<double>& theta_rand,
                            const EngineerOptions& opts = {});

struct EngineerStats {
    int total = 0;
    int kept = 0;
    int label0 = 0;
    int label1 = 0;
};
EngineerStats engineer_stats(const TaskDataset& ds, int total_inputs);

// ---------------------------------------------------------------------------
// Cluster-Ising model

// H(h) = -sum_{j=1}^{n-2} X_{j-1} Z_j X_{j+1} + h sum_{j=0}^{n-2} Y_j Y_{j+1}
// (0-indexed, open boundary). YY terms are omitted when h == 0.
PauliObservable cluster_ising_hamiltonian(int n, double h);

// Dense diagonalization; lowest eigenpair. n <= 12 unless allow_large, which
// extends the budget to 14.
std::pair<double, StateVector> exact_ground_state(int n, double h, bool allow_large = false);

enum class PrepOptimizer { NADAM, PLAIN_GD };

struct GroundPrepOptions {
    int n_blocks = 5;
    int max_iters = 2000;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    GradMethod grad_method = GradMethod::ParamShift;
    // Converged when |energy change| < tol over a full window of iterations.
    double energy_tol = 1e-6;
    int window = 20;
    int restarts = 1;  // best-of-k over derived seeds
    // The SPT-side landscape has near-flat edge-mode valleys where plain
    // gradient descent stalls well above the ground energy; Nadam resolves
    // them and is the default.
    PrepOptimizer optimizer = PrepOptimizer::NADAM;
    int polish_iters = 0;  // extra low-rate iterations on the best restart
    double polish_lr = 0.01;
};

struct GroundPrepResult {
    std::vector<double> alpha;
    StateVector state;
    double energy = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Plain gradient descent on <H(h)> over the block ansatz (three single-qubit
// layers + two CZ layers per block). Non-convergence returns best-so-far
// with converged = false.
GroundPrepResult variational_ground_prep(int n, double h, const GroundPrepOptions& opts = {});

// String order O_z = (-1)^n <X_0 Y_1 Z_2..Z_{n-3} Y_{n-2} X_{n-1}>; needs n >= 4.
double string_order(const StateVector& state);
PauliObservable string_order_observable(int n);

// ---------------------------------------------------------------------------
// Quantum phase dataset (SPT vs antiferromagnetic)

struct PhaseDatasetOptions {
    PrepKind prep = PrepKind::EXACT;
    std::uint64_t seed = 0;
    GroundPrepOptions prep_options{};  // used when prep == VARIATIONAL
    double spt_lo = 0.0, spt_hi = 0.5;
    double atf_lo = 2.5, atf_hi = 3.0;
};

// Balanced dataset of prepared ground states: h uniform on [spt_lo, spt_hi]
// labeled 0 (SPT) and on [atf_lo, atf_hi] labeled 1 (ATF).
TaskDataset sample_phase_dataset(int n, int count_train, int count_test,
                                 const PhaseDatasetOptions& opts = {});

// Same, keeping the variational parameters for serialization.
struct PhaseDatasetFull {
    TaskDataset ds;
    std::vector<std::vector<double>> alphas_train;
    std::vector<std::vector<double>> alphas_test;
};
PhaseDatasetFull sample_phase_dataset_full(int n, int count_train, int count_test,
                                           const PhaseDatasetOptions& opts = {});

// ---------------------------------------------------------------------------
// Synthetic data

// Two Gaussian blobs at +-separation/2 along a random direction,
// standardized per coordinate over the whole draw.
TaskDataset synthetic_two_class(int dim, int count, double separation, std::uint64_t seed,
                                double train_fraction = 5.0 / 6.0);

// 16x16 grayscale pattern families for image-pipeline experiments. The
// region confines the pattern to the top or bottom rows so two tasks can
// carry their class signal in disjoint slots of the 128-vector.
enum class ImagePattern { DISK, STRIPES_V, STRIPES_H, CHECKER, RINGS, CROSS };
enum class ImageRegion { FULL, TOP, BOTTOM };

Image synthetic_image(ImagePattern pattern, double noise, Rng& rng,
                      ImageRegion region = ImageRegion::FULL);

// Two-class image task through the full image_to_128 pipeline.
TaskDataset synthetic_image_task(ImagePattern class0, ImagePattern class1, int n_train,
                                 int n_test, double noise, std::uint64_t seed,
                                 VectorNorm norm = VectorNorm::UNIT_L2,
                                 ImageRegion region = ImageRegion::FULL);

ImagePattern image_pattern_from_name(const std::string& name);
ImageRegion image_region_from_name(const std::string& name);

// PCA-compressed two-class image task: patterns are flattened, PCA-projected
// to k standardized features, and keep their pattern class as the label.
TaskDataset synthetic_image_pca_task(ImagePattern class0, ImagePattern class1, int count, int k,
                                     double noise, std::uint64_t seed,
                                     double train_fraction = 5.0 / 6.0);

// ---------------------------------------------------------------------------
// File formats

// IDX (big-endian) image/label containers as published for the standard
// clothing-image corpus.
std::vector<Image> load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

// Binary image task from IDX files: keeps class_a as label 0 and class_b as
// label 1, resizes to 16x16, runs image_to_128.
TaskDataset image_task_from_idx(const std::string& images_path, const std::string& labels_path,
                                int class_a, int class_b, int n_train, int n_test,
                                std::uint64_t seed, VectorNorm norm = VectorNorm::UNIT_L2);

// CSV with header f0,...,f{d-1},label and label in {0,1}.
void save_samples_csv(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> load_samples_csv(const std::string& path);

// Phase dataset on disk: index file of h,prep,label rows plus one alpha
// sidecar per variational sample. Loading rebuilds the states.
void save_phase_dataset(const std::string& dir, const std::string& stem,
                        const TaskDataset& ds,
                        const std::vector<std::vector<double>>& alphas_train,
                        const std::vector<std::vector<double>>& alphas_test, int n_qubits,
                        int n_blocks);
TaskDataset load_phase_dataset(const std::string& dir, const std::string& stem);

}  // namespace qcl
