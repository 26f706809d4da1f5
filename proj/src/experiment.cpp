#include "qcl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcl/errors.hpp"
#include "qcl/parallel.hpp"

namespace fs = std::filesystem;

namespace qcl {

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string ConfigSection::get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end())
        throw ConfigError("missing key '" + key + "' in section [" + name + "]");
    return it->second;
}

std::string ConfigSection::get_or(const std::string& key, const std::string& fallback) const {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double ConfigSection::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        throw ConfigError("key '" + key + "' in [" + name + "] is not a number");
    }
}

double ConfigSection::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int ConfigSection::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const std::invalid_argument&) {
        throw ConfigError("key '" + key + "' in [" + name + "] is not an integer");
    }
}

int ConfigSection::get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t ConfigSection::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoull(get(key));
    } catch (const std::invalid_argument&) {
        throw ConfigError("key '" + key + "' in [" + name + "] is not an unsigned integer");
    }
}

const ConfigSection* RawConfig::find(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<const ConfigSection*> RawConfig::find_all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

RawConfig parse_config_text(const std::string& text) {
    RawConfig cfg;
    std::istringstream is(text);
    std::string line;
    ConfigSection* current = nullptr;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unclosed section header");
            cfg.sections.push_back({trim(t.substr(1, t.size() - 2)), {}});
            current = &cfg.sections.back();
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        if (!current)
            throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        current->kv[key] = value;
    }
    return cfg;
}

RawConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Experiment assembly

namespace {

constexpr double kPi = 3.14159265358979323846;

ModelSpec parse_model(const ConfigSection& sec) {
    ModelSpec spec;
    const std::string kind = sec.get_or("kind", "quantum");
    if (kind == "quantum") {
        spec.kind = ModelSpec::Kind::QUANTUM;
        auto& q = spec.quantum;
        q.n_qubits = sec.get_int("qubits");
        q.n_blocks = sec.get_int("blocks");
        const std::string ent = sec.get_or("entangler", "cnot");
        if (ent == "cnot")
            q.entangler = Entangler::CNOT;
        else if (ent == "cz")
            q.entangler = Entangler::CZ;
        else
            throw ConfigError("entangler must be cnot or cz");
        q.readout_qubit = sec.get_int_or("readout", 0);
        const std::string rot = sec.get_or("rotation_order", "xzx");
        if (rot == "xzx")
            q.rotation_order = RotationOrder::XZX;
        else if (rot == "zxz")
            q.rotation_order = RotationOrder::ZXZ;
        else
            throw ConfigError("rotation_order must be xzx or zxz");
        const std::string enc = sec.get_or("encoding", "none");
        if (enc == "interleaved")
            q.encoding = EncodingKind::INTERLEAVED;
        else if (enc == "feature")
            q.encoding = EncodingKind::FEATURE;
        else if (enc == "rotation")
            q.encoding = EncodingKind::ROTATION;
        else if (enc == "none")
            q.encoding = EncodingKind::NONE;
        else
            throw ConfigError("encoding must be interleaved, feature, rotation or none");
        q.encode_coeff = sec.get_double_or("encode_coeff", 2.0);
        q.n_encoded = sec.get_int_or("n_encoded", 0);
        q.feature_t = sec.get_double_or("feature_t", 4.0);
        const std::string grad = sec.get_or("grad", "shift");
        if (grad == "shift")
            q.grad_method = GradMethod::ParamShift;
        else if (grad == "adjoint")
            q.grad_method = GradMethod::Adjoint;
        else
            throw ConfigError("grad must be shift or adjoint");
        const std::string init = sec.get_or("init", "sym");
        if (init == "sym") {
            spec.init_lo = -kPi;
            spec.init_hi = kPi;
        } else if (init == "pos") {
            spec.init_lo = 0.0;
            spec.init_hi = 2.0 * kPi;
        } else {
            throw ConfigError("init must be sym or pos");
        }
    } else if (kind == "ffnn") {
        spec.kind = ModelSpec::Kind::FFNN;
        spec.ffnn.n_in = sec.get_int_or("inputs", 10);
        spec.ffnn.n_hidden = sec.get_int_or("hidden", 20);
    } else {
        throw ConfigError("model kind must be quantum or ffnn");
    }
    return spec;
}

StageConfig parse_stage(const ConfigSection& sec, int stage_index) {
    StageConfig cfg;
    cfg.epochs = sec.get_int_or("epochs", 20);
    cfg.batch_size = sec.get_int_or("batch", 25);
    cfg.learning_rate = sec.get_double_or("lr", 0.05);
    cfg.fisher_threshold = sec.get_double_or("fisher_threshold", 0.01);
    cfg.lambdas.assign(static_cast<std::size_t>(std::max(0, stage_index - 1)), 0.0);
    for (const auto& [key, value] : sec.kv) {
        if (key.rfind("lambda.", 0) != 0) continue;
        const int prior = std::stoi(key.substr(7));
        if (prior < 1 || prior >= stage_index)
            throw ConfigError("lambda." + std::to_string(prior) + " refers to a non-prior task");
        cfg.lambdas[prior - 1] = std::stod(value);
    }
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    const RawConfig raw = parse_config_file(path);
    ExperimentConfig cfg;
    cfg.config_path = path;
    {
        std::ifstream is(path, std::ios::binary);
        std::stringstream buf;
        buf << is.rdbuf();
        cfg.config_hash = fnv1a_hash(buf.str());
    }
    if (const auto* exp = raw.find("experiment")) {
        cfg.seed = exp->get_u64_or("seed", 0);
        cfg.out_dir = exp->get_or("out", "runs/out");
        cfg.threads = exp->get_int_or("threads", 0);
    }
    if (const auto* model = raw.find("model")) cfg.model = parse_model(*model);
    const auto tasks = raw.find_all("task");
    for (const auto* t : tasks) {
        TaskSpec spec;
        spec.kind = t->get("kind");
        spec.kv = t->kv;
        cfg.tasks.push_back(std::move(spec));
    }
    const auto stages = raw.find_all("stage");
    int idx = 0;
    for (const auto* s : stages) cfg.stages.push_back(parse_stage(*s, ++idx));
    if (const auto* sweep = raw.find("sweep")) {
        std::istringstream ls(sweep->get("lambdas"));
        double v;
        while (ls >> v) cfg.sweep_lambdas.push_back(v);
        cfg.sweep_repeats = sweep->get_int_or("repeats", 1);
    }
    return cfg;
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& ov) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.threads) cfg.threads = *ov.threads;
}

BuiltModel build_model(const ModelSpec& spec) {
    BuiltModel out;
    if (spec.kind == ModelSpec::Kind::QUANTUM) {
        auto model = std::make_unique<QuantumClassifier>(spec.quantum);
        out.init = uniform_theta_init(model->n_params(), spec.init_lo, spec.init_hi);
        out.model = std::move(model);
    } else {
        auto model = std::make_unique<FfnnModel>(spec.ffnn);
        const FfnnShape shape = spec.ffnn;
        out.init = [shape](Rng& rng) { return ffnn_init(shape, rng); };
        out.model = std::move(model);
    }
    return out;
}

namespace {

ConfigSection section_from_spec(const TaskSpec& spec, const std::string& name) {
    ConfigSection sec;
    sec.name = name;
    sec.kv = spec.kv;
    return sec;
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw IoError("referenced file does not exist: " + path);
}

// Engineered task from synthetic source images: flatten, PCA to 10
// standardized features, then label with the random 90-parameter circuit.
// Re-draws theta on generation failures.
TaskDataset build_engineered_synth(const ConfigSection& sec, std::uint64_t seed) {
    const int count = sec.get_int_or("count", 1200);
    const int pca_k = sec.get_int_or("pca", 10);
    EngineerOptions opts;
    opts.t = sec.get_double_or("t", 4.0);
    opts.threshold_lo = sec.get_double_or("threshold_lo", -0.2);
    opts.threshold_hi = sec.get_double_or("threshold_hi", 0.2);
    opts.split_seed = seed;
    const double noise = sec.get_double_or("noise", 0.05);
    const ImagePattern p0 = image_pattern_from_name(sec.get_or("class0", "disk"));
    const ImagePattern p1 = image_pattern_from_name(sec.get_or("class1", "stripes_v"));

    Rng img_rng(mix_seed(seed, 0x50a0));
    std::vector<std::vector<double>> pixels;
    pixels.reserve(count);
    for (int i = 0; i < count; ++i)
        pixels.push_back(synthetic_image(i % 2 == 0 ? p0 : p1, noise, img_rng).pixels);

    const PcaModel pca = pca_fit(pixels, pca_k);
    std::vector<std::vector<double>> xs;
    xs.reserve(count);
    for (const auto& p : pixels) {
        Image img;
        img.width = 16;
        img.height = 16;
        img.pixels = p;
        (void)img;
        xs.push_back(pca_apply(pca, p));
    }

    const int n_params = 3 * pca_k * 3;
    for (int attempt = 0; attempt < 20; ++attempt) {
        Rng theta_rng(mix_seed(seed, 0x7a9d + attempt));
        std::vector<double> theta_rand(n_params);
        for (auto& t : theta_rand) t = uniform_in(theta_rng, 0.0, 2.0 * kPi);
        try {
            TaskDataset ds = engineer_labels(xs, theta_rand, opts);
            ds.name = "engineered_synth";
            return ds;
        } catch (const GenerationError&) {
            continue;
        }
    }
    throw GenerationError("engineered labels failed after 20 theta draws");
}

}  // namespace

namespace {

TaskDataset build_task_dataset_inner(const ConfigSection& sec, const TaskSpec& spec,
                                     std::uint64_t seed) {

    if (spec.kind == "csv") {
        const std::string train = sec.get("train");
        const std::string test = sec.get("test");
        require_file(train);
        require_file(test);
        TaskDataset ds;
        ds.train = load_samples_csv(train);
        ds.test = load_samples_csv(test);
        ds.kind = TaskKind::PCA_10;
        ds.name = fs::path(train).stem().string();
        return ds;
    }
    if (spec.kind == "synthetic_images") {
        return synthetic_image_task(image_pattern_from_name(sec.get_or("class0", "disk")),
                                    image_pattern_from_name(sec.get_or("class1", "stripes_v")),
                                    sec.get_int_or("train", 300), sec.get_int_or("test", 100),
                                    sec.get_double_or("noise", 0.05), seed,
                                    VectorNorm::UNIT_L2,
                                    image_region_from_name(sec.get_or("region", "full")));
    }
    if (spec.kind == "synthetic_blobs") {
        return synthetic_two_class(sec.get_int_or("dim", 10), sec.get_int_or("count", 600),
                                   sec.get_double_or("separation", 6.0), seed);
    }
    if (spec.kind == "engineered_synth") {
        return build_engineered_synth(sec, seed);
    }
    if (spec.kind == "synthetic_images_pca") {
        return synthetic_image_pca_task(image_pattern_from_name(sec.get_or("class0", "rings")),
                                        image_pattern_from_name(sec.get_or("class1", "cross")),
                                        sec.get_int_or("count", 600), sec.get_int_or("pca", 10),
                                        sec.get_double_or("noise", 0.05), seed);
    }
    if (spec.kind == "phase") {
        if (sec.has("dir")) {
            const std::string dir = sec.get("dir");
            const std::string stem = sec.get("stem");
            require_file((fs::path(dir) / (stem + ".phase")).string());
            return load_phase_dataset(dir, stem);
        }
        PhaseDatasetOptions opts;
        opts.seed = seed;
        opts.prep = sec.get_or("prep", "exact") == "variational" ? PrepKind::VARIATIONAL
                                                                 : PrepKind::EXACT;
        opts.prep_options.n_blocks = sec.get_int_or("blocks", 5);
        opts.prep_options.max_iters = sec.get_int_or("iters", 1500);
        opts.prep_options.grad_method = GradMethod::Adjoint;
        return sample_phase_dataset(sec.get_int("n"), sec.get_int_or("train", 30),
                                    sec.get_int_or("test", 10), opts);
    }
    if (spec.kind == "idx") {
        const std::string images = sec.get("images");
        const std::string labels = sec.get("labels");
        require_file(images);
        require_file(labels);
        return image_task_from_idx(images, labels, sec.get_int_or("class_a", 0),
                                   sec.get_int_or("class_b", 9), sec.get_int_or("train", 500),
                                   sec.get_int_or("test", 100), seed);
    }
    throw ConfigError("unknown task kind '" + spec.kind + "'");
}

}  // namespace

TaskDataset build_task_dataset(const TaskSpec& spec, std::uint64_t master_seed, int task_index) {
    const ConfigSection sec = section_from_spec(spec, "task");
    const std::uint64_t seed = sec.get_u64_or(
        "seed", mix_seed(master_seed, 0xd5 + static_cast<std::uint64_t>(task_index)));
    TaskDataset ds = build_task_dataset_inner(sec, spec, seed);
    if (sec.has("encoding")) {
        const std::string enc = sec.get("encoding");
        EncodingKind kind;
        if (enc == "feature")
            kind = EncodingKind::FEATURE;
        else if (enc == "rotation")
            kind = EncodingKind::ROTATION;
        else if (enc == "interleaved")
            kind = EncodingKind::INTERLEAVED;
        else if (enc == "none")
            kind = EncodingKind::NONE;
        else
            throw ConfigError("unknown task encoding '" + enc + "'");
        for (auto* split : {&ds.train, &ds.test})
            for (auto& s : *split) s.encoding = kind;
    }
    return ds;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command) {
    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "manifest.txt");
    if (!os) throw IoError("cannot write manifest in " + cfg.out_dir);
    os << "artifact qclab 0.1.0\n";
    os << "command " << command << '\n';
    os << "config " << cfg.config_path << '\n';
    os << "config_fnv1a " << cfg.config_hash << '\n';
    os << "seed " << cfg.seed << '\n';
    os << "threads " << cfg.threads << '\n';
}

// ---------------------------------------------------------------------------
// Operations

namespace {

int effective_threads(const ExperimentConfig& cfg) {
    return cfg.threads > 0 ? cfg.threads : default_threads();
}

}  // namespace

TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::string& resume_path) {
    if (cfg.tasks.empty()) throw ConfigError("train needs at least one [task] section");
    if (cfg.tasks.size() != cfg.stages.size())
        throw ConfigError("stage count must equal task count");

    BuiltModel built = build_model(cfg.model);
    std::vector<TaskDataset> datasets;
    datasets.reserve(cfg.tasks.size());
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i)
        datasets.push_back(build_task_dataset(cfg.tasks[i], cfg.seed, static_cast<int>(i)));
    std::vector<const TaskDataset*> task_ptrs;
    for (const auto& d : datasets) task_ptrs.push_back(&d);

    Checkpoint resume;
    const Checkpoint* resume_ptr = nullptr;
    if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        resume_ptr = &resume;
    }

    fs::create_directories(cfg.out_dir);
    write_manifest(cfg, "train");
    const int threads = effective_threads(cfg);

    auto stage_done = [&](int stage, const ContinualRunResult& partial) {
        Checkpoint ckpt;
        ckpt.stages_done = stage;
        ckpt.theta = partial.theta;
        ckpt.opt = partial.stages.back().final_opt;
        ckpt.history = partial.history;
        save_checkpoint((fs::path(cfg.out_dir) / ("checkpoint_stage" + std::to_string(stage) +
                                                  ".txt")).string(),
                        ckpt);
    };

    TrainOutcome out;
    out.run = run_continual(*built.model, built.init, task_ptrs, cfg.stages, cfg.seed, threads,
                            resume_ptr, stage_done);

    out.metrics_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
    {
        std::ofstream os(out.metrics_path);
        if (!os) throw IoError("cannot write " + out.metrics_path);
        write_metrics_csv(os, out.run.metrics);
    }
    out.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.txt").string();
    {
        Checkpoint final_ckpt;
        final_ckpt.stages_done = static_cast<int>(cfg.tasks.size());
        final_ckpt.theta = out.run.theta;
        final_ckpt.opt = out.run.stages.empty() ? OptimizerState::fresh(out.run.theta.size())
                                                : out.run.stages.back().final_opt;
        final_ckpt.history = out.run.history;
        save_checkpoint(out.checkpoint_path, final_ckpt);
    }
    return out;
}

SweepOutcome cmd_sweep(const ExperimentConfig& cfg) {
    if (cfg.tasks.size() != 2 || cfg.stages.size() != 2)
        throw ConfigError("sweep needs exactly two [task] and two [stage] sections");
    if (cfg.sweep_lambdas.empty()) throw ConfigError("sweep needs a [sweep] lambdas list");

    BuiltModel built = build_model(cfg.model);
    TaskDataset task_a = build_task_dataset(cfg.tasks[0], cfg.seed, 0);
    TaskDataset task_b = build_task_dataset(cfg.tasks[1], cfg.seed, 1);

    fs::create_directories(cfg.out_dir);
    write_manifest(cfg, "sweep");
    const int threads = effective_threads(cfg);

    SweepOutcome out;
    out.rows = lambda_sweep(*built.model, built.init, task_a, task_b, cfg.sweep_lambdas,
                            cfg.sweep_repeats, cfg.stages[0], cfg.stages[1], cfg.seed, threads);
    out.summary = summarize_sweep(out.rows);

    out.rows_path = (fs::path(cfg.out_dir) / "sweep.csv").string();
    {
        std::ofstream os(out.rows_path);
        if (!os) throw IoError("cannot write " + out.rows_path);
        os << sweep_to_csv(out.rows);
    }
    out.summary_path = (fs::path(cfg.out_dir) / "sweep_summary.csv").string();
    {
        std::ofstream os(out.summary_path);
        if (!os) throw IoError("cannot write " + out.summary_path);
        os << "lambda,mean_acc_a,mean_acc_b,mean_overall\n";
        char buf[40];
        for (const auto& s : out.summary) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.lambda);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", s.mean_acc_a);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", s.mean_acc_b);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", s.mean_overall);
            os << buf << '\n';
        }
    }
    return out;
}

void cmd_prepare_data(const ExperimentConfig& cfg, const RawConfig& raw) {
    const auto prepares = raw.find_all("prepare");
    if (prepares.empty()) throw ConfigError("prepare-data needs at least one [prepare] section");
    fs::create_directories(cfg.out_dir);
    write_manifest(cfg, "prepare-data");

    int index = 0;
    for (const auto* sec : prepares) {
        ++index;
        const std::string kind = sec->get("kind");
        const std::string name = sec->get_or("name", "task" + std::to_string(index));
        const std::uint64_t seed =
            sec->get_u64_or("seed", mix_seed(cfg.seed, 0x91 + static_cast<std::uint64_t>(index)));
        std::ofstream manifest(fs::path(cfg.out_dir) / (name + "_manifest.txt"));
        manifest << "name " << name << "\nkind " << kind << "\nseed " << seed << '\n';

        TaskSpec spec;
        spec.kind = kind;
        spec.kv = sec->kv;
        spec.kv["seed"] = std::to_string(seed);

        if (kind == "phase") {
            PhaseDatasetOptions opts;
            opts.seed = seed;
            opts.prep = sec->get_or("prep", "exact") == "variational" ? PrepKind::VARIATIONAL
                                                                      : PrepKind::EXACT;
            opts.prep_options.n_blocks = sec->get_int_or("blocks", 5);
            opts.prep_options.max_iters = sec->get_int_or("iters", 1500);
            opts.prep_options.grad_method = GradMethod::Adjoint;
            const int n = sec->get_int("n");
            const auto full = sample_phase_dataset_full(n, sec->get_int_or("train", 30),
                                                        sec->get_int_or("test", 10), opts);
            save_phase_dataset(cfg.out_dir, name, full.ds, full.alphas_train, full.alphas_test,
                               n, opts.prep_options.n_blocks);
            manifest << "train " << full.ds.train.size() << "\ntest " << full.ds.test.size()
                     << '\n';
            continue;
        }

        const TaskDataset ds = build_task_dataset(spec, cfg.seed, index - 1);
        save_samples_csv((fs::path(cfg.out_dir) / (name + "_train.csv")).string(), ds.train);
        save_samples_csv((fs::path(cfg.out_dir) / (name + "_test.csv")).string(), ds.test);
        manifest << "train " << ds.train.size() << "\ntest " << ds.test.size() << '\n';
        if (kind == "engineered_synth") {
            const int requested = sec->get_int_or("count", 1200);
            const auto st = engineer_stats(ds, requested);
            manifest << "requested " << st.total << "\nkept " << st.kept << "\ndiscard_rate "
                     << (1.0 - static_cast<double>(st.kept) / st.total) << "\nlabel0 "
                     << st.label0 << "\nlabel1 " << st.label1 << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient self-check

GradCheckReport cmd_gradcheck(const GradCheckOptions& opts) {
    if (opts.qubit_sizes.empty()) throw ConfigError("gradcheck needs at least one size");
    Rng rng(mix_seed(opts.seed, 0x6c));
    GradCheckReport report;
    std::ostringstream summary;

    for (int inst = 0; inst < opts.instances; ++inst) {
        const int n = opts.qubit_sizes[inst % opts.qubit_sizes.size()];
        const int enc_pick = inst % 3;
        QuantumClassifierSpec spec;
        spec.n_qubits = n;
        spec.n_blocks = 1 + static_cast<int>(uniform_index(rng, 2));
        spec.entangler = (inst % 2 == 0) ? Entangler::CNOT : Entangler::CZ;
        spec.readout_qubit = static_cast<int>(uniform_index(rng, n));
        if (enc_pick == 0) {
            spec.encoding = EncodingKind::INTERLEAVED;
            spec.encode_coeff = 2.0;
            spec.n_encoded =
                1 + static_cast<int>(uniform_index(rng, 3 * n * spec.n_blocks));
        } else if (enc_pick == 1) {
            spec.encoding = EncodingKind::FEATURE;
            spec.feature_t = 4.0;
        } else {
            spec.encoding = EncodingKind::ROTATION;
        }
        const QuantumClassifier model(spec);

        Sample sample;
        const int n_feat =
            spec.encoding == EncodingKind::INTERLEAVED ? spec.n_encoded : n;
        sample.features.resize(n_feat);
        for (auto& v : sample.features) v = uniform_in(rng, -1.0, 1.0);
        sample.label = one_hot(static_cast<int>(uniform_index(rng, 2)));

        std::vector<double> theta(model.n_params());
        for (auto& t : theta) t = uniform_in(rng, -kPi, kPi);

        const auto in = model.resolve_input(sample);
        const Circuit& circ = model.circuit();

        // parameter-shift vs central finite differences on g0 and g1
        std::vector<double> shift0(circ.n_params), shift1(circ.n_params);
        for (int j = 0; j < circ.n_params; ++j) {
            const auto [d0, d1] = shift_proba_grad(circ, theta, in.x, in.state.get(), j);
            shift0[j] = d0;
            shift1[j] = d1;
        }
        if (opts.inject_sign_flip && !shift0.empty()) shift0[0] = -shift0[0];

        const auto fd0 = finite_diff_grad(
            [&](std::span<const double> th) {
                return predict_proba(circ, th, in.x, in.state.get()).first;
            },
            theta, opts.fd_step);
        const auto fd1 = finite_diff_grad(
            [&](std::span<const double> th) {
                return predict_proba(circ, th, in.x, in.state.get()).second;
            },
            theta, opts.fd_step);
        for (int j = 0; j < circ.n_params; ++j) {
            report.max_dev_shift_fd =
                std::max(report.max_dev_shift_fd, std::abs(shift0[j] - fd0[j]));
            report.max_dev_shift_fd =
                std::max(report.max_dev_shift_fd, std::abs(shift1[j] - fd1[j]));
        }

        // adjoint fast path vs parameter shift
        const auto adj0 = proba_grad_all(circ, theta, in.x, in.state.get(), GradMethod::Adjoint);
        for (int j = 0; j < circ.n_params; ++j)
            report.max_dev_adjoint_shift =
                std::max(report.max_dev_adjoint_shift, std::abs(adj0[j] - shift0[j]));

        ++report.instances;
    }

    report.pass = report.max_dev_shift_fd < opts.tolerance &&
                  report.max_dev_adjoint_shift < opts.adjoint_tolerance;
    summary << "gradcheck instances=" << report.instances
            << " max|shift-fd|=" << report.max_dev_shift_fd
            << " (tol " << opts.tolerance << ")"
            << " max|adjoint-shift|=" << report.max_dev_adjoint_shift
            << " (tol " << opts.adjoint_tolerance << ")"
            << (report.pass ? " PASS" : " FAIL");
    report.summary = summary.str();
    return report;
}

// ---------------------------------------------------------------------------
// Ground-state preparation

GroundStateReport cmd_groundstate(const GroundStateOptions& opts) {
    GroundStateReport report;
    std::ostringstream summary;

    if (opts.with_exact && opts.n <= 12) {
        auto [energy, state] = exact_ground_state(opts.n, opts.h);
        report.exact_energy = energy;
        report.have_exact = true;
        report.exact_string_order = string_order(state);
    }

    GroundPrepOptions prep;
    prep.n_blocks = opts.n_blocks;
    prep.max_iters = opts.max_iters;
    prep.learning_rate = opts.learning_rate;
    prep.seed = opts.seed;
    prep.restarts = opts.restarts;
    prep.grad_method = opts.grad_method;
    const GroundPrepResult res = variational_ground_prep(opts.n, opts.h, prep);
    report.variational_energy = res.energy;
    report.converged = res.converged;
    report.variational_string_order = string_order(res.state);

    summary << "groundstate n=" << opts.n << " h=" << opts.h;
    if (report.have_exact)
        summary << " exact_energy=" << report.exact_energy
                << " exact_Oz=" << report.exact_string_order;
    summary << " variational_energy=" << report.variational_energy
            << " variational_Oz=" << report.variational_string_order
            << (report.converged ? " converged" : " NOT-CONVERGED");
    report.summary = summary.str();

    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        std::ofstream os(fs::path(opts.out_dir) / "groundstate_report.txt");
        if (!os) throw IoError("cannot write ground-state report");
        os << report.summary << '\n';
        std::ofstream as(fs::path(opts.out_dir) / "groundstate.alpha");
        as << "alpha " << res.alpha.size();
        char buf[40];
        for (double a : res.alpha) {
            std::snprintf(buf, sizeof(buf), "%.17g", a);
            as << ' ' << buf;
        }
        as << '\n';
    }
    return report;
}

}  // namespace qcl
