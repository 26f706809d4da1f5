#pragma once

#include <memory>
#include <span>
#include <vector>

#include "qcl/autodiff.hpp"
#include "qcl/circuit.hpp"
#include "qcl/data.hpp"

namespace qcl {

// A binary classifier trainable by the shared continual-learning loop.
// Implementations must be pure functions of (theta, sample) and safe to call
// concurrently on distinct samples.
class ClassifierModel {
public:
    virtual ~ClassifierModel() = default;

    virtual int n_params() const = 0;
    virtual std::pair<double, double> predict_proba(std::span<const double> theta,
                                                    const Sample& sample) const = 0;
    virtual std::vector<double> loss_grad_sample(std::span<const double> theta,
                                                 const Sample& sample) const = 0;
    // Label from probabilities; the quantum rule is 0 iff g0 >= 0.5.
    virtual int predict_label(double g0, double g1) const { return g0 >= g1 ? 0 : 1; }
};

struct QuantumClassifierSpec {
    int n_qubits = 10;
    int n_blocks = 3;
    Entangler entangler = Entangler::CZ;
    int readout_qubit = 0;
    RotationOrder rotation_order = RotationOrder::XZX;
    EncodingKind encoding = EncodingKind::INTERLEAVED;
    double encode_coeff = 2.0;   // interleaved: angle = c*x_i + theta_i
    int n_encoded = 0;           // interleaved: how many rotations carry data
    double feature_t = 4.0;      // feature encoding interaction strength
    GradMethod grad_method = GradMethod::ParamShift;
};

// Variational circuit classifier. For FEATURE/ROTATION encodings the sample's
// feature vector is compiled into a fixed prefix circuit whose output state
// feeds the trainable circuit; for INTERLEAVED the features live inside the
// rotation angles. Quantum-input samples bypass the encoder entirely.
class QuantumClassifier : public ClassifierModel {
public:
    explicit QuantumClassifier(const QuantumClassifierSpec& spec);

    int n_params() const override { return circuit_.n_params; }
    std::pair<double, double> predict_proba(std::span<const double> theta,
                                            const Sample& sample) const override;
    std::vector<double> loss_grad_sample(std::span<const double> theta,
                                         const Sample& sample) const override;

    const Circuit& circuit() const { return circuit_; }
    const QuantumClassifierSpec& spec() const { return spec_; }

    // Resolves the sample to the trainable circuit's input state (encoder
    // output or the sample's own state) plus the feature vector it consumes.
    struct ResolvedInput {
        std::vector<double> x;
        std::shared_ptr<const StateVector> state;  // null = |0...0>
    };
    ResolvedInput resolve_input(const Sample& sample) const;

private:
    QuantumClassifierSpec spec_;
    Circuit circuit_;
};

}  // namespace qcl
