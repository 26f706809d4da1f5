#include "qcl/model.hpp"

#include <string>

#include "qcl/errors.hpp"

namespace qcl {

QuantumClassifier::QuantumClassifier(const QuantumClassifierSpec& spec) : spec_(spec) {
    circuit_ = build_classifier(spec.n_qubits, spec.n_blocks, spec.entangler, spec.readout_qubit,
                                spec.rotation_order);
    if (spec.encoding == EncodingKind::INTERLEAVED && spec.n_encoded > 0)
        circuit_ = bind_interleaved(circuit_, spec.encode_coeff, spec.n_encoded);
    validate_circuit(circuit_);
}

QuantumClassifier::ResolvedInput QuantumClassifier::resolve_input(const Sample& sample) const {
    ResolvedInput in;
    if (sample.input_state) {
        if (sample.input_state->n_qubits != circuit_.n_qubits)
            throw StructuralError("sample state has " +
                                  std::to_string(sample.input_state->n_qubits) +
                                  " qubits, classifier expects " +
                                  std::to_string(circuit_.n_qubits));
        in.state = sample.input_state;
        in.x.assign(circuit_.n_features, 0.0);
        return in;
    }
    const EncodingKind enc = sample.encoding.value_or(spec_.encoding);
    if (enc == EncodingKind::INTERLEAVED && spec_.encoding != EncodingKind::INTERLEAVED)
        throw StructuralError("interleaved samples need an interleaved-bound circuit");
    switch (enc) {
        case EncodingKind::INTERLEAVED: {
            if (static_cast<int>(sample.features.size()) != circuit_.n_features)
                throw StructuralError("feature length does not match encoded slot count");
            in.x = sample.features;
            break;
        }
        case EncodingKind::FEATURE: {
            if (static_cast<int>(sample.features.size()) != circuit_.n_qubits)
                throw StructuralError("feature encoding needs one feature per qubit");
            const Circuit enc = build_feature_encoding(sample.features, spec_.feature_t);
            in.state = std::make_shared<StateVector>(evaluate(enc, {}, {}));
            in.x.assign(circuit_.n_features, 0.0);
            break;
        }
        case EncodingKind::ROTATION: {
            if (static_cast<int>(sample.features.size()) != circuit_.n_qubits)
                throw StructuralError("rotation encoding needs one feature per qubit");
            const Circuit enc = build_rotation_encoding(sample.features);
            in.state = std::make_shared<StateVector>(evaluate(enc, {}, {}));
            in.x.assign(circuit_.n_features, 0.0);
            break;
        }
        case EncodingKind::NONE: {
            if (!sample.features.empty())
                throw StructuralError("classifier without an encoder got classical features");
            in.x.assign(circuit_.n_features, 0.0);
            break;
        }
    }
    return in;
}

std::pair<double, double> QuantumClassifier::predict_proba(std::span<const double> theta,
                                                           const Sample& sample) const {
    const ResolvedInput in = resolve_input(sample);
    return qcl::predict_proba(circuit_, theta, in.x, in.state.get());
}

std::vector<double> QuantumClassifier::loss_grad_sample(std::span<const double> theta,
                                                        const Sample& sample) const {
    const ResolvedInput in = resolve_input(sample);
    return qcl::loss_grad_sample(circuit_, theta, in.x, sample.label, in.state.get(),
                                 spec_.grad_method);
}

}  // namespace qcl
