#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcl/statevector.hpp"

namespace qcl {

// Angle of a rotation gate: data_coeff * (x[data_index] or 1) + theta[param_index].
// Builders emit either a combined slot (c*x_i + theta_j), a pure trainable
// slot (c = 0), or a baked constant (both indices absent, angle = data_coeff).
struct AngleExpr {
    double data_coeff = 0.0;
    std::optional<int> data_index;
    std::optional<int> param_index;
};

struct GateOp {
    GateKind kind;
    int q0 = 0;
    int q1 = -1;                     // second qubit for CNOT/CZ/RZZ
    std::optional<AngleExpr> angle;  // present iff kind is a rotation
};

// Ordered gate program. Each param_index in 0..n_params-1 appears exactly once.
struct Circuit {
    int n_qubits = 0;
    std::vector<GateOp> ops;
    int n_params = 0;
    int n_features = 0;
    int readout_qubit = 0;
};

enum class Entangler { CNOT, CZ };

// Per-block single-qubit layer order. The default Rx-Rz-Rx matches the
// hardware circuits; Rz-Rx-Rz is kept as an option.
enum class RotationOrder { XZX, ZXZ };

double resolve_angle(const AngleExpr& expr, std::span<const double> theta,
                     std::span<const double> x);

// Validates index ranges and the param-slot bijection; throws StructuralError.
void validate_circuit(const Circuit& c);

// Block-structured classifier: per block, three layers of single-qubit
// rotations over all qubits followed by two brick layers of entangling gates
// on an open line (pairs (0,1),(2,3),... then (1,2),(3,4),...). CNOT control
// is the lower index. 3 * n_qubits * n_blocks trainable parameters.
Circuit build_classifier(int n_qubits, int n_blocks, Entangler entangler, int readout_qubit,
                         RotationOrder order = RotationOrder::XZX);

// Interleaved block encoding: the first n_encoded rotation gates in circuit
// order become c*x_i + theta_j slots (i counts encoded gates); the rest stay
// pure trainable.
Circuit bind_interleaved(const Circuit& circuit, double c, int n_encoded);

// Feature map |phi(x)>: two repetitions of an H layer followed by the
// diagonal layer Rz(x_i) per qubit and RZZ(t*x_i*x_j) on line neighbors.
// All angles are baked constants; the circuit is not trainable.
Circuit build_feature_encoding(const std::vector<double>& x, double t);

// Rx(x_i) on each qubit, then CNOTs on adjacent pairs. Baked constants.
Circuit build_rotation_encoding(const std::vector<double>& x);

// Runs the circuit from input_state (or |0...0>). theta/x sizes must match
// n_params/n_features.
StateVector evaluate(const Circuit& circuit, std::span<const double> theta,
                     std::span<const double> x, const StateVector* input_state = nullptr);

// (g0, g1): probabilities of reading 0/1 on the readout qubit. g0 + g1 = 1.
// Predicted label is 0 iff g0 >= 0.5, i.e. iff <sigma_z> >= 0.
std::pair<double, double> predict_proba(const Circuit& circuit, std::span<const double> theta,
                                        std::span<const double> x,
                                        const StateVector* input_state = nullptr);

// Line-oriented text form, one gate per line: KIND q0 [q1] [c i j] where i
// and j print as '-' when absent. Header carries the circuit dimensions.
std::string circuit_to_text(const Circuit& c);
Circuit circuit_from_text(std::istream& in);
Circuit circuit_from_text(const std::string& text);

}  // namespace qcl
