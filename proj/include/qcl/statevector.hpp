#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

namespace qcl {

using cdouble = std::complex<double>;

// Dense n-qubit pure state. Basis index bit k is qubit k (little-endian);
// this layout is fixed so that saved states stay portable.
struct StateVector {
    int n_qubits = 0;
    std::vector<cdouble> amps;

    std::size_t dim() const { return amps.size(); }
    double norm_sq() const;
};

constexpr int kMaxQubits = 24;

// |0...0> on n qubits. Throws CapacityError outside 1..24.
StateVector init_zero(int n_qubits);

enum class GateKind { RX, RZ, H, CNOT, CZ, RZZ };

inline bool gate_is_rotation(GateKind k) {
    return k == GateKind::RX || k == GateKind::RZ || k == GateKind::RZZ;
}

inline bool gate_is_two_qubit(GateKind k) {
    return k == GateKind::CNOT || k == GateKind::CZ || k == GateKind::RZZ;
}

// Gate with all angles resolved to concrete values.
struct ResolvedGate {
    GateKind kind;
    int q0 = 0;
    int q1 = -1;
    double angle = 0.0;
};

// In-place kernels. Angles follow the exp(-i*theta/2 * P) convention
// (P = X for rx, Z for rz, ZZ for rzz).
void apply_rx(StateVector& s, int q, double theta);
void apply_rz(StateVector& s, int q, double theta);
void apply_h(StateVector& s, int q);
void apply_cnot(StateVector& s, int control, int target);
void apply_cz(StateVector& s, int qa, int qb);
void apply_rzz(StateVector& s, int qa, int qb, double theta);

void apply_gate_inplace(StateVector& s, const ResolvedGate& g);

// Value-in/value-out contract; norm is preserved to 1e-10.
StateVector apply_gate(const StateVector& s, const ResolvedGate& g);

enum class Pauli : char { X = 'X', Y = 'Y', Z = 'Z' };

struct PauliTerm {
    double coeff = 0.0;
    // qubit index -> Pauli; ordered map keeps serialization stable.
    std::map<int, Pauli> paulis;
};

// Real-weighted sum of Pauli strings; Hermitian by construction.
struct PauliObservable {
    std::vector<PauliTerm> terms;

    int max_qubit() const;
};

// Exact <psi|O|psi>; no sampling.
double expectation(const StateVector& s, const PauliObservable& obs);
double expectation_term(const StateVector& s, const PauliTerm& term);

// |O psi> for adjoint-mode differentiation and residual checks.
StateVector apply_observable(const StateVector& s, const PauliObservable& obs);

// P(qubit = outcome) under a Z-basis measurement; the state is not collapsed.
double projector_probability(const StateVector& s, int qubit, int outcome);

// Sum_x conj(a_x) b_x.
cdouble inner_product(const StateVector& a, const StateVector& b);

// Zeroes amplitudes where the qubit bit != outcome (unnormalized projection).
StateVector project_qubit(const StateVector& s, int qubit, int outcome);

}  // namespace qcl
