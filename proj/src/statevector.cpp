#include "qcl/statevector.hpp"

#include <cmath>
#include <string>

#include "qcl/errors.hpp"

namespace qcl {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;

void check_qubit(const StateVector& s, int q) {
    if (q < 0 || q >= s.n_qubits)
        throw StructuralError("qubit index " + std::to_string(q) + " out of range for " +
                              std::to_string(s.n_qubits) + " qubits");
}

}  // namespace

double StateVector::norm_sq() const {
    double acc = 0.0;
    for (const auto& a : amps) acc += a.real() * a.real() + a.imag() * a.imag();
    return acc;
}

StateVector init_zero(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw CapacityError("n_qubits must be in 1.." + std::to_string(kMaxQubits) + ", got " +
                            std::to_string(n_qubits));
    StateVector s;
    s.n_qubits = n_qubits;
    s.amps.assign(std::size_t{1} << n_qubits, cdouble(0.0, 0.0));
    s.amps[0] = cdouble(1.0, 0.0);
    return s;
}

// Complex arithmetic below is expanded by hand: the kernels dominate the
// runtime and std::complex multiplication is not reliably inlined.

void apply_rx(StateVector& s, int q, double theta) {
    check_qubit(s, q);
    const double c = std::cos(0.5 * theta);
    const double m = std::sin(0.5 * theta);  // gate = [[c, -i m], [-i m, c]]
    const std::size_t step = std::size_t{1} << q;
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t base = 0; base < dim; base += 2 * step) {
        for (std::size_t i = base; i < base + step; ++i) {
            const double r0 = a[i].real(), i0 = a[i].imag();
            const double r1 = a[i + step].real(), i1 = a[i + step].imag();
            a[i] = cdouble(c * r0 + m * i1, c * i0 - m * r1);
            a[i + step] = cdouble(c * r1 + m * i0, c * i1 - m * r0);
        }
    }
}

void apply_rz(StateVector& s, int q, double theta) {
    check_qubit(s, q);
    const double c = std::cos(0.5 * theta);
    const double m = std::sin(0.5 * theta);
    // diag(e^{-i theta/2}, e^{+i theta/2})
    const std::size_t step = std::size_t{1} << q;
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t base = 0; base < dim; base += 2 * step) {
        for (std::size_t i = base; i < base + step; ++i) {
            {
                const double r = a[i].real(), im = a[i].imag();
                a[i] = cdouble(c * r + m * im, c * im - m * r);
            }
            {
                const double r = a[i + step].real(), im = a[i + step].imag();
                a[i + step] = cdouble(c * r - m * im, c * im + m * r);
            }
        }
    }
}

void apply_h(StateVector& s, int q) {
    check_qubit(s, q);
    const std::size_t step = std::size_t{1} << q;
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t base = 0; base < dim; base += 2 * step) {
        for (std::size_t i = base; i < base + step; ++i) {
            const cdouble a0 = a[i];
            const cdouble a1 = a[i + step];
            a[i] = kInvSqrt2 * (a0 + a1);
            a[i + step] = kInvSqrt2 * (a0 - a1);
        }
    }
}

void apply_cnot(StateVector& s, int control, int target) {
    check_qubit(s, control);
    check_qubit(s, target);
    if (control == target) throw StructuralError("CNOT control equals target");
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t x = 0; x < dim; ++x) {
        if ((x & cbit) && !(x & tbit)) std::swap(a[x], a[x | tbit]);
    }
}

void apply_cz(StateVector& s, int qa, int qb) {
    check_qubit(s, qa);
    check_qubit(s, qb);
    if (qa == qb) throw StructuralError("CZ qubits must differ");
    const std::size_t mask = (std::size_t{1} << qa) | (std::size_t{1} << qb);
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t x = 0; x < dim; ++x) {
        if ((x & mask) == mask) a[x] = -a[x];
    }
}

void apply_rzz(StateVector& s, int qa, int qb, double theta) {
    check_qubit(s, qa);
    check_qubit(s, qb);
    if (qa == qb) throw StructuralError("RZZ qubits must differ");
    const double c = std::cos(0.5 * theta);
    const double m = std::sin(0.5 * theta);
    // e^{-i theta/2} on even parity of the two bits, e^{+i theta/2} on odd.
    const std::size_t abit = std::size_t{1} << qa;
    const std::size_t bbit = std::size_t{1} << qb;
    const std::size_t dim = s.dim();
    cdouble* a = s.amps.data();
    for (std::size_t x = 0; x < dim; ++x) {
        const bool odd = ((x & abit) != 0) != ((x & bbit) != 0);
        const double r = a[x].real(), im = a[x].imag();
        if (odd)
            a[x] = cdouble(c * r - m * im, c * im + m * r);
        else
            a[x] = cdouble(c * r + m * im, c * im - m * r);
    }
}

void apply_gate_inplace(StateVector& s, const ResolvedGate& g) {
    if (!std::isfinite(g.angle)) throw StructuralError("gate angle is not finite");
    switch (g.kind) {
        case GateKind::RX: apply_rx(s, g.q0, g.angle); break;
        case GateKind::RZ: apply_rz(s, g.q0, g.angle); break;
        case GateKind::H: apply_h(s, g.q0); break;
        case GateKind::CNOT: apply_cnot(s, g.q0, g.q1); break;
        case GateKind::CZ: apply_cz(s, g.q0, g.q1); break;
        case GateKind::RZZ: apply_rzz(s, g.q0, g.q1, g.angle); break;
    }
}

StateVector apply_gate(const StateVector& s, const ResolvedGate& g) {
    StateVector out = s;
    apply_gate_inplace(out, g);
    return out;
}

int PauliObservable::max_qubit() const {
    int m = -1;
    for (const auto& t : terms)
        for (const auto& [q, p] : t.paulis)
            if (q > m) m = q;
    return m;
}

namespace {

// P|x> = phase(x) |x ^ flip>; returns flip mask and fills phases on demand.
struct TermMasks {
    std::size_t flip = 0;
    std::size_t zmask = 0;  // qubits contributing (-1)^bit (Z and Y)
    std::size_t ymask = 0;  // qubits contributing a factor i
    int y_count = 0;
};

TermMasks term_masks(const PauliTerm& term, const StateVector& s) {
    TermMasks m;
    for (const auto& [q, p] : term.paulis) {
        if (q < 0 || q >= s.n_qubits)
            throw StructuralError("observable qubit " + std::to_string(q) + " out of range");
        const std::size_t bit = std::size_t{1} << q;
        switch (p) {
            case Pauli::X: m.flip |= bit; break;
            case Pauli::Y:
                m.flip |= bit;
                m.zmask |= bit;
                m.ymask |= bit;
                ++m.y_count;
                break;
            case Pauli::Z: m.zmask |= bit; break;
        }
    }
    return m;
}

cdouble y_factor(int y_count) {
    switch (y_count & 3) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

}  // namespace

double expectation_term(const StateVector& s, const PauliTerm& term) {
    const TermMasks m = term_masks(term, s);
    const cdouble yf = y_factor(m.y_count);
    const std::size_t dim = s.dim();
    const cdouble* a = s.amps.data();
    double acc_re = 0.0;
    for (std::size_t x = 0; x < dim; ++x) {
        // phase(x) = yf * (-1)^{popcount(x & zmask)}
        const int sign = __builtin_parityll(x & m.zmask) ? -1 : 1;
        const cdouble term_val = std::conj(a[x ^ m.flip]) * a[x];
        acc_re += sign * (yf.real() * term_val.real() - yf.imag() * term_val.imag());
    }
    return term.coeff * acc_re;
}

double expectation(const StateVector& s, const PauliObservable& obs) {
    double acc = 0.0;
    for (const auto& t : obs.terms) acc += expectation_term(s, t);
    return acc;
}

StateVector apply_observable(const StateVector& s, const PauliObservable& obs) {
    StateVector out;
    out.n_qubits = s.n_qubits;
    out.amps.assign(s.dim(), cdouble(0.0, 0.0));
    for (const auto& t : obs.terms) {
        const TermMasks m = term_masks(t, s);
        const cdouble yf = y_factor(m.y_count);
        const std::size_t dim = s.dim();
        for (std::size_t x = 0; x < dim; ++x) {
            // O|psi>: amplitude a_x lands on basis state x ^ flip with phase(x).
            const int sign = __builtin_parityll(x & m.zmask) ? -1 : 1;
            out.amps[x ^ m.flip] += t.coeff * static_cast<double>(sign) * yf * s.amps[x];
        }
    }
    return out;
}

double projector_probability(const StateVector& s, int qubit, int outcome) {
    check_qubit(s, qubit);
    if (outcome != 0 && outcome != 1) throw StructuralError("outcome must be 0 or 1");
    const std::size_t bit = std::size_t{1} << qubit;
    const std::size_t want = outcome ? bit : 0;
    const std::size_t dim = s.dim();
    double acc = 0.0;
    for (std::size_t x = 0; x < dim; ++x) {
        if ((x & bit) == want) {
            const auto& a = s.amps[x];
            acc += a.real() * a.real() + a.imag() * a.imag();
        }
    }
    return acc;
}

cdouble inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits != b.n_qubits) throw StructuralError("inner product on mismatched states");
    cdouble acc(0.0, 0.0);
    for (std::size_t x = 0; x < a.dim(); ++x) acc += std::conj(a.amps[x]) * b.amps[x];
    return acc;
}

StateVector project_qubit(const StateVector& s, int qubit, int outcome) {
    check_qubit(s, qubit);
    const std::size_t bit = std::size_t{1} << qubit;
    const std::size_t want = outcome ? bit : 0;
    StateVector out = s;
    for (std::size_t x = 0; x < out.dim(); ++x) {
        if ((x & bit) != want) out.amps[x] = cdouble(0.0, 0.0);
    }
    return out;
}

}  // namespace qcl
