#include "qcl/circuit.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "qcl/errors.hpp"

namespace qcl {

double resolve_angle(const AngleExpr& expr, std::span<const double> theta,
                     std::span<const double> x) {
    double angle = expr.data_coeff;
    if (expr.data_index) {
        const int i = *expr.data_index;
        if (i < 0 || static_cast<std::size_t>(i) >= x.size())
            throw StructuralError("data index " + std::to_string(i) + " out of range");
        angle *= x[i];
    }
    if (expr.param_index) {
        const int j = *expr.param_index;
        if (j < 0 || static_cast<std::size_t>(j) >= theta.size())
            throw StructuralError("param index " + std::to_string(j) + " out of range");
        angle += theta[j];
    }
    return angle;
}

void validate_circuit(const Circuit& c) {
    if (c.n_qubits < 1) throw StructuralError("circuit needs at least one qubit");
    if (c.readout_qubit < 0 || c.readout_qubit >= c.n_qubits)
        throw StructuralError("readout qubit out of range");
    std::vector<int> param_seen(c.n_params, 0);
    for (const auto& op : c.ops) {
        if (op.q0 < 0 || op.q0 >= c.n_qubits) throw StructuralError("gate qubit out of range");
        if (gate_is_two_qubit(op.kind)) {
            if (op.q1 < 0 || op.q1 >= c.n_qubits || op.q1 == op.q0)
                throw StructuralError("two-qubit gate has invalid second qubit");
        }
        if (gate_is_rotation(op.kind) != op.angle.has_value())
            throw StructuralError("rotation gates and only rotation gates carry an angle");
        if (op.angle) {
            if (op.angle->data_index &&
                (*op.angle->data_index < 0 || *op.angle->data_index >= c.n_features))
                throw StructuralError("data index out of range");
            if (op.angle->param_index) {
                const int j = *op.angle->param_index;
                if (j < 0 || j >= c.n_params) throw StructuralError("param index out of range");
                ++param_seen[j];
            }
        }
    }
    for (int j = 0; j < c.n_params; ++j)
        if (param_seen[j] != 1)
            throw StructuralError("param index " + std::to_string(j) + " used " +
                                  std::to_string(param_seen[j]) + " times");
}

Circuit build_classifier(int n_qubits, int n_blocks, Entangler entangler, int readout_qubit,
                         RotationOrder order) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) throw StructuralError("invalid qubit count");
    if (n_blocks < 1) throw StructuralError("need at least one block");
    if (readout_qubit < 0 || readout_qubit >= n_qubits)
        throw StructuralError("readout qubit out of range");

    const GateKind xzx[3] = {GateKind::RX, GateKind::RZ, GateKind::RX};
    const GateKind zxz[3] = {GateKind::RZ, GateKind::RX, GateKind::RZ};
    const GateKind* layers = (order == RotationOrder::XZX) ? xzx : zxz;
    const GateKind ent = (entangler == Entangler::CNOT) ? GateKind::CNOT : GateKind::CZ;

    Circuit c;
    c.n_qubits = n_qubits;
    c.readout_qubit = readout_qubit;
    c.n_params = 3 * n_qubits * n_blocks;
    c.n_features = 0;
    int next_param = 0;
    for (int b = 0; b < n_blocks; ++b) {
        for (int layer = 0; layer < 3; ++layer) {
            for (int q = 0; q < n_qubits; ++q) {
                AngleExpr slot;
                slot.data_coeff = 0.0;
                slot.param_index = next_param++;
                c.ops.push_back({layers[layer], q, -1, slot});
            }
        }
        for (int start = 0; start < 2; ++start)
            for (int q = start; q + 1 < n_qubits; q += 2)
                c.ops.push_back({ent, q, q + 1, std::nullopt});
    }
    return c;
}

Circuit bind_interleaved(const Circuit& circuit, double c, int n_encoded) {
    if (n_encoded < 0 || n_encoded > circuit.n_params)
        throw StructuralError("n_encoded exceeds parameter count");
    Circuit out = circuit;
    out.n_features = n_encoded;
    int next_feature = 0;
    for (auto& op : out.ops) {
        if (!op.angle || !op.angle->param_index) continue;
        if (next_feature >= n_encoded) break;
        op.angle->data_coeff = c;
        op.angle->data_index = next_feature++;
    }
    return out;
}

Circuit build_feature_encoding(const std::vector<double>& x, double t) {
    const int n = static_cast<int>(x.size());
    if (n < 1 || n > kMaxQubits) throw StructuralError("feature vector length out of range");
    Circuit c;
    c.n_qubits = n;
    for (int rep = 0; rep < 2; ++rep) {
        for (int q = 0; q < n; ++q) c.ops.push_back({GateKind::H, q, -1, std::nullopt});
        for (int q = 0; q < n; ++q)
            c.ops.push_back({GateKind::RZ, q, -1, AngleExpr{x[q], std::nullopt, std::nullopt}});
        for (int q = 0; q + 1 < n; ++q)
            c.ops.push_back(
                {GateKind::RZZ, q, q + 1, AngleExpr{t * x[q] * x[q + 1], std::nullopt, std::nullopt}});
    }
    return c;
}

Circuit build_rotation_encoding(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    if (n < 1 || n > kMaxQubits) throw StructuralError("feature vector length out of range");
    Circuit c;
    c.n_qubits = n;
    for (int q = 0; q < n; ++q)
        c.ops.push_back({GateKind::RX, q, -1, AngleExpr{x[q], std::nullopt, std::nullopt}});
    for (int q = 0; q + 1 < n; ++q) c.ops.push_back({GateKind::CNOT, q, q + 1, std::nullopt});
    return c;
}

StateVector evaluate(const Circuit& circuit, std::span<const double> theta,
                     std::span<const double> x, const StateVector* input_state) {
    if (static_cast<int>(theta.size()) != circuit.n_params)
        throw StructuralError("theta length " + std::to_string(theta.size()) +
                              " != n_params " + std::to_string(circuit.n_params));
    if (static_cast<int>(x.size()) != circuit.n_features)
        throw StructuralError("feature length " + std::to_string(x.size()) + " != n_features " +
                              std::to_string(circuit.n_features));
    StateVector state;
    if (input_state) {
        if (input_state->n_qubits != circuit.n_qubits)
            throw StructuralError("input state qubit count does not match circuit");
        state = *input_state;
    } else {
        state = init_zero(circuit.n_qubits);
    }
    for (const auto& op : circuit.ops) {
        ResolvedGate g{op.kind, op.q0, op.q1, 0.0};
        if (op.angle) g.angle = resolve_angle(*op.angle, theta, x);
        apply_gate_inplace(state, g);
    }
    return state;
}

std::pair<double, double> predict_proba(const Circuit& circuit, std::span<const double> theta,
                                        std::span<const double> x,
                                        const StateVector* input_state) {
    const StateVector out = evaluate(circuit, theta, x, input_state);
    const double g0 = projector_probability(out, circuit.readout_qubit, 0);
    const double g1 = projector_probability(out, circuit.readout_qubit, 1);
    return {g0, g1};
}

namespace {

const char* kind_name(GateKind k) {
    switch (k) {
        case GateKind::RX: return "RX";
        case GateKind::RZ: return "RZ";
        case GateKind::H: return "H";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
        case GateKind::RZZ: return "RZZ";
    }
    return "?";
}

GateKind kind_from_name(const std::string& s) {
    if (s == "RX") return GateKind::RX;
    if (s == "RZ") return GateKind::RZ;
    if (s == "H") return GateKind::H;
    if (s == "CNOT") return GateKind::CNOT;
    if (s == "CZ") return GateKind::CZ;
    if (s == "RZZ") return GateKind::RZZ;
    throw IoError("unknown gate kind '" + s + "'");
}

void print_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

std::string circuit_to_text(const Circuit& c) {
    std::ostringstream os;
    os << "circuit " << c.n_qubits << ' ' << c.n_params << ' ' << c.n_features << ' '
       << c.readout_qubit << '\n';
    for (const auto& op : c.ops) {
        os << kind_name(op.kind) << ' ' << op.q0;
        if (gate_is_two_qubit(op.kind)) os << ' ' << op.q1;
        if (op.angle) {
            os << ' ';
            print_double(os, op.angle->data_coeff);
            os << ' ';
            if (op.angle->data_index)
                os << *op.angle->data_index;
            else
                os << '-';
            os << ' ';
            if (op.angle->param_index)
                os << *op.angle->param_index;
            else
                os << '-';
        }
        os << '\n';
    }
    return os.str();
}

Circuit circuit_from_text(std::istream& in) {
    Circuit c;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (!have_header) {
            if (tok != "circuit") throw IoError("circuit text must start with a header line");
            if (!(ls >> c.n_qubits >> c.n_params >> c.n_features >> c.readout_qubit))
                throw IoError("malformed circuit header");
            have_header = true;
            continue;
        }
        GateOp op;
        op.kind = kind_from_name(tok);
        if (!(ls >> op.q0)) throw IoError("missing qubit in line: " + line);
        if (gate_is_two_qubit(op.kind)) {
            if (!(ls >> op.q1)) throw IoError("missing second qubit in line: " + line);
        }
        if (gate_is_rotation(op.kind)) {
            AngleExpr expr;
            std::string si, sj;
            if (!(ls >> expr.data_coeff >> si >> sj))
                throw IoError("missing angle fields in line: " + line);
            if (si != "-") expr.data_index = std::stoi(si);
            if (sj != "-") expr.param_index = std::stoi(sj);
            op.angle = expr;
        }
        c.ops.push_back(op);
    }
    if (!have_header) throw IoError("empty circuit text");
    return c;
}

Circuit circuit_from_text(const std::string& text) {
    std::istringstream is(text);
    return circuit_from_text(is);
}

}  // namespace qcl
