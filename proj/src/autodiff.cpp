#include "qcl/autodiff.hpp"

#include <cmath>
#include <string>

#include "qcl/errors.hpp"
#include "qcl/parallel.hpp"

namespace qcl {

namespace {

constexpr double kHalfPi = 1.5707963267948966192313216916398;

void check_param_index(const Circuit& c, int j) {
    if (j < 0 || j >= c.n_params)
        throw StructuralError("parameter index " + std::to_string(j) + " out of range");
}

// Zero-length features stand for an all-zero feature vector (quantum-input
// samples routed through an interleaved circuit).
std::vector<double> effective_features(const Circuit& c, const std::vector<double>& features) {
    if (features.empty() && c.n_features > 0) return std::vector<double>(c.n_features, 0.0);
    return features;
}

// grad_j = 2 Re <lam| (-i/2) P |phi> for generator P of the gate, evaluated
// without materializing the intermediate state. Re(-i z) = Im(z).
double generator_overlap(const StateVector& lam, const StateVector& phi, const GateOp& op) {
    const std::size_t dim = lam.dim();
    double acc = 0.0;
    switch (op.kind) {
        case GateKind::RX: {
            const std::size_t bit = std::size_t{1} << op.q0;
            for (std::size_t x = 0; x < dim; ++x) {
                const cdouble v = std::conj(lam.amps[x]) * phi.amps[x ^ bit];
                acc += v.imag();
            }
            break;
        }
        case GateKind::RZ: {
            const std::size_t bit = std::size_t{1} << op.q0;
            for (std::size_t x = 0; x < dim; ++x) {
                const cdouble v = std::conj(lam.amps[x]) * phi.amps[x];
                acc += (x & bit) ? -v.imag() : v.imag();
            }
            break;
        }
        case GateKind::RZZ: {
            const std::size_t abit = std::size_t{1} << op.q0;
            const std::size_t bbit = std::size_t{1} << op.q1;
            for (std::size_t x = 0; x < dim; ++x) {
                const cdouble v = std::conj(lam.amps[x]) * phi.amps[x];
                const bool odd = ((x & abit) != 0) != ((x & bbit) != 0);
                acc += odd ? -v.imag() : v.imag();
            }
            break;
        }
        default:
            throw StructuralError("gate has no generator");
    }
    return acc;
}

void apply_inverse_inplace(StateVector& s, const GateOp& op, double angle) {
    ResolvedGate g{op.kind, op.q0, op.q1, gate_is_rotation(op.kind) ? -angle : 0.0};
    apply_gate_inplace(s, g);
}

// Single reverse pass: lam tracks (U_{j+1}..U_L)^dag O psi, phi tracks psi_j.
std::vector<double> adjoint_grad(const Circuit& circuit, std::span<const double> theta,
                                 std::span<const double> x, StateVector lam, StateVector phi) {
    std::vector<double> grads(circuit.n_params, 0.0);
    std::vector<double> angles(circuit.ops.size(), 0.0);
    for (std::size_t k = 0; k < circuit.ops.size(); ++k)
        if (circuit.ops[k].angle) angles[k] = resolve_angle(*circuit.ops[k].angle, theta, x);

    for (std::size_t k = circuit.ops.size(); k-- > 0;) {
        const GateOp& op = circuit.ops[k];
        if (op.angle && op.angle->param_index)
            grads[*op.angle->param_index] += generator_overlap(lam, phi, op);
        apply_inverse_inplace(phi, op, angles[k]);
        apply_inverse_inplace(lam, op, angles[k]);
    }
    return grads;
}

}  // namespace

std::pair<double, double> shift_proba_grad(const Circuit& circuit, std::span<const double> theta,
                                           std::span<const double> x,
                                           const StateVector* input_state, int j) {
    check_param_index(circuit, j);
    std::vector<double> shifted(theta.begin(), theta.end());
    shifted[j] = theta[j] + kHalfPi;
    const auto [g0p, g1p] = predict_proba(circuit, shifted, x, input_state);
    shifted[j] = theta[j] - kHalfPi;
    const auto [g0m, g1m] = predict_proba(circuit, shifted, x, input_state);
    return {0.5 * (g0p - g0m), 0.5 * (g1p - g1m)};
}

std::vector<double> proba_grad_all(const Circuit& circuit, std::span<const double> theta,
                                   std::span<const double> x, const StateVector* input_state,
                                   GradMethod method) {
    if (method == GradMethod::ParamShift) {
        std::vector<double> out(circuit.n_params);
        for (int j = 0; j < circuit.n_params; ++j)
            out[j] = shift_proba_grad(circuit, theta, x, input_state, j).first;
        return out;
    }
    const StateVector psi = evaluate(circuit, theta, x, input_state);
    StateVector lam = project_qubit(psi, circuit.readout_qubit, 0);
    return adjoint_grad(circuit, theta, x, std::move(lam), psi);
}

std::vector<double> loss_grad_sample(const Circuit& circuit, std::span<const double> theta,
                                     std::span<const double> x,
                                     const std::array<double, 2>& label,
                                     const StateVector* input_state, GradMethod method) {
    const auto [g0, g1] = predict_proba(circuit, theta, x, input_state);
    const double w0 = label[0] / clamp_proba(g0);
    const double w1 = label[1] / clamp_proba(g1);
    std::vector<double> out(circuit.n_params);
    if (method == GradMethod::ParamShift) {
        for (int j = 0; j < circuit.n_params; ++j) {
            const auto [dg0, dg1] = shift_proba_grad(circuit, theta, x, input_state, j);
            out[j] = -w0 * dg0 - w1 * dg1;
        }
    } else {
        const std::vector<double> dg0 = proba_grad_all(circuit, theta, x, input_state, method);
        for (int j = 0; j < circuit.n_params; ++j) out[j] = (-w0 + w1) * dg0[j];
    }
    return out;
}

std::vector<double> fisher_diagonal(const Circuit& circuit, std::span<const double> theta_star,
                                    const std::vector<Sample>& dataset, GradMethod method,
                                    int n_threads) {
    if (dataset.empty()) throw ArgumentError("fisher_diagonal needs a nonempty dataset");
    std::vector<std::vector<double>> per_sample(dataset.size());
    parallel_for(dataset.size(), n_threads, [&](std::size_t i) {
        const Sample& s = dataset[i];
        const std::vector<double> x = effective_features(circuit, s.features);
        per_sample[i] = loss_grad_sample(circuit, theta_star, x, s.label, s.input_state.get(),
                                         method);
    });
    std::vector<double> fisher(circuit.n_params, 0.0);
    for (const auto& g : per_sample)
        for (int j = 0; j < circuit.n_params; ++j) fisher[j] += g[j] * g[j];
    const double inv_n = 1.0 / static_cast<double>(dataset.size());
    for (double& f : fisher) f *= inv_n;
    return fisher;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double step) {
    if (!(step > 0.0)) throw ArgumentError("finite difference step must be positive");
    std::vector<double> point(theta.begin(), theta.end());
    std::vector<double> out(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double saved = point[j];
        point[j] = saved + step;
        const double fp = f(point);
        point[j] = saved - step;
        const double fm = f(point);
        point[j] = saved;
        out[j] = (fp - fm) / (2.0 * step);
    }
    return out;
}

std::vector<double> expectation_grad_all(const Circuit& circuit, std::span<const double> theta,
                                         std::span<const double> x, const PauliObservable& obs,
                                         const StateVector* input_state, GradMethod method) {
    if (method == GradMethod::ParamShift) {
        std::vector<double> out(circuit.n_params);
        std::vector<double> shifted(theta.begin(), theta.end());
        for (int j = 0; j < circuit.n_params; ++j) {
            shifted[j] = theta[j] + kHalfPi;
            const double ep = expectation(evaluate(circuit, shifted, x, input_state), obs);
            shifted[j] = theta[j] - kHalfPi;
            const double em = expectation(evaluate(circuit, shifted, x, input_state), obs);
            shifted[j] = theta[j];
            out[j] = 0.5 * (ep - em);
        }
        return out;
    }
    const StateVector psi = evaluate(circuit, theta, x, input_state);
    StateVector lam = apply_observable(psi, obs);
    return adjoint_grad(circuit, theta, x, std::move(lam), psi);
}

}  // namespace qcl
