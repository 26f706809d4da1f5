#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "qcl/circuit.hpp"
#include "qcl/data.hpp"

namespace qcl {

// All trainable gates are Pauli-generated rotations, so the parameter-shift
// rule is exact: dg/dtheta_j = (g(theta_j + pi/2) - g(theta_j - pi/2)) / 2.
// For a combined slot c*x_i + theta_j the shift lands on the total angle,
// which is the same derivative since d(total)/d(theta_j) = 1.
enum class GradMethod { ParamShift, Adjoint };

// Probabilities clamp to [kProbClamp, 1 - kProbClamp] inside logs and
// divisions; exact zeros occur at theta = 0 style initializations.
constexpr double kProbClamp = 1e-10;

inline double clamp_proba(double g) {
    if (g < kProbClamp) return kProbClamp;
    if (g > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return g;
}

// (dg0, dg1)/dtheta_j via the shift rule; two circuit evaluations.
std::pair<double, double> shift_proba_grad(const Circuit& circuit, std::span<const double> theta,
                                           std::span<const double> x,
                                           const StateVector* input_state, int j);

// dg0/dtheta for all parameters. ParamShift uses 2*n_params evaluations;
// Adjoint is a single reverse pass and must agree with ParamShift to 1e-8.
std::vector<double> proba_grad_all(const Circuit& circuit, std::span<const double> theta,
                                   std::span<const double> x, const StateVector* input_state,
                                   GradMethod method = GradMethod::ParamShift);

// Cross-entropy gradient for one sample:
// dL/dtheta_j = -(a0/g0) dg0/dtheta_j - (a1/g1) dg1/dtheta_j.
std::vector<double> loss_grad_sample(const Circuit& circuit, std::span<const double> theta,
                                     std::span<const double> x,
                                     const std::array<double, 2>& label,
                                     const StateVector* input_state = nullptr,
                                     GradMethod method = GradMethod::ParamShift);

// Diagonal Fisher estimate at theta_star: mean over the dataset of the
// squared per-sample loss gradient.
std::vector<double> fisher_diagonal(const Circuit& circuit, std::span<const double> theta_star,
                                    const std::vector<Sample>& dataset,
                                    GradMethod method = GradMethod::ParamShift,
                                    int n_threads = 1);

// Central finite differences, the verification oracle for everything above.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double step);

// d<obs>/dtheta for all parameters; used by variational ground-state search.
std::vector<double> expectation_grad_all(const Circuit& circuit, std::span<const double> theta,
                                         std::span<const double> x, const PauliObservable& obs,
                                         const StateVector* input_state,
                                         GradMethod method = GradMethod::ParamShift);

}  // namespace qcl
