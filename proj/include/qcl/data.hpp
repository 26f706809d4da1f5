#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qcl/statevector.hpp"

namespace qcl {

enum class PrepKind { EXACT, VARIATIONAL };

// How classical features enter the classifier. NONE is for quantum inputs.
enum class EncodingKind { NONE, INTERLEAVED, FEATURE, ROTATION };

// How to rebuild a quantum input state: Hamiltonian field h plus the
// preparation route. The prepared state itself travels in Sample::input_state.
struct StateRecipe {
    double h = 0.0;
    PrepKind prep = PrepKind::EXACT;
};

// One labeled example. Exactly one of features / input_state drives the
// classifier; labels are one-hot (1,0) = class 0, (0,1) = class 1.
struct Sample {
    std::vector<double> features;
    std::array<double, 2> label{1.0, 0.0};
    std::shared_ptr<const StateVector> input_state;
    std::shared_ptr<const StateRecipe> recipe;
    // Tasks that need a different feature map than the model default (the
    // engineered task uses the feature map, its companion task the rotation
    // map) stamp their samples here.
    std::optional<EncodingKind> encoding;

    int label_index() const { return label[0] >= label[1] ? 0 : 1; }
};

inline std::array<double, 2> one_hot(int label) {
    return label == 0 ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
}

enum class TaskKind { IMAGE_128, ENGINEERED_Q, PCA_10, QUANTUM_PHASE, SYNTHETIC };

struct TaskDataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    TaskKind kind = TaskKind::SYNTHETIC;
    std::string name;
};

}  // namespace qcl
