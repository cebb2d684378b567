#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vowelseg/featfunc.hpp"

namespace vowelseg {

struct DecoderConstraints {
    int margin_before = kRequiredMarginBefore;
    int margin_after = kRequiredMarginAfter;
    int min_duration = 5;
    int max_duration = 0;  // 0 = unbounded

    void validate() const;
    bool admits(OnsetOffsetPair pair, std::size_t num_frames) const;
};

/// Boundary tolerances of the task loss, in frames.
struct LossParams {
    double tau_b = 0.0;
    double tau_e = 0.0;
};

struct TrainingProvenance {
    double eta0 = 0.0;
    double epsilon = 0.0;
    double pa_C = 0.0;
    std::uint64_t pa_epochs = 0;
    std::uint64_t dlm_iters = 0;
    std::uint64_t seed = 0;
    bool pa_cost_augmented = true;
};

struct Model {
    FeatureMapLayout layout = FeatureMapLayout::build(true);
    std::vector<double> weights;
    std::optional<Normalization> normalization;
    DurationPriorParams priors;
    DecoderConstraints constraints;
    LossParams loss_params;
    TrainingProvenance provenance;

    const Normalization* norm() const { return normalization ? &*normalization : nullptr; }
    /// Checks weight/normalization dimensions, priors and constraints.
    void validate() const;
};

}  // namespace vowelseg
