#pragma once

#include <span>
#include <vector>

#include "vowelseg/model.hpp"

namespace vowelseg {

/// [|pred_b - target_b| - tau_b]_+ + [|pred_e - target_e| - tau_e]_+
double task_loss(OnsetOffsetPair target, OnsetOffsetPair pred, const LossParams& p);

struct Decoded {
    OnsetOffsetPair pair;
    double score = 0.0;
};

/// Exhaustive argmax of w . phi over admissible pairs. Ties go to the
/// smallest onset, then the smallest offset. Throws NoAdmissiblePair.
Decoded decode(const FramePrefixSums& sums, const Model& model);
Decoded decode(const AcousticFrameSequence& seq, const Model& model);

/// argmax of w . phi + epsilon * loss(target, .), same search and tie-break.
Decoded decode_loss_augmented(const FramePrefixSums& sums, const Model& model, OnsetOffsetPair target,
                              double epsilon, const LossParams& loss);
Decoded decode_loss_augmented(const AcousticFrameSequence& seq, const Model& model,
                              OnsetOffsetPair target, double epsilon, const LossParams& loss);

/// w . phi(pair) evaluated entry by entry.
double score_pair(const FramePrefixSums& sums, const Model& model, OnsetOffsetPair pair);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace vowelseg
