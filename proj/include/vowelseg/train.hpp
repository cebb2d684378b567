#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vowelseg/decode.hpp"
#include "vowelseg/model.hpp"

namespace vowelseg {

struct ContextInfo {
    std::string onset_class;
    std::string coda_class;
};

struct TrainingExample {
    AcousticFrameSequence seq;
    OnsetOffsetPair target;
    std::string id;
    std::optional<ContextInfo> context;
};

/// A training example with its prefix sums built once.
struct PreparedExample {
    FramePrefixSums sums;
    OnsetOffsetPair target;

    explicit PreparedExample(const TrainingExample& ex) : sums(ex.seq), target(ex.target) {}
    PreparedExample(const AcousticFrameSequence& seq, OnsetOffsetPair t) : sums(seq), target(t) {}
};

struct TrainConfig {
    double eta0 = 0.1;
    double epsilon = -1.36;
    double tau_b = 1.0;
    double tau_e = 2.0;
    double pa_C = 0.5;
    std::size_t pa_epochs = 100;
    std::size_t dlm_iters = 0;  // 0 = 20 x training examples
    std::uint64_t seed = 0;
    double dev_fraction = 0.1;
    std::size_t report_interval = 100;
    bool normalize = true;
    DecoderConstraints constraints;
    /// Verify after every PA step that the hinge on the updated example is
    /// zero whenever tau < C; throws std::logic_error otherwise.
    bool check_pa_invariant = false;

    LossParams loss() const { return {tau_b, tau_e}; }
    void validate() const;
};

struct TrainLogRecord {
    std::size_t iter = 0;
    double dev_loss = 0.0;
    double train_loss = 0.0;
};

/// `iter=<t> dev_loss=<frames> train_loss=<frames>`
std::string format_log_record(const TrainLogRecord& r);

using TrainLogger = std::function<void(const TrainLogRecord&)>;

/// Per-entry mean and (population) stddev of phi at the target pairs.
/// Stddev is floored at kNormalizationFloor.
inline constexpr double kNormalizationFloor = 1e-8;
Normalization fit_normalization(std::span<const PreparedExample> data, const FeatureMapLayout& layout,
                                const DurationPriorParams& priors);

struct PaStructuredStep {
    OnsetOffsetPair prediction;
    double loss = 0.0;   // structured hinge before the update
    double tau = 0.0;
};

/// One max-loss PA-I step in place. `ctx` supplies layout, priors,
/// normalization and constraints; its weights are ignored.
PaStructuredStep pa_structured_step(std::vector<double>& w, const PreparedExample& ex, const Model& ctx,
                                    const TrainConfig& cfg);

/// Averaged structured PA weights over all steps of all epochs.
std::vector<double> train_pa_structured(std::span<const PreparedExample> data, const Model& ctx,
                                        const TrainConfig& cfg);

struct DlmStep {
    OnsetOffsetPair prediction;
    OnsetOffsetPair augmented;
};

/// w += eta0 / (epsilon sqrt(t)) (phi(prediction) - phi(augmented)), in place.
DlmStep dlm_step(std::vector<double>& w, const PreparedExample& ex, const Model& ctx, double eta0,
                 double epsilon, std::size_t t, const LossParams& loss);

/// Direct loss minimisation from `init`; returns the iterate average.
Model train_dlm(std::span<const PreparedExample> train, std::span<const PreparedExample> dev, Model init,
                const TrainConfig& cfg, const TrainLogger& log = {});

/// Mean task loss of `model` over `data` under `loss`.
double mean_loss(std::span<const PreparedExample> data, const Model& model, const LossParams& loss);

struct TrainResult {
    Model model;
    Model pa_model;
    std::vector<TrainLogRecord> log;
    std::size_t train_count = 0;
    std::size_t dev_count = 0;
};

/// Split off dev, fit priors and normalization, PA, then DLM.
TrainResult train_full(std::span<const TrainingExample> data, const TrainConfig& cfg, bool with_classifier,
                       const TrainLogger& log = {});

}  // namespace vowelseg
