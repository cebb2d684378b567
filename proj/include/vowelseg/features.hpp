#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "vowelseg/classifier.hpp"
#include "vowelseg/dsp.hpp"

namespace vowelseg {

enum class Feature : std::size_t {
    EShortTerm,
    ETotal,
    ELow,
    EHigh,
    HWiener,
    SMax,
    F0Hat,
    VRapt,
    Nzc,
    GVowel,
    GNasal,
    LVowel,
    D1,
    D2,
    D3,
    D4,
};

inline constexpr std::size_t kNumFeatures = 16;

/// Column headers, in storage order.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "E_short_term", "E_total", "E_low",   "E_high",   "H_wiener", "S_max", "F0_hat", "V_rapt",
    "N_zc",         "G_vowel", "G_nasal", "L_vowel",  "D1",       "D2",    "D3",     "D4",
};

constexpr std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

constexpr bool is_classifier_feature(Feature f) {
    return f == Feature::GVowel || f == Feature::GNasal || f == Feature::LVowel;
}

/// Value placed in classifier columns when no classifier is supplied.
inline constexpr double kNoClassifierFill = 0.5;

inline constexpr std::size_t kSmoothingLength = 5;

/// T x 16 acoustic features. Frames are addressed 1-based to match
/// onset/offset indices; storage is column-major.
class AcousticFrameSequence {
public:
    AcousticFrameSequence() = default;
    AcousticFrameSequence(std::size_t num_frames, double hop);

    std::size_t num_frames() const { return num_frames_; }
    double hop() const { return hop_; }

    double at(std::size_t t, Feature f) const { return data_[offset(t, f)]; }
    double& at(std::size_t t, Feature f) { return data_[offset(t, f)]; }

    std::span<const double> column(Feature f) const {
        return {data_.data() + static_cast<std::size_t>(f) * num_frames_, num_frames_};
    }
    std::span<double> column(Feature f) {
        return {data_.data() + static_cast<std::size_t>(f) * num_frames_, num_frames_};
    }

    bool has_classifier_features() const { return classifier_features_; }
    void set_has_classifier_features(bool v) { classifier_features_ = v; }

    /// Throws std::invalid_argument when a value is non-finite or outside
    /// its documented range.
    void validate() const;

private:
    std::size_t offset(std::size_t t, Feature f) const {
        return static_cast<std::size_t>(f) * num_frames_ + (t - 1);
    }

    std::size_t num_frames_ = 0;
    double hop_ = 0.005;
    bool classifier_features_ = false;
    std::vector<double> data_;
};

/// Computes all 16 per-frame features. With `clf == nullptr` the classifier
/// columns hold kNoClassifierFill.
AcousticFrameSequence extract_features(const dsp::Waveform& w, const FrameClassifier* clf = nullptr,
                                       const dsp::GridParams& grid = {});

/// Vowel mass of the softmax over classifier scores.
double gibbs_vowel_likelihood(std::span<const double> scores, std::span<const std::size_t> vowel_set);

/// Convolution with a unit-sum Hamming kernel; edges replicate.
std::vector<double> smooth_hamming(std::span<const double> x, std::size_t length = kSmoothingLength);

/// One row per frame, header = feature names, 9 significant digits.
void write_features_csv(std::ostream& out, const AcousticFrameSequence& seq);

}  // namespace vowelseg
