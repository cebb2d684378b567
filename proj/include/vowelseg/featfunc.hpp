#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vowelseg/features.hpp"

namespace vowelseg {

/// Vowel onset and offset as 1-based frame indices.
struct OnsetOffsetPair {
    int onset = 0;
    int offset = 0;

    int duration() const { return offset - onset; }
    friend bool operator==(const OnsetOffsetPair&, const OnsetOffsetPair&) = default;
};

enum class Anchor { Onset, Offset };
enum class Side { Before, After };
enum class PriorKind { Normal, Gamma };

/// x at the anchor frame.
struct PointEntry {
    Feature feature;
    Anchor anchor;
};

/// mean(a - delta .. a - 1) - mean(a .. a + delta - 1), a = anchor + offset.
struct WindowDiffEntry {
    Feature feature;
    Anchor anchor;
    int offset;
    int delta;
};

/// mean(onset .. offset) minus the mean of `delta` frames before the
/// onset or after the offset.
struct IntervalMeanEntry {
    Feature feature;
    Side side;
    int delta;
};

/// Density of the duration (offset - onset) under a fitted prior.
struct DurationPriorEntry {
    PriorKind kind;
};

using LayoutEntry = std::variant<PointEntry, WindowDiffEntry, IntervalMeanEntry, DurationPriorEntry>;

std::string describe(const LayoutEntry& e);
std::optional<Feature> referenced_feature(const LayoutEntry& e);

inline constexpr int kMaxWindow = 10;
inline constexpr int kMaxAnchorShift = 4;
inline constexpr int kIntervalWindow = 8;
/// Frames that must exist before the onset / after the offset for every
/// entry to be evaluated without clamping.
inline constexpr int kRequiredMarginBefore = kMaxWindow + kMaxAnchorShift;
inline constexpr int kRequiredMarginAfter = kMaxWindow;

inline constexpr std::size_t kLayoutSizeWithClassifier = 103;

/// The frozen, fingerprinted enumeration of feature functions.
class FeatureMapLayout {
public:
    static FeatureMapLayout build(bool with_classifier);

    const std::vector<LayoutEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool with_classifier() const { return with_classifier_; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    /// One line per entry: `<index> <description>`.
    std::string dump() const;

private:
    std::vector<LayoutEntry> entries_;
    bool with_classifier_ = true;
    std::uint64_t fingerprint_ = 0;
};

struct DurationPriorParams {
    double mu = 0.0;      // frames
    double sigma2 = 1.0;  // frames^2
    double k = 1.0;
    double theta = 1.0;

    void validate() const;
    double normal_density(double d) const;
    double gamma_density(double d) const;
};

/// Normal by sample mean / unbiased variance; Gamma by method of moments.
DurationPriorParams fit_duration_priors(std::span<const double> durations);

/// Cumulative sums of one column for O(1) interval means.
class PrefixSum {
public:
    PrefixSum() = default;
    explicit PrefixSum(std::span<const double> column);

    std::size_t size() const { return cumulative_.empty() ? 0 : cumulative_.size() - 1; }
    /// Mean over frames t1..t2 inclusive (1-based). Throws std::out_of_range.
    double mean(int t1, int t2) const;
    /// Sum over frames t1..t2 inclusive, unchecked.
    double sum_unchecked(int t1, int t2) const {
        return cumulative_[static_cast<std::size_t>(t2)] - cumulative_[static_cast<std::size_t>(t1 - 1)];
    }

private:
    std::vector<double> cumulative_;
};

/// Prefix sums for all 16 columns of one utterance; built once, read-only.
/// Keeps a copy of the frame values for point lookups.
class FramePrefixSums {
public:
    explicit FramePrefixSums(const AcousticFrameSequence& seq);

    std::size_t num_frames() const { return values_.num_frames(); }
    double value(Feature f, int t) const { return values_.at(static_cast<std::size_t>(t), f); }
    const PrefixSum& column(Feature f) const { return columns_[static_cast<std::size_t>(f)]; }
    double mean(Feature f, int t1, int t2) const { return column(f).mean(t1, t2); }

private:
    AcousticFrameSequence values_;
    std::array<PrefixSum, kNumFeatures> columns_;
};

/// Convenience wrapper: mean of x[t1..t2] (1-based, inclusive) via prefix sums.
double interval_mean(std::span<const double> column, int t1, int t2);

/// Per-entry z-score statistics.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    void validate(std::size_t n) const;
};

/// Throws std::out_of_range unless every window of the layout fits.
void check_pair_fits(OnsetOffsetPair pair, std::size_t num_frames);

/// phi(x, pair): raw entries, standardised when `norm` is given.
std::vector<double> eval_phi(const FramePrefixSums& sums, OnsetOffsetPair pair,
                             const FeatureMapLayout& layout, const DurationPriorParams& priors,
                             const Normalization* norm = nullptr);

std::vector<double> eval_phi(const AcousticFrameSequence& seq, OnsetOffsetPair pair,
                             const FeatureMapLayout& layout, const DurationPriorParams& priors,
                             const Normalization* norm = nullptr);

}  // namespace vowelseg
