#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vowelseg/dsp.hpp"

namespace vowelseg {

/// Declared phone-class inventory with vowel/nasal membership.
struct ClassInventory {
    std::vector<std::string> class_names;
    std::vector<std::size_t> vowels;  // indices into class_names
    std::vector<std::size_t> nasals;

    std::size_t index_of(const std::string& name) const;
    /// Throws std::invalid_argument on duplicates, empty vowel set,
    /// out-of-range indices, or overlapping vowel/nasal sets.
    void validate() const;

    /// Parses lines of `<name> <kind>` where kind is vowel, nasal or other.
    /// Blank lines and '#' comments are ignored.
    static ClassInventory parse(const std::string& text);
};

/// Linear frame-level phone scorer over 39-dimensional MFCC input.
class FrameClassifier {
public:
    FrameClassifier() = default;
    FrameClassifier(ClassInventory inventory, std::vector<double> weights);

    const ClassInventory& inventory() const { return inventory_; }
    std::size_t num_classes() const { return inventory_.class_names.size(); }
    /// Row-major num_classes x 39.
    const std::vector<double>& weights() const { return weights_; }

    std::vector<double> score_frame(std::span<const double> mfcc) const;

    /// Highest score, first class wins ties.
    static std::size_t argmax(std::span<const double> scores);

private:
    ClassInventory inventory_;
    std::vector<double> weights_;
};

struct LabeledFrame {
    dsp::MfccFrame mfcc{};
    std::size_t label = 0;  // index into the inventory
};

struct MulticlassPaOptions {
    double C = 0.5;
    std::size_t epochs = 100;
    std::uint64_t seed = 0;
};

/// Online multiclass PA-I. The returned classifier carries the average of
/// the weight snapshots taken after every example.
FrameClassifier train_pa_multiclass(std::span<const LabeledFrame> data,
                                    const ClassInventory& inventory,
                                    const MulticlassPaOptions& options);

struct PaStep {
    std::size_t rival = 0;
    double loss = 0.0;
    double tau = 0.0;
};

/// One PA-I update in place on row-major weights; exposed for testing.
PaStep pa_multiclass_step(std::vector<double>& weights, std::size_t num_classes,
                          const LabeledFrame& example, double C);

}  // namespace vowelseg
