#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vowelseg/classifier.hpp"
#include "vowelseg/corpus.hpp"
#include "vowelseg/decode.hpp"
#include "vowelseg/evalkit.hpp"
#include "vowelseg/model_file.hpp"

namespace vowelseg {

/// A trained model plus the frame classifier its layout needs, if any.
class Segmenter {
public:
    /// Throws Error when the file has no model, or when the model's layout
    /// uses classifier features and the file carries no classifier.
    explicit Segmenter(ModelFile file);

    const Model& model() const { return model_; }
    const FrameClassifier* classifier() const { return classifier_ ? &*classifier_ : nullptr; }

    AcousticFrameSequence features(const dsp::Waveform& w) const;
    Decoded predict(const AcousticFrameSequence& seq) const;

private:
    Model model_;
    std::optional<FrameClassifier> classifier_;
};

struct FilePrediction {
    std::filesystem::path path;
    std::optional<OnsetOffsetPair> pair;
    double total_s = 0.0;
    double hop = 0.005;
    std::string error;  // set when pair is empty

    double onset_s() const { return frame_to_seconds(pair->onset, hop); }
    double offset_s() const { return frame_to_seconds(pair->offset, hop); }
    double duration_s() const { return pair->duration() * hop; }
};

/// Per-file errors are captured, never thrown. Output order = input order.
std::vector<FilePrediction> predict_files(const Segmenter& seg, const std::vector<std::filesystem::path>& paths,
                                          std::size_t jobs = 1);

/// Frames labelled from segments.csv (path,start_s,end_s,label) via the
/// segment containing each frame centre. Unlabelled frames are skipped.
std::vector<LabeledFrame> load_labeled_frames(const std::filesystem::path& segments_csv,
                                              const ClassInventory& inventory, std::size_t jobs = 1);

/// Predictions for already-ingested examples, in order.
std::vector<TokenPrediction> predict_examples(const Model& model, std::span<const TrainingExample> examples,
                                              std::size_t jobs = 1);

std::vector<TokenTarget> targets_of(std::span<const TrainingExample> examples);

}  // namespace vowelseg
