#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "vowelseg/classifier.hpp"
#include "vowelseg/model.hpp"

namespace vowelseg {

inline constexpr char kModelMagic[] = "VSEG1";
inline constexpr int kModelFileVersion = 1;

/// Container for a trained segmenter and/or a frame classifier.
struct ModelFile {
    std::optional<Model> model;
    std::optional<FrameClassifier> classifier;
};

/// Every number is written as a little-endian IEEE-754 double. 64-bit
/// integers (fingerprint, seed) are split into two exact 32-bit halves.
void save_model_file(std::ostream& out, const ModelFile& file);
void save_model_file(const std::filesystem::path& path, const ModelFile& file);

/// Verifies magic, version, layout fingerprint and dimensions; throws
/// FormatError on any mismatch.
ModelFile load_model_file(std::istream& in);
ModelFile load_model_file(const std::filesystem::path& path);

}  // namespace vowelseg
