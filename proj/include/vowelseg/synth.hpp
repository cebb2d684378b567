#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vowelseg/corpus.hpp"

namespace vowelseg {

struct SynthSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string label;
};

/// One CVC-like token at 16 kHz. Boundaries are exact sample positions.
struct SynthToken {
    std::vector<double> samples;
    double onset_s = 0.0;
    double offset_s = 0.0;
    double f0 = 0.0;  // mean vowel f0
    std::string onset_class;
    std::string coda_class;
    std::vector<SynthSegment> segments;
};

/// Segment labels emitted by the generator and their phone kind.
inline constexpr const char* kSynthClasses[][2] = {
    {"sil", "other"},    {"burst", "other"}, {"asp", "other"},   {"fric", "other"},
    {"voicebar", "other"}, {"nasal", "nasal"}, {"vowel", "vowel"},
};

/// Deterministic in (seed, index); independent of generation order.
SynthToken synth_token(std::uint64_t seed, std::size_t index);

struct SynthCorpus {
    std::vector<ManifestRow> rows;
    std::vector<SynthToken> tokens;
};

/// Writes wav/tok_NNNNN.wav, manifest.csv, segments.csv (path,start_s,end_s,label)
/// and classes.txt under `out_dir`. Throws Error when the directory is unwritable.
SynthCorpus write_synth_corpus(const std::filesystem::path& out_dir, std::size_t count, std::uint64_t seed,
                               std::size_t jobs = 1);

}  // namespace vowelseg
