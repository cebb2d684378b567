#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "vowelseg/dsp.hpp"

namespace vowelseg {

/// Reads a PCM WAV (16, 24 or 32-bit integer). Multi-channel files keep the
/// first channel. Samples are scaled to [-1, 1). Throws FormatError.
dsp::Waveform read_wav(const std::filesystem::path& path);
dsp::Waveform read_wav(std::istream& in);

/// read_wav, then resample to 16 kHz when needed.
dsp::Waveform load_audio(const std::filesystem::path& path);

/// 16-bit mono PCM; samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate);
void write_wav(std::ostream& out, std::span<const double> samples, int sample_rate);

}  // namespace vowelseg
