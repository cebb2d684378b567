#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace vowelseg::dsp {

/// Added inside every log and geometric mean so silence stays finite.
inline constexpr double kEpsFloor = 1e-10;

inline constexpr int kCanonicalRate = 16000;
inline constexpr int kMinSampleRate = 8000;

inline constexpr std::size_t kNumCepstra = 13;
inline constexpr std::size_t kMfccDim = 3 * kNumCepstra;
inline constexpr std::size_t kNumMelFilters = 26;

inline constexpr double kVoicingThreshold = 0.45;
inline constexpr double kMinF0 = 60.0;
inline constexpr double kMaxF0 = 400.0;

struct Waveform {
    std::vector<double> samples;
    int sample_rate = kCanonicalRate;

    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }

    /// Throws std::invalid_argument when samples are empty or non-finite,
    /// or when the rate is below kMinSampleRate.
    void validate() const;
};

struct GridParams {
    double hop = 0.005;
    double window = 0.025;
};

/// Frame t (1-based) covers samples [(t-1)*hop_samples, (t-1)*hop_samples + window_samples).
struct FrameGrid {
    double hop = 0.005;
    double window = 0.025;
    std::size_t num_frames = 0;
    int sample_rate = kCanonicalRate;
    std::size_t hop_samples = 0;
    std::size_t window_samples = 0;

    std::size_t frame_start(std::size_t t) const { return (t - 1) * hop_samples; }
    /// Anchor time of frame t in seconds (window start).
    double frame_time(std::size_t t) const { return static_cast<double>(t - 1) * hop; }
    std::size_t fft_size() const;
};

struct PowerSpectrumFrame {
    /// One-sided power, DC through Nyquist, scaled so the bins sum to the
    /// windowed frame energy.
    std::vector<double> bins;
    double bin_width = 0.0;

    double nyquist() const { return bin_width * static_cast<double>(bins.size() - 1); }
};

using MfccFrame = std::array<double, kMfccDim>;

struct PitchFrame {
    double f0 = 0.0;  // Hz, 0 when unvoiced
    int voiced = 0;
};

FrameGrid frame_signal(const Waveform& w, const GridParams& params = {});

/// Hamming-windowed, zero-padded power spectrum of frame t (1-based).
PowerSpectrumFrame stft_frame(const Waveform& w, const FrameGrid& grid, std::size_t t);

/// Power spectrum of an arbitrary sample span under a Hamming window,
/// zero-padded to `fft_size`.
PowerSpectrumFrame power_spectrum(std::span<const double> segment, int sample_rate,
                                  std::size_t fft_size);

/// log(eps + sum of bins with centre frequency in [lo, hi]).
double band_energy(const PowerSpectrumFrame& p, double lo, double hi);

/// log(eps + sum of all bins).
double total_log_energy(const PowerSpectrumFrame& p);

/// log(geometric mean / arithmetic mean) of (bins + eps). Always <= 0.
double wiener_entropy(const PowerSpectrumFrame& p);

/// Sum of squared samples within the window of frame t (no taper).
double frame_energy(const Waveform& w, const FrameGrid& grid, std::size_t t);

std::vector<MfccFrame> mfcc_sequence(const Waveform& w, const FrameGrid& grid);

std::vector<PitchFrame> pitch_track(const Waveform& w, const FrameGrid& grid);

/// Sign changes in the 5 ms window centred on the anchor of frame t.
std::size_t zero_crossings(const Waveform& w, const FrameGrid& grid, std::size_t t);

/// Windowed-sinc resampling to `target_rate`.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace vowelseg::dsp
