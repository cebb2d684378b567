#include "vowelseg/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vowelseg/error.hpp"

namespace vowelseg::dsp {

namespace {

// FFTW planning is not thread-safe; execution with new arrays is. Plans are
// built once per size under a mutex and shared afterwards.
class R2CPlanCache {
public:
    static R2CPlanCache& instance() {
        static R2CPlanCache cache;
        return cache;
    }

    fftw_plan get(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        double* in = fftw_alloc_real(n);
        fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
        fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
        fftw_free(in);
        fftw_free(out);
        plans_.emplace(n, plan);
        return plan;
    }

    ~R2CPlanCache() {
        for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, fftw_plan> plans_;
};

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

double hamming(std::size_t n, std::size_t len) {
    if (len == 1) return 1.0;
    return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(len - 1));
}

void check_frame_index(const FrameGrid& grid, std::size_t t) {
    if (t < 1 || t > grid.num_frames) {
        throw std::out_of_range("frame index " + std::to_string(t) + " outside [1, " +
                                std::to_string(grid.num_frames) + "]");
    }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters on the Hz axis with centres equally spaced in mel,
// spanning 0 Hz to Nyquist.
std::vector<std::vector<double>> mel_filterbank(std::size_t num_bins, double bin_width) {
    const double nyquist = bin_width * static_cast<double>(num_bins - 1);
    const double mel_hi = hz_to_mel(nyquist);
    std::vector<double> edges(kNumMelFilters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(kNumMelFilters + 1));
    }
    std::vector<std::vector<double>> bank(kNumMelFilters, std::vector<double>(num_bins, 0.0));
    for (std::size_t m = 0; m < kNumMelFilters; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < num_bins; ++k) {
            const double f = bin_width * static_cast<double>(k);
            if (f > lo && f < mid) {
                bank[m][k] = (f - lo) / (mid - lo);
            } else if (f >= mid && f < hi) {
                bank[m][k] = (hi - f) / (hi - mid);
            }
        }
    }
    return bank;
}

template <std::size_t N>
std::vector<std::array<double, N>> regression_deltas(const std::vector<std::array<double, N>>& in) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
    std::vector<std::array<double, N>> out(in.size());
    auto at = [&](std::ptrdiff_t t) -> const std::array<double, N>& {
        return in[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t, 0, n - 1))];
    };
    constexpr double denom = 2.0 * (1.0 + 4.0);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        auto& d = out[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i < N; ++i) {
            d[i] = (1.0 * (at(t + 1)[i] - at(t - 1)[i]) + 2.0 * (at(t + 2)[i] - at(t - 2)[i])) / denom;
        }
    }
    return out;
}

double sample_or_zero(const std::vector<double>& s, std::size_t i) {
    return i < s.size() ? s[i] : 0.0;
}

}  // namespace

void Waveform::validate() const {
    if (samples.empty()) throw std::invalid_argument("waveform has no samples");
    if (sample_rate < kMinSampleRate) {
        throw std::invalid_argument("sample rate " + std::to_string(sample_rate) + " below " +
                                    std::to_string(kMinSampleRate) + " Hz");
    }
    for (double x : samples) {
        if (!std::isfinite(x)) throw std::invalid_argument("waveform contains non-finite samples");
    }
}

std::size_t FrameGrid::fft_size() const { return next_pow2(window_samples); }

FrameGrid frame_signal(const Waveform& w, const GridParams& params) {
    w.validate();
    if (!(params.hop > 0.0) || !(params.window > 0.0)) {
        throw std::invalid_argument("hop and window must be positive");
    }
    FrameGrid grid;
    grid.hop = params.hop;
    grid.window = params.window;
    grid.sample_rate = w.sample_rate;
    grid.hop_samples = static_cast<std::size_t>(std::lround(params.hop * w.sample_rate));
    grid.window_samples = static_cast<std::size_t>(std::lround(params.window * w.sample_rate));
    if (grid.hop_samples == 0 || grid.window_samples == 0) {
        throw std::invalid_argument("hop/window shorter than one sample");
    }
    if (w.samples.size() < grid.window_samples) throw SignalTooShort();
    grid.num_frames = (w.samples.size() - grid.window_samples) / grid.hop_samples + 1;
    return grid;
}

PowerSpectrumFrame power_spectrum(std::span<const double> segment, int sample_rate,
                                  std::size_t fft_size) {
    if (segment.size() > fft_size) throw std::invalid_argument("segment longer than FFT size");
    std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(fft_size));
    std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(fft_size / 2 + 1));
    for (std::size_t i = 0; i < fft_size; ++i) {
        in.get()[i] = i < segment.size() ? segment[i] * hamming(i, segment.size()) : 0.0;
    }
    fftw_execute_dft_r2c(R2CPlanCache::instance().get(fft_size), in.get(), out.get());

    PowerSpectrumFrame p;
    p.bin_width = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
    p.bins.resize(fft_size / 2 + 1);
    const double n = static_cast<double>(fft_size);
    for (std::size_t k = 0; k < p.bins.size(); ++k) {
        const double re = out.get()[k][0], im = out.get()[k][1];
        const bool edge = k == 0 || k == fft_size / 2;
        p.bins[k] = (edge ? 1.0 : 2.0) * (re * re + im * im) / n;
    }
    return p;
}

PowerSpectrumFrame stft_frame(const Waveform& w, const FrameGrid& grid, std::size_t t) {
    check_frame_index(grid, t);
    std::span<const double> seg(w.samples.data() + grid.frame_start(t), grid.window_samples);
    return power_spectrum(seg, grid.sample_rate, grid.fft_size());
}

double band_energy(const PowerSpectrumFrame& p, double lo, double hi) {
    const double nyq = p.nyquist();
    if (!(lo >= 0.0) || !(lo < hi) || hi > nyq * (1.0 + 1e-12)) {
        throw std::invalid_argument("invalid band [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < p.bins.size(); ++k) {
        const double f = p.bin_width * static_cast<double>(k);
        if (f >= lo && f <= hi) sum += p.bins[k];
    }
    return std::log(kEpsFloor + sum);
}

double total_log_energy(const PowerSpectrumFrame& p) {
    double sum = 0.0;
    for (double b : p.bins) sum += b;
    return std::log(kEpsFloor + sum);
}

double wiener_entropy(const PowerSpectrumFrame& p) {
    double log_sum = 0.0, sum = 0.0;
    for (double b : p.bins) {
        log_sum += std::log(b + kEpsFloor);
        sum += b + kEpsFloor;
    }
    const double n = static_cast<double>(p.bins.size());
    // AM-GM holds mathematically; clamp rounding noise on flat spectra.
    return std::min(0.0, log_sum / n - std::log(sum / n));
}

double frame_energy(const Waveform& w, const FrameGrid& grid, std::size_t t) {
    check_frame_index(grid, t);
    const std::size_t s = grid.frame_start(t);
    double e = 0.0;
    for (std::size_t i = 0; i < grid.window_samples; ++i) e += w.samples[s + i] * w.samples[s + i];
    return e;
}

std::vector<MfccFrame> mfcc_sequence(const Waveform& w, const FrameGrid& grid) {
    const std::size_t nfft = grid.fft_size();
    const std::size_t num_bins = nfft / 2 + 1;
    const auto bank = mel_filterbank(num_bins, static_cast<double>(grid.sample_rate) / nfft);

    std::vector<std::array<double, kNumCepstra>> statics(grid.num_frames);
    std::array<double, kNumMelFilters> log_mel{};
    for (std::size_t t = 1; t <= grid.num_frames; ++t) {
        const auto p = stft_frame(w, grid, t);
        for (std::size_t m = 0; m < kNumMelFilters; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < num_bins; ++k) e += bank[m][k] * p.bins[k];
            log_mel[m] = std::log(kEpsFloor + e);
        }
        auto& c = statics[t - 1];
        const double scale = std::sqrt(2.0 / kNumMelFilters);
        for (std::size_t i = 1; i < kNumCepstra; ++i) {
            double acc = 0.0;
            for (std::size_t m = 0; m < kNumMelFilters; ++m) {
                acc += log_mel[m] * std::cos(std::numbers::pi * static_cast<double>(i) *
                                             (static_cast<double>(m) + 0.5) / kNumMelFilters);
            }
            c[i] = scale * acc;
        }
        c[0] = total_log_energy(p);
    }

    const auto d1 = regression_deltas(statics);
    const auto d2 = regression_deltas(d1);
    std::vector<MfccFrame> out(grid.num_frames);
    for (std::size_t t = 0; t < grid.num_frames; ++t) {
        std::copy(statics[t].begin(), statics[t].end(), out[t].begin());
        std::copy(d1[t].begin(), d1[t].end(), out[t].begin() + kNumCepstra);
        std::copy(d2[t].begin(), d2[t].end(), out[t].begin() + 2 * kNumCepstra);
    }
    return out;
}

std::vector<PitchFrame> pitch_track(const Waveform& w, const FrameGrid& grid) {
    const std::size_t n = grid.window_samples;
    const auto min_lag = static_cast<std::size_t>(std::floor(grid.sample_rate / kMaxF0));
    const auto max_lag = static_cast<std::size_t>(std::ceil(grid.sample_rate / kMinF0));
    const auto& x = w.samples;

    std::vector<PitchFrame> out(grid.num_frames);
    std::vector<double> nccf(max_lag + 2, 0.0);
    for (std::size_t t = 1; t <= grid.num_frames; ++t) {
        const std::size_t s = grid.frame_start(t);
        double e0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) e0 += x[s + i] * x[s + i];
        if (e0 <= kEpsFloor) continue;

        // Lag energy is updated incrementally as the comparison window slides.
        double ek = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = sample_or_zero(x, s + min_lag - 1 + i);
            ek += v * v;
        }
        double best = -1.0;
        for (std::size_t k = min_lag - 1; k <= max_lag + 1; ++k) {
            if (k > min_lag - 1) {
                const double leaving = sample_or_zero(x, s + k - 1);
                const double entering = sample_or_zero(x, s + k - 1 + n);
                ek += entering * entering - leaving * leaving;
            }
            double cross = 0.0;
            for (std::size_t i = 0; i < n; ++i) cross += x[s + i] * sample_or_zero(x, s + k + i);
            const double denom = std::sqrt(e0 * std::max(ek, 0.0));
            nccf[k] = denom > kEpsFloor ? cross / denom : 0.0;
            if (k >= min_lag && k <= max_lag) best = std::max(best, nccf[k]);
        }
        if (best < kVoicingThreshold) continue;

        // Shortest-lag local peak close to the global maximum avoids octave
        // (period-doubling) errors.
        std::size_t lag = 0;
        for (std::size_t k = min_lag; k <= max_lag; ++k) {
            if (nccf[k] >= 0.9 * best && nccf[k] >= nccf[k - 1] && nccf[k] >= nccf[k + 1]) {
                lag = k;
                break;
            }
        }
        if (lag == 0) continue;
        double refined = static_cast<double>(lag);
        const double a = nccf[lag - 1], b = nccf[lag], c = nccf[lag + 1];
        const double curv = a - 2.0 * b + c;
        if (curv < 0.0) refined += 0.5 * (a - c) / curv;
        out[t - 1].f0 = grid.sample_rate / refined;
        out[t - 1].voiced = 1;
    }
    return out;
}

std::size_t zero_crossings(const Waveform& w, const FrameGrid& grid, std::size_t t) {
    check_frame_index(grid, t);
    const auto half = static_cast<std::ptrdiff_t>(std::lround(0.0025 * grid.sample_rate));
    const auto anchor = static_cast<std::ptrdiff_t>(grid.frame_start(t));
    const auto lo = std::max<std::ptrdiff_t>(0, anchor - half);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w.samples.size()), anchor + half);
    std::size_t count = 0;
    for (std::ptrdiff_t i = lo + 1; i < hi; ++i) {
        const bool prev = w.samples[static_cast<std::size_t>(i - 1)] >= 0.0;
        const bool cur = w.samples[static_cast<std::size_t>(i)] >= 0.0;
        if (prev != cur) ++count;
    }
    return count;
}

Waveform resample(const Waveform& w, int target_rate) {
    w.validate();
    if (target_rate <= 0) throw std::invalid_argument("target rate must be positive");
    if (target_rate == w.sample_rate) return w;

    const double ratio = static_cast<double>(target_rate) / w.sample_rate;
    const double cutoff = std::min(1.0, ratio);  // relative to source Nyquist
    const double half_width = std::ceil(16.0 / cutoff);
    const auto out_len = static_cast<std::size_t>(std::floor(static_cast<double>(w.samples.size()) * ratio));
    const auto n_in = static_cast<std::ptrdiff_t>(w.samples.size());

    Waveform out;
    out.sample_rate = target_rate;
    out.samples.resize(std::max<std::size_t>(out_len, 1));
    for (std::size_t m = 0; m < out.samples.size(); ++m) {
        const double pos = static_cast<double>(m) / ratio;
        const auto first = static_cast<std::ptrdiff_t>(std::ceil(pos - half_width));
        const auto last = static_cast<std::ptrdiff_t>(std::floor(pos + half_width));
        double acc = 0.0;
        for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(first, 0); k <= std::min(last, n_in - 1); ++k) {
            const double u = pos - static_cast<double>(k);
            const double arg = cutoff * u;
            const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
            const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * u / half_width);
            acc += w.samples[static_cast<std::size_t>(k)] * cutoff * sinc * win;
        }
        out.samples[m] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

}  // namespace vowelseg::dsp
