#include "vowelseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace vowelseg {

namespace {

constexpr double kSmaxBefore = 0.006;
constexpr double kSmaxAfter = 0.018;
constexpr double kLowBand[2] = {20.0, 300.0};
constexpr double kHighBandStart = 3000.0;

bool bounded_unit(Feature f) {
    return f == Feature::GVowel || f == Feature::GNasal || f == Feature::LVowel || f == Feature::VRapt;
}

double smax_at(const dsp::Waveform& w, const dsp::FrameGrid& grid, std::size_t t) {
    const auto sr = static_cast<double>(grid.sample_rate);
    const auto centre = static_cast<std::ptrdiff_t>(grid.frame_start(t) + grid.window_samples / 2);
    const auto n = static_cast<std::ptrdiff_t>(w.samples.size());
    const auto lo = std::clamp<std::ptrdiff_t>(centre - std::lround(kSmaxBefore * sr), 0, n);
    const auto hi = std::clamp<std::ptrdiff_t>(centre + std::lround(kSmaxAfter * sr), 0, n);
    std::span<const double> region(w.samples.data() + lo, static_cast<std::size_t>(hi - lo));
    std::size_t nfft = grid.fft_size();
    while (nfft < region.size()) nfft <<= 1;
    const auto p = dsp::power_spectrum(region, grid.sample_rate, nfft);
    return std::log(dsp::kEpsFloor + *std::max_element(p.bins.begin(), p.bins.end()));
}

}  // namespace

AcousticFrameSequence::AcousticFrameSequence(std::size_t num_frames, double hop)
    : num_frames_(num_frames), hop_(hop), data_(num_frames * kNumFeatures, 0.0) {}

void AcousticFrameSequence::validate() const {
    for (std::size_t c = 0; c < kNumFeatures; ++c) {
        const auto f = static_cast<Feature>(c);
        for (double v : column(f)) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("non-finite value in column " + std::string(feature_name(f)));
            }
            if (bounded_unit(f) && (v < 0.0 || v > 1.0)) {
                throw std::invalid_argument("column " + std::string(feature_name(f)) + " outside [0, 1]");
            }
            if (f >= Feature::D1 && v < 0.0) throw std::invalid_argument("negative MFCC distance");
        }
    }
}

std::vector<double> smooth_hamming(std::span<const double> x, std::size_t length) {
    if (length == 0) throw std::invalid_argument("smoothing length must be positive");
    std::vector<double> kernel(length, 1.0);
    if (length > 1) {
        for (std::size_t i = 0; i < length; ++i) {
            kernel[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                               static_cast<double>(length - 1));
        }
    }
    double total = 0.0;
    for (double k : kernel) total += k;
    for (double& k : kernel) k /= total;

    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(length / 2);
    std::vector<double> out(x.size(), 0.0);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(length); ++i) {
            const auto idx = std::clamp<std::ptrdiff_t>(t + i - half, 0, n - 1);
            acc += kernel[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(idx)];
        }
        out[static_cast<std::size_t>(t)] = acc;
    }
    return out;
}

double gibbs_vowel_likelihood(std::span<const double> scores, std::span<const std::size_t> vowel_set) {
    if (scores.empty() || vowel_set.empty()) {
        throw std::invalid_argument("Gibbs likelihood needs scores and a non-empty vowel set");
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double s : scores) total += std::exp(s - peak);
    double vowel = 0.0;
    for (std::size_t v : vowel_set) {
        if (v >= scores.size()) throw std::invalid_argument("vowel index outside score vector");
        vowel += std::exp(scores[v] - peak);
    }
    return std::clamp(vowel / total, 0.0, 1.0);
}

AcousticFrameSequence extract_features(const dsp::Waveform& w, const FrameClassifier* clf,
                                       const dsp::GridParams& params) {
    const auto grid = dsp::frame_signal(w, params);
    const std::size_t T = grid.num_frames;
    AcousticFrameSequence seq(T, grid.hop);

    for (std::size_t t = 1; t <= T; ++t) {
        const auto p = dsp::stft_frame(w, grid, t);
        seq.at(t, Feature::EShortTerm) = std::log(dsp::kEpsFloor + dsp::frame_energy(w, grid, t));
        seq.at(t, Feature::ETotal) = dsp::total_log_energy(p);
        seq.at(t, Feature::ELow) = dsp::band_energy(p, kLowBand[0], kLowBand[1]);
        seq.at(t, Feature::EHigh) = dsp::band_energy(p, kHighBandStart, p.nyquist());
        seq.at(t, Feature::HWiener) = dsp::wiener_entropy(p);
        seq.at(t, Feature::SMax) = smax_at(w, grid, t);
        seq.at(t, Feature::Nzc) = static_cast<double>(dsp::zero_crossings(w, grid, t));
    }

    // F0 is min-max normalised over voiced frames, 0 on unvoiced frames.
    const auto pitch = dsp::pitch_track(w, grid);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : pitch) {
        if (p.voiced) {
            lo = std::min(lo, p.f0);
            hi = std::max(hi, p.f0);
        }
    }
    std::vector<double> f0(T, 0.0), voiced(T, 0.0);
    for (std::size_t i = 0; i < T; ++i) {
        if (!pitch[i].voiced) continue;
        voiced[i] = 1.0;
        f0[i] = hi > lo ? (pitch[i].f0 - lo) / (hi - lo) : 1.0;
    }
    std::ranges::copy(smooth_hamming(f0), seq.column(Feature::F0Hat).begin());
    std::ranges::copy(smooth_hamming(voiced), seq.column(Feature::VRapt).begin());

    const auto mfcc = dsp::mfcc_sequence(w, grid);
    const auto last = static_cast<std::ptrdiff_t>(T) - 1;
    for (std::size_t j = 1; j <= 4; ++j) {
        auto col = seq.column(static_cast<Feature>(static_cast<std::size_t>(Feature::D1) + j - 1));
        for (std::ptrdiff_t t = 0; t <= last; ++t) {
            const auto& a = mfcc[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t - static_cast<std::ptrdiff_t>(j), 0, last))];
            const auto& b = mfcc[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t + static_cast<std::ptrdiff_t>(j), 0, last))];
            double sq = 0.0;
            for (std::size_t i = 0; i < dsp::kMfccDim; ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
            col[static_cast<std::size_t>(t)] = std::sqrt(sq);
        }
    }

    if (clf != nullptr) {
        const auto& inv = clf->inventory();
        std::vector<double> is_vowel(T, 0.0), is_nasal(T, 0.0);
        for (std::size_t i = 0; i < T; ++i) {
            const auto scores = clf->score_frame(mfcc[i]);
            const std::size_t y = FrameClassifier::argmax(scores);
            is_vowel[i] = std::ranges::find(inv.vowels, y) != inv.vowels.end() ? 1.0 : 0.0;
            is_nasal[i] = std::ranges::find(inv.nasals, y) != inv.nasals.end() ? 1.0 : 0.0;
            seq.at(i + 1, Feature::LVowel) = gibbs_vowel_likelihood(scores, inv.vowels);
        }
        std::ranges::copy(smooth_hamming(is_vowel), seq.column(Feature::GVowel).begin());
        std::ranges::copy(smooth_hamming(is_nasal), seq.column(Feature::GNasal).begin());
        seq.set_has_classifier_features(true);
    } else {
        for (Feature f : {Feature::GVowel, Feature::GNasal, Feature::LVowel}) {
            std::ranges::fill(seq.column(f), kNoClassifierFill);
        }
    }
    return seq;
}

void write_features_csv(std::ostream& out, const AcousticFrameSequence& seq) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) out << (c ? "," : "") << kFeatureNames[c];
    out << '\n';
    const auto flags = out.flags();
    const auto prec = out.precision();
    out.imbue(std::locale::classic());
    out << std::setprecision(9);
    out.unsetf(std::ios::floatfield);
    for (std::size_t t = 1; t <= seq.num_frames(); ++t) {
        for (std::size_t c = 0; c < kNumFeatures; ++c) {
            out << (c ? "," : "") << seq.at(t, static_cast<Feature>(c));
        }
        out << '\n';
    }
    out.flags(flags);
    out.precision(prec);
}

}  // namespace vowelseg
