#include "vowelseg/featfunc.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vowelseg/error.hpp"

namespace vowelseg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

const char* anchor_name(Anchor a) { return a == Anchor::Onset ? "t_b" : "t_e"; }

struct Cell {
    Feature feature;
    bool onset;
    bool offset;
};

struct TableRow {
    int delta;
    int shift;  // applied to the onset anchor
    std::vector<Cell> cells;
};

using F = Feature;

// Type 2 grid, rows top to bottom and columns in table order
// (E_short_term, E_low, E_high, E_total, H_wiener, S_max, F0, V, N_zc,
// G_vowel, G_nasal, L_vowel, D1..D4).
const std::vector<TableRow>& window_table() {
    static const std::vector<TableRow> rows = {
        {1, 0, {{F::SMax, true, false}}},
        {2, 0, {{F::SMax, true, false}}},
        {3, 0, {{F::EShortTerm, true, true}, {F::SMax, true, false}, {F::D1, true, true},
                {F::D2, true, true}, {F::D3, true, true}, {F::D4, true, true}}},
        {4, 0, {{F::EShortTerm, true, true}, {F::SMax, true, false}}},
        {5, 0, {{F::EShortTerm, true, false}, {F::SMax, true, false}}},
        {6, 0, {{F::ELow, true, false}, {F::GVowel, true, true}, {F::LVowel, true, true}}},
        {8, 0, {{F::ELow, true, true}, {F::EHigh, true, true}, {F::ETotal, true, true},
                {F::HWiener, true, true}, {F::F0Hat, true, true}, {F::VRapt, true, true},
                {F::Nzc, true, true}, {F::GVowel, true, true}, {F::GNasal, false, true},
                {F::LVowel, true, true}}},
        {8, -2, {{F::ELow, true, false}, {F::EHigh, true, false}, {F::ETotal, true, false}}},
        {10, 0, {{F::ELow, true, true}, {F::EHigh, true, true}, {F::ETotal, true, true},
                 {F::HWiener, true, true}, {F::F0Hat, true, true}, {F::VRapt, true, true},
                 {F::Nzc, true, true}, {F::GVowel, true, true}, {F::GNasal, false, true},
                 {F::LVowel, true, true}, {F::D1, true, true}, {F::D2, true, true},
                 {F::D3, true, true}, {F::D4, true, true}}},
        {10, -4, {{F::ELow, true, false}, {F::EHigh, true, false}, {F::ETotal, true, false}}},
    };
    return rows;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

int anchor_frame(Anchor a, OnsetOffsetPair pair) { return a == Anchor::Onset ? pair.onset : pair.offset; }

}  // namespace

std::string describe(const LayoutEntry& e) {
    std::ostringstream out;
    std::visit(overloaded{
                   [&](const PointEntry& p) {
                       out << "point " << feature_name(p.feature) << " @" << anchor_name(p.anchor);
                   },
                   [&](const WindowDiffEntry& w) {
                       out << "window_diff " << feature_name(w.feature) << " @" << anchor_name(w.anchor);
                       if (w.offset != 0) out << (w.offset > 0 ? "+" : "") << w.offset;
                       out << " delta=" << w.delta;
                   },
                   [&](const IntervalMeanEntry& m) {
                       out << "interval_mean " << feature_name(m.feature) << ' '
                           << (m.side == Side::Before ? "before" : "after") << " delta=" << m.delta;
                   },
                   [&](const DurationPriorEntry& d) {
                       out << "duration_prior " << (d.kind == PriorKind::Normal ? "normal" : "gamma");
                   },
               },
               e);
    return out.str();
}

std::optional<Feature> referenced_feature(const LayoutEntry& e) {
    return std::visit(overloaded{
                          [](const PointEntry& p) -> std::optional<Feature> { return p.feature; },
                          [](const WindowDiffEntry& w) -> std::optional<Feature> { return w.feature; },
                          [](const IntervalMeanEntry& m) -> std::optional<Feature> { return m.feature; },
                          [](const DurationPriorEntry&) -> std::optional<Feature> { return std::nullopt; },
                      },
                      e);
}

FeatureMapLayout FeatureMapLayout::build(bool with_classifier) {
    FeatureMapLayout layout;
    layout.with_classifier_ = with_classifier;
    auto& out = layout.entries_;

    // Type 1: point values.
    for (F f : {F::ETotal, F::ELow, F::EHigh, F::SMax}) out.push_back(PointEntry{f, Anchor::Onset});
    for (F f : {F::D1, F::D2, F::D3, F::D4}) {
        out.push_back(PointEntry{f, Anchor::Onset});
        out.push_back(PointEntry{f, Anchor::Offset});
    }

    // Type 2: windowed mean differences.
    for (const auto& row : window_table()) {
        for (const auto& cell : row.cells) {
            if (cell.onset) out.push_back(WindowDiffEntry{cell.feature, Anchor::Onset, row.shift, row.delta});
            if (cell.offset) out.push_back(WindowDiffEntry{cell.feature, Anchor::Offset, 0, row.delta});
        }
    }

    // Type 3: vowel-interval mean against the flanking windows.
    for (F f : {F::EShortTerm, F::ELow, F::EHigh, F::ETotal, F::VRapt, F::Nzc, F::LVowel}) {
        out.push_back(IntervalMeanEntry{f, Side::Before, kIntervalWindow});
        out.push_back(IntervalMeanEntry{f, Side::After, kIntervalWindow});
    }

    // Type 4: duration priors.
    out.push_back(DurationPriorEntry{PriorKind::Normal});
    out.push_back(DurationPriorEntry{PriorKind::Gamma});

    if (!with_classifier) {
        std::erase_if(out, [](const LayoutEntry& e) {
            const auto f = referenced_feature(e);
            return f && is_classifier_feature(*f);
        });
    }
    layout.fingerprint_ = fnv1a(layout.dump());
    return layout;
}

std::string FeatureMapLayout::dump() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < entries_.size(); ++i) out << i << ' ' << describe(entries_[i]) << '\n';
    return out.str();
}

void DurationPriorParams::validate() const {
    if (!(sigma2 > 0.0) || !(k > 0.0) || !(theta > 0.0) || !std::isfinite(mu)) {
        throw std::invalid_argument("duration prior parameters must be positive and finite");
    }
}

double DurationPriorParams::normal_density(double d) const {
    const double z = d - mu;
    return std::exp(-0.5 * z * z / sigma2) / std::sqrt(2.0 * std::numbers::pi * sigma2);
}

double DurationPriorParams::gamma_density(double d) const {
    if (d <= 0.0) return 0.0;
    return std::exp((k - 1.0) * std::log(d) - d / theta - std::lgamma(k) - k * std::log(theta));
}

DurationPriorParams fit_duration_priors(std::span<const double> durations) {
    if (durations.size() < 2) throw Error("duration prior fit needs at least two durations");
    double sum = 0.0;
    for (double d : durations) {
        if (!(d >= 1.0)) throw std::invalid_argument("durations must be >= 1 frame");
        sum += d;
    }
    const double n = static_cast<double>(durations.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double d : durations) ss += (d - mean) * (d - mean);
    const double var = ss / (n - 1.0);
    if (!(var > 0.0)) throw Error("duration prior fit: zero variance");
    DurationPriorParams p;
    p.mu = mean;
    p.sigma2 = var;
    p.k = mean * mean / var;
    p.theta = var / mean;
    return p;
}

PrefixSum::PrefixSum(std::span<const double> column) : cumulative_(column.size() + 1, 0.0) {
    for (std::size_t i = 0; i < column.size(); ++i) cumulative_[i + 1] = cumulative_[i] + column[i];
}

double PrefixSum::mean(int t1, int t2) const {
    if (t1 < 1 || t2 < t1 || static_cast<std::size_t>(t2) > size()) {
        throw std::out_of_range("interval [" + std::to_string(t1) + ", " + std::to_string(t2) +
                                "] outside [1, " + std::to_string(size()) + "]");
    }
    return sum_unchecked(t1, t2) / static_cast<double>(t2 - t1 + 1);
}

FramePrefixSums::FramePrefixSums(const AcousticFrameSequence& seq) : values_(seq) {
    for (std::size_t c = 0; c < kNumFeatures; ++c) columns_[c] = PrefixSum(seq.column(static_cast<Feature>(c)));
}

double interval_mean(std::span<const double> column, int t1, int t2) {
    return PrefixSum(column).mean(t1, t2);
}

void Normalization::validate(std::size_t n) const {
    if (mean.size() != n || stddev.size() != n) throw std::invalid_argument("normalization table has wrong dimension");
    for (double s : stddev) {
        if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("normalization stddev must be positive");
    }
}

void check_pair_fits(OnsetOffsetPair pair, std::size_t num_frames) {
    const auto T = static_cast<long long>(num_frames);
    if (pair.onset >= pair.offset || pair.onset - kRequiredMarginBefore < 1 ||
        pair.offset + kRequiredMarginAfter > T) {
        throw std::out_of_range("pair (" + std::to_string(pair.onset) + ", " + std::to_string(pair.offset) +
                                ") does not leave feature windows inside [1, " + std::to_string(T) + "]");
    }
}

std::vector<double> eval_phi(const FramePrefixSums& sums, OnsetOffsetPair pair,
                             const FeatureMapLayout& layout, const DurationPriorParams& priors,
                             const Normalization* norm) {
    check_pair_fits(pair, sums.num_frames());
    const int tb = pair.onset, te = pair.offset;
    const double duration = static_cast<double>(pair.duration());
    std::vector<double> phi(layout.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
        phi[i] = std::visit(
            overloaded{
                [&](const PointEntry& p) { return sums.value(p.feature, anchor_frame(p.anchor, pair)); },
                [&](const WindowDiffEntry& w) {
                    const int a = anchor_frame(w.anchor, pair) + w.offset;
                    const auto& col = sums.column(w.feature);
                    return col.sum_unchecked(a - w.delta, a - 1) / w.delta -
                           col.sum_unchecked(a, a + w.delta - 1) / w.delta;
                },
                [&](const IntervalMeanEntry& m) {
                    const auto& col = sums.column(m.feature);
                    const double inside = col.sum_unchecked(tb, te) / (te - tb + 1);
                    if (m.side == Side::Before) return inside - col.sum_unchecked(tb - m.delta, tb - 1) / m.delta;
                    return inside - col.sum_unchecked(te + 1, te + m.delta) / m.delta;
                },
                [&](const DurationPriorEntry& d) {
                    return d.kind == PriorKind::Normal ? priors.normal_density(duration)
                                                       : priors.gamma_density(duration);
                },
            },
            layout.entries()[i]);
    }
    if (norm != nullptr) {
        for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = (phi[i] - norm->mean[i]) / norm->stddev[i];
    }
    return phi;
}

std::vector<double> eval_phi(const AcousticFrameSequence& seq, OnsetOffsetPair pair,
                             const FeatureMapLayout& layout, const DurationPriorParams& priors,
                             const Normalization* norm) {
    return eval_phi(FramePrefixSums(seq), pair, layout, priors, norm);
}

}  // namespace vowelseg
