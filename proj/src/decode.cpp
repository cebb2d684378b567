#include "vowelseg/decode.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "vowelseg/error.hpp"

namespace vowelseg {

void DecoderConstraints::validate() const {
    if (margin_before < kRequiredMarginBefore || margin_after < kRequiredMarginAfter) {
        throw std::invalid_argument("decoder margins must be at least " + std::to_string(kRequiredMarginBefore) +
                                    " frames before and " + std::to_string(kRequiredMarginAfter) + " after");
    }
    if (min_duration < 1) throw std::invalid_argument("min_duration must be >= 1");
    if (max_duration != 0 && max_duration < min_duration) {
        throw std::invalid_argument("max_duration must be 0 or >= min_duration");
    }
}

bool DecoderConstraints::admits(OnsetOffsetPair pair, std::size_t num_frames) const {
    const auto T = static_cast<long long>(num_frames);
    const int d = pair.duration();
    return pair.onset - margin_before >= 1 && pair.offset + margin_after <= T && d >= min_duration &&
           (max_duration == 0 || d <= max_duration);
}

void Model::validate() const {
    if (weights.size() != layout.size()) {
        throw std::invalid_argument("weight dimension " + std::to_string(weights.size()) +
                                    " does not match layout dimension " + std::to_string(layout.size()));
    }
    if (normalization) normalization->validate(layout.size());
    priors.validate();
    constraints.validate();
    if (loss_params.tau_b < 0.0 || loss_params.tau_e < 0.0) throw std::invalid_argument("loss tolerances must be >= 0");
}

double task_loss(OnsetOffsetPair target, OnsetOffsetPair pred, const LossParams& p) {
    const double db = std::abs(static_cast<double>(pred.onset - target.onset)) - p.tau_b;
    const double de = std::abs(static_cast<double>(pred.offset - target.offset)) - p.tau_e;
    return std::max(0.0, db) + std::max(0.0, de);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double score_pair(const FramePrefixSums& sums, const Model& model, OnsetOffsetPair pair) {
    return dot(model.weights, eval_phi(sums, pair, model.layout, model.priors, model.norm()));
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

// w . phi(t_b, t_e) decomposes into onset-only, offset-only, duration-only
// and interval-mean terms, so each candidate costs O(1) after O(n T) setup.
class PairScorer {
public:
    PairScorer(const FramePrefixSums& sums, const Model& model) {
        model.validate();
        model.constraints.validate();
        T_ = static_cast<int>(sums.num_frames());
        const auto& c = model.constraints;
        tb_lo_ = 1 + c.margin_before;
        te_hi_ = T_ - c.margin_after;
        if (te_hi_ - tb_lo_ < c.min_duration) throw NoAdmissiblePair();
        min_dur_ = c.min_duration;
        max_dur_ = c.max_duration == 0 ? te_hi_ - tb_lo_ : c.max_duration;

        const auto& entries = model.layout.entries();
        const Normalization* norm = model.norm();
        std::vector<double> w(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            w[i] = norm ? model.weights[i] / norm->stddev[i] : model.weights[i];
            if (norm) constant_ -= model.weights[i] * norm->mean[i] / norm->stddev[i];
        }

        onset_.assign(static_cast<std::size_t>(T_ + 2), 0.0);
        offset_.assign(static_cast<std::size_t>(T_ + 2), 0.0);
        duration_.assign(static_cast<std::size_t>(max_dur_ + 1), 0.0);
        inside_.assign(static_cast<std::size_t>(T_ + 1), 0.0);

        std::array<double, kNumFeatures> inside_weight{};
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const double wi = w[i];
            std::visit(
                overloaded{
                    [&](const PointEntry& p) {
                        auto& table = p.anchor == Anchor::Onset ? onset_ : offset_;
                        for (int t : range(p.anchor)) table[idx(t)] += wi * sums.value(p.feature, t);
                    },
                    [&](const WindowDiffEntry& e) {
                        auto& table = e.anchor == Anchor::Onset ? onset_ : offset_;
                        const auto& col = sums.column(e.feature);
                        for (int t : range(e.anchor)) {
                            const int a = t + e.offset;
                            table[idx(t)] += wi * (col.sum_unchecked(a - e.delta, a - 1) / e.delta -
                                                   col.sum_unchecked(a, a + e.delta - 1) / e.delta);
                        }
                    },
                    [&](const IntervalMeanEntry& m) {
                        const auto& col = sums.column(m.feature);
                        inside_weight[static_cast<std::size_t>(m.feature)] += wi;
                        if (m.side == Side::Before) {
                            for (int t : range(Anchor::Onset)) {
                                onset_[idx(t)] -= wi * col.sum_unchecked(t - m.delta, t - 1) / m.delta;
                            }
                        } else {
                            for (int t : range(Anchor::Offset)) {
                                offset_[idx(t)] -= wi * col.sum_unchecked(t + 1, t + m.delta) / m.delta;
                            }
                        }
                    },
                    [&](const DurationPriorEntry& d) {
                        for (int k = 1; k <= max_dur_; ++k) {
                            duration_[idx(k)] += wi * (d.kind == PriorKind::Normal
                                                           ? model.priors.normal_density(k)
                                                           : model.priors.gamma_density(k));
                        }
                    },
                },
                entries[i]);
        }
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            if (inside_weight[f] == 0.0) continue;
            const auto& col = sums.column(static_cast<Feature>(f));
            for (int t = 1; t <= T_; ++t) inside_[idx(t)] += inside_weight[f] * col.sum_unchecked(1, t);
        }
    }

    template <class Extra>
    Decoded argmax(Extra&& extra) const {
        Decoded best;
        bool found = false;
        for (int tb = tb_lo_; tb + min_dur_ <= te_hi_; ++tb) {
            const double base = constant_ + onset_[idx(tb)];
            const int te_last = std::min(te_hi_, tb + max_dur_);
            for (int te = tb + min_dur_; te <= te_last; ++te) {
                const double s = base + offset_[idx(te)] +
                                 (inside_[idx(te)] - inside_[idx(tb - 1)]) / (te - tb + 1) +
                                 duration_[idx(te - tb)] + extra(tb, te);
                if (!found || s > best.score) {
                    best = {{tb, te}, s};
                    found = true;
                }
            }
        }
        if (!found) throw NoAdmissiblePair();
        return best;
    }

private:
    struct IntRange {
        int lo, hi;
        struct It {
            int v;
            int operator*() const { return v; }
            It& operator++() {
                ++v;
                return *this;
            }
            bool operator!=(const It& o) const { return v != o.v; }
        };
        It begin() const { return {lo}; }
        It end() const { return {hi + 1}; }
    };

    IntRange range(Anchor a) const {
        if (a == Anchor::Onset) return {tb_lo_, te_hi_ - min_dur_};
        return {tb_lo_ + min_dur_, te_hi_};
    }
    static std::size_t idx(int t) { return static_cast<std::size_t>(t); }

    int T_ = 0, tb_lo_ = 0, te_hi_ = 0, min_dur_ = 1, max_dur_ = 0;
    double constant_ = 0.0;
    std::vector<double> onset_, offset_, duration_, inside_;
};

}  // namespace

Decoded decode(const FramePrefixSums& sums, const Model& model) {
    PairScorer scorer(sums, model);
    return scorer.argmax([](int, int) { return 0.0; });
}

Decoded decode(const AcousticFrameSequence& seq, const Model& model) { return decode(FramePrefixSums(seq), model); }

Decoded decode_loss_augmented(const FramePrefixSums& sums, const Model& model, OnsetOffsetPair target,
                              double epsilon, const LossParams& loss) {
    PairScorer scorer(sums, model);
    return scorer.argmax([&](int tb, int te) { return epsilon * task_loss(target, {tb, te}, loss); });
}

Decoded decode_loss_augmented(const AcousticFrameSequence& seq, const Model& model, OnsetOffsetPair target,
                              double epsilon, const LossParams& loss) {
    return decode_loss_augmented(FramePrefixSums(seq), model, target, epsilon, loss);
}

}  // namespace vowelseg
