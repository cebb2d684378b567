// Independent reference implementations used as test oracles. Nothing here
// calls the prefix-sum or decomposed-score code paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "vowelseg/decode.hpp"
#include "vowelseg/featfunc.hpp"
#include "vowelseg/features.hpp"

namespace vstest {

using namespace vowelseg;

inline AcousticFrameSequence random_sequence(std::mt19937_64& rng, std::size_t T, bool classifier = true) {
    AcousticFrameSequence seq(T, 0.005);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto feat = static_cast<Feature>(f);
        for (std::size_t t = 1; t <= T; ++t) {
            double v = gauss(rng);
            if (feat == Feature::VRapt || feat == Feature::F0Hat || is_classifier_feature(feat)) v = unit(rng);
            if (feat >= Feature::D1) v = std::abs(v);
            if (!classifier && is_classifier_feature(feat)) v = kNoClassifierFill;
            seq.at(t, feat) = v;
        }
    }
    seq.set_has_classifier_features(classifier);
    return seq;
}

inline double naive_mean(const AcousticFrameSequence& s, Feature f, int t1, int t2) {
    double sum = 0.0;
    for (int t = t1; t <= t2; ++t) sum += s.at(static_cast<std::size_t>(t), f);
    return sum / (t2 - t1 + 1);
}

inline double naive_normal(double d, double mu, double s2) {
    return std::exp(-(d - mu) * (d - mu) / (2.0 * s2)) / std::sqrt(2.0 * std::numbers::pi * s2);
}

inline double naive_gamma(double d, double k, double theta) {
    return std::pow(d, k - 1.0) * std::exp(-d / theta) / (std::tgamma(k) * std::pow(theta, k));
}

inline std::vector<double> naive_phi(const AcousticFrameSequence& s, OnsetOffsetPair p, const FeatureMapLayout& layout,
                                     const DurationPriorParams& pr, const Normalization* norm = nullptr) {
    std::vector<double> out;
    for (const auto& e : layout.entries()) {
        double v = 0.0;
        if (auto* pt = std::get_if<PointEntry>(&e)) {
            v = s.at(static_cast<std::size_t>(pt->anchor == Anchor::Onset ? p.onset : p.offset), pt->feature);
        } else if (auto* w = std::get_if<WindowDiffEntry>(&e)) {
            const int a = (w->anchor == Anchor::Onset ? p.onset : p.offset) + w->offset;
            v = naive_mean(s, w->feature, a - w->delta, a - 1) - naive_mean(s, w->feature, a, a + w->delta - 1);
        } else if (auto* m = std::get_if<IntervalMeanEntry>(&e)) {
            const double inside = naive_mean(s, m->feature, p.onset, p.offset);
            v = m->side == Side::Before ? inside - naive_mean(s, m->feature, p.onset - m->delta, p.onset - 1)
                                        : inside - naive_mean(s, m->feature, p.offset + 1, p.offset + m->delta);
        } else {
            const auto& d = std::get<DurationPriorEntry>(e);
            const double dur = p.duration();
            v = d.kind == PriorKind::Normal ? naive_normal(dur, pr.mu, pr.sigma2) : naive_gamma(dur, pr.k, pr.theta);
        }
        out.push_back(v);
    }
    if (norm) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - norm->mean[i]) / norm->stddev[i];
    }
    return out;
}

inline double naive_loss(OnsetOffsetPair t, OnsetOffsetPair p, double tb, double te) {
    return std::max(0.0, std::abs(p.onset - t.onset) - tb) + std::max(0.0, std::abs(p.offset - t.offset) - te);
}

/// Double loop over every admissible pair, phi re-evaluated from scratch.
inline Decoded naive_decode(const AcousticFrameSequence& s, const Model& m, std::optional<OnsetOffsetPair> target = {},
                            double eps = 0.0) {
    const int T = static_cast<int>(s.num_frames());
    const auto& c = m.constraints;
    Decoded best{{0, 0}, -std::numeric_limits<double>::infinity()};
    bool found = false;
    for (int tb = 1; tb <= T; ++tb) {
        for (int te = tb + 1; te <= T; ++te) {
            const int d = te - tb;
            if (tb - c.margin_before < 1 || te + c.margin_after > T || d < c.min_duration) continue;
            if (c.max_duration != 0 && d > c.max_duration) continue;
            const auto phi = naive_phi(s, {tb, te}, m.layout, m.priors, m.norm());
            double score = 0.0;
            for (std::size_t i = 0; i < phi.size(); ++i) score += m.weights[i] * phi[i];
            if (target) score += eps * naive_loss(*target, {tb, te}, m.loss_params.tau_b, m.loss_params.tau_e);
            if (!found || score > best.score) {
                best = {{tb, te}, score};
                found = true;
            }
        }
    }
    return best;
}

inline DurationPriorParams random_priors(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu(8.0, 40.0), rel(0.15, 0.6);
    DurationPriorParams p;
    p.mu = mu(rng);
    const double sd = p.mu * rel(rng);
    p.sigma2 = sd * sd;
    p.k = p.mu * p.mu / p.sigma2;
    p.theta = p.sigma2 / p.mu;
    return p;
}

/// Random model and constraints admitting at least one pair in T frames.
inline Model random_model(std::mt19937_64& rng, std::size_t T, bool classifier, bool normalize) {
    // Extra margin is capped by the slack T leaves beyond a one-frame pair.
    const int slack = static_cast<int>(T) - 2 - kRequiredMarginBefore - kRequiredMarginAfter;
    const int extra = std::clamp(slack / 2, 0, 3);
    std::uniform_int_distribution<int> mb(kRequiredMarginBefore, kRequiredMarginBefore + extra);
    std::uniform_int_distribution<int> ma(kRequiredMarginAfter, kRequiredMarginAfter + extra);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Model m;
    m.layout = FeatureMapLayout::build(classifier);
    m.constraints.margin_before = mb(rng);
    m.constraints.margin_after = ma(rng);
    const int room = static_cast<int>(T) - 1 - m.constraints.margin_before - m.constraints.margin_after;
    m.constraints.min_duration = std::uniform_int_distribution<int>(1, std::max(1, std::min(8, room)))(rng);
    if (unit(rng) < 0.4) {
        m.constraints.max_duration =
            m.constraints.min_duration + std::uniform_int_distribution<int>(0, 30)(rng);
    }
    m.priors = random_priors(rng);
    m.loss_params = {static_cast<double>(std::uniform_int_distribution<int>(0, 2)(rng)),
                     static_cast<double>(std::uniform_int_distribution<int>(0, 3)(rng))};
    m.weights.resize(m.layout.size());
    for (double& w : m.weights) w = gauss(rng);
    if (normalize) {
        Normalization n;
        for (std::size_t i = 0; i < m.layout.size(); ++i) {
            n.mean.push_back(gauss(rng));
            n.stddev.push_back(0.2 + 2.0 * unit(rng));
        }
        m.normalization = n;
    }
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("vowelseg_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace vstest
